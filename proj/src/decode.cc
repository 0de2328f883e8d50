// Copyright 2026 The spkadapt Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spkadapt/decode.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace spkadapt {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

struct Running {
  std::vector<int> ids;
  double score = 0.0;
  CtcPrefixState ctc;
};

struct Candidate {
  int hyp;
  int token;
  double score;
  CtcPrefixState ctc;
};

// Log-softmax of the decoder output for the next token after `ids`.
std::vector<double> next_token_log_probs(const ParamStore& params, const ModelConfig& model,
                                         const Vocab& vocab, const Matrix& memory,
                                         const std::vector<int>& ids) {
  Graph g;
  std::vector<int> in{vocab.sos_eos()};
  in.insert(in.end(), ids.begin(), ids.end());
  Var logits = decode_forward(g, params, model, g.constant(memory), in);
  const auto row = logits.value().row(logits.rows() - 1);
  double m = kNegInf;
  for (double v : row) m = std::max(m, v);
  double s = 0.0;
  for (double v : row) s += std::exp(v - m);
  const double lse = m + std::log(s);
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i] - lse;
  return out;
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam < 1) throw UsageError("beam must be >= 1");
  if (!(ctc_weight >= 0.0 && ctc_weight <= 1.0)) throw UsageError("ctc_weight must be in [0, 1]");
  if (!(max_len_ratio > 0.0)) throw UsageError("max_len_ratio must be positive");
  if (min_len < 0) throw UsageError("min_len must be >= 0");
}

std::string DecodeConfig::to_json() const {
  return nlohmann::json{{"beam", beam}, {"ctc_weight", ctc_weight}, {"max_len_ratio", max_len_ratio},
                        {"min_len", min_len}}
      .dump();
}

DecodeConfig DecodeConfig::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw UsageError("decode config is not a JSON object");
  DecodeConfig c;
  c.beam = j.value("beam", c.beam);
  c.ctc_weight = j.value("ctc_weight", c.ctc_weight);
  c.max_len_ratio = j.value("max_len_ratio", c.max_len_ratio);
  c.min_len = j.value("min_len", c.min_len);
  c.validate();
  return c;
}

CtcPrefixScorer::CtcPrefixScorer(const Matrix& log_probs, int blank, int eos)
    : lp_(log_probs), blank_(blank), eos_(eos) {}

CtcPrefixState CtcPrefixScorer::initial() const {
  const int t_count = lp_.rows();
  CtcPrefixState s;
  s.r_nonblank.assign(t_count, kNegInf);
  s.r_blank.resize(t_count);
  double acc = 0.0;
  for (int t = 0; t < t_count; ++t) {
    acc += lp_(t, blank_);
    s.r_blank[t] = acc;
  }
  s.prefix_score = 0.0;
  return s;
}

CtcPrefixState CtcPrefixScorer::extend(const CtcPrefixState& s, int token) const {
  const int t_count = lp_.rows();
  CtcPrefixState n;
  n.last = token;
  if (token == eos_) {
    n.r_nonblank = s.r_nonblank;
    n.r_blank = s.r_blank;
    n.prefix_score = log_add(s.r_nonblank[t_count - 1], s.r_blank[t_count - 1]);
    return n;
  }
  n.r_nonblank.assign(t_count, kNegInf);
  n.r_blank.assign(t_count, kNegInf);
  const bool empty_prefix = s.last < 0;
  if (empty_prefix) n.r_nonblank[0] = lp_(0, token);
  double psi = n.r_nonblank[0];
  for (int t = 1; t < t_count; ++t) {
    const double phi = token == s.last ? s.r_blank[t - 1] : log_add(s.r_blank[t - 1], s.r_nonblank[t - 1]);
    n.r_nonblank[t] = log_add(n.r_nonblank[t - 1], phi) + lp_(t, token);
    n.r_blank[t] = log_add(n.r_blank[t - 1], n.r_nonblank[t - 1]) + lp_(t, blank_);
    psi = log_add(psi, phi + lp_(t, token));
  }
  n.prefix_score = psi;
  return n;
}

Hypothesis beam_search(const ParamStore& params, const ModelConfig& model, const Vocab& vocab,
                       const Matrix& model_input, const DecodeConfig& cfg) {
  if (model_input.rows() == 0) throw DataError("cannot decode an empty input");
  cfg.validate();
  Graph g;
  Var mem = encode(g, params, model, g.constant(model_input));
  const Matrix memory = mem.value();
  const Matrix ctc_lp = ctc_log_probs(g, params, model, mem).value();
  const CtcPrefixScorer ctc(ctc_lp, vocab.blank(), vocab.sos_eos());
  const double w = cfg.ctc_weight;
  const bool use_ctc = w > 0.0;
  const int eos = vocab.sos_eos();
  const int max_len = std::max(1, static_cast<int>(std::floor(cfg.max_len_ratio * memory.rows())));

  std::vector<Running> running(1);
  if (use_ctc) running[0].ctc = ctc.initial();
  std::vector<Hypothesis> ended;

  for (int step = 0; step <= max_len && !running.empty(); ++step) {
    std::vector<Candidate> cands;
    for (int h = 0; h < static_cast<int>(running.size()); ++h) {
      const Running& r = running[h];
      const auto att = next_token_log_probs(params, model, vocab, memory, r.ids);
      const bool can_end = static_cast<int>(r.ids.size()) >= std::min(cfg.min_len, max_len);
      for (int c = vocab.unk() + 1; c <= eos; ++c) {
        if (c == eos ? !can_end : step == max_len) continue;
        Candidate cand{h, c, r.score + (use_ctc ? (1.0 - w) : 1.0) * att[c], {}};
        if (use_ctc) {
          cand.ctc = ctc.extend(r.ctc, c);
          cand.score += w * (cand.ctc.prefix_score - r.ctc.prefix_score);
        }
        cands.push_back(std::move(cand));
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    if (static_cast<int>(cands.size()) > cfg.beam) cands.resize(cfg.beam);
    std::vector<Running> next;
    for (auto& c : cands) {
      if (!std::isfinite(c.score)) continue;
      if (c.token == eos) {
        Hypothesis hyp;
        hyp.ids = running[c.hyp].ids;
        hyp.score = c.score;
        ended.push_back(std::move(hyp));
      } else {
        Running r;
        r.ids = running[c.hyp].ids;
        r.ids.push_back(c.token);
        r.score = c.score;
        r.ctc = std::move(c.ctc);
        next.push_back(std::move(r));
      }
    }
    running = std::move(next);
    // Scores never increase along a path, so a finished hypothesis that
    // beats every running one is final.
    if (!ended.empty() && !running.empty()) {
      double best_end = kNegInf, best_run = kNegInf;
      for (const auto& e : ended) best_end = std::max(best_end, e.score);
      for (const auto& r : running) best_run = std::max(best_run, r.score);
      if (best_end >= best_run) break;
    }
  }
  if (ended.empty()) throw NumericError("beam search produced no finite hypothesis");
  auto best = std::max_element(ended.begin(), ended.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return a.score < b.score;
  });
  Hypothesis out = *best;
  out.text = vocab.decode(out.ids);
  return out;
}

void write_hypotheses(const std::filesystem::path& path, const std::vector<Hypothesis>& hyps) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  char buf[64];
  for (const auto& h : hyps) {
    std::snprintf(buf, sizeof buf, "%.6f", h.score);
    out << h.utt_id << '\t' << buf << '\t' << h.text << '\n';
  }
}

std::vector<Hypothesis> read_hypotheses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open hypothesis file " + path.string());
  std::vector<Hypothesis> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto a = line.find('\t');
    const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": expected utt_id<TAB>score<TAB>text");
    }
    Hypothesis h;
    h.utt_id = line.substr(0, a);
    try {
      h.score = std::stod(line.substr(a + 1, b - a - 1));
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": bad score");
    }
    h.text = line.substr(b + 1);
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace spkadapt
