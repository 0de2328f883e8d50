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

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

#include "doctest.h"
#include "spkadapt/decode.h"
#include "spkadapt/layers.h"
#include "test_util.h"

using namespace spkadapt;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Matrix random_matrix(int r, int c, Rng& rng) {
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (auto& v : m.storage()) v = n(rng);
  return m;
}

Matrix random_log_probs(int t, int v, Rng& rng) {
  Matrix m = random_matrix(t, v, rng);
  for (int r = 0; r < t; ++r) {
    double s = 0.0;
    for (double x : m.row(r)) s += std::exp(x);
    for (double& x : m.row(r)) x -= std::log(s);
  }
  return m;
}

std::vector<int> collapse(const std::vector<int>& path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int s : path) {
    if (s != blank && s != prev) out.push_back(s);
    prev = s;
  }
  return out;
}

// Sums over every frame-level path: prefix = paths whose labelling starts
// with g, full = paths whose labelling is exactly g.
struct BruteCtc {
  double prefix;
  double full;
};

BruteCtc brute_ctc(const Matrix& lp, const std::vector<int>& g, int blank) {
  const int t_count = lp.rows(), v = lp.cols();
  double prefix = 0.0, full = 0.0;
  std::vector<int> path(t_count, 0);
  while (true) {
    const auto lab = collapse(path, blank);
    double logp = 0.0;
    for (int t = 0; t < t_count; ++t) logp += lp(t, path[t]);
    if (lab.size() >= g.size() && std::equal(g.begin(), g.end(), lab.begin())) {
      prefix += std::exp(logp);
      if (lab.size() == g.size()) full += std::exp(logp);
    }
    int k = 0;
    while (k < t_count && ++path[k] == v) path[k++] = 0;
    if (k == t_count) break;
  }
  return {std::log(prefix), std::log(full)};
}

ModelConfig tiny(int vocab) {
  ModelConfig c = ModelConfig::desk();
  c.vocab_size = vocab;
  c.d_model = 16;
  c.heads = 2;
  c.ffn_dim = 24;
  c.conv_channels = 3;
  c.dropout = 0.0;
  return c;
}

std::vector<double> att_log_probs(const ParamStore& p, const ModelConfig& cfg, const Matrix& memory,
                                  std::vector<int> in) {
  Graph g;
  Var y = log_softmax_rows(decode_forward(g, p, cfg, g.constant(memory), in));
  const auto r = y.value().row(y.rows() - 1);
  return {r.begin(), r.end()};
}

struct Fixture {
  Vocab vocab = Vocab::characters({"ab"});  // blank unk a b eos
  ModelConfig cfg = tiny(5);
  ParamStore params;
  Rng rng{21};
  Fixture() { init_model(params, cfg, rng); }
  Matrix input(int frames) { return random_matrix(frames, 83, rng); }
  Matrix memory(const Matrix& x) {
    Graph g;
    return encode(g, params, cfg, g.constant(x)).value();
  }
  Matrix ctc_lp(const Matrix& x) {
    Graph g;
    return ctc_log_probs(g, params, cfg, encode(g, params, cfg, g.constant(x))).value();
  }
};

}  // namespace

TEST_CASE("prefix scorer against path enumeration") {
  Rng rng(3);
  const int blank = 0, eos = 4;
  for (int trial = 0; trial < 4; ++trial) {
    const Matrix lp = random_log_probs(5, 4, rng);  // labels 1..3; eos is never a frame label
    CtcPrefixScorer sc(lp, blank, eos);
    for (const std::vector<int>& g : std::vector<std::vector<int>>{{1}, {2, 2}, {1, 3}, {3, 1, 3}, {2, 2, 2}}) {
      CtcPrefixState s = sc.initial();
      for (int c : g) s = sc.extend(s, c);
      const BruteCtc want = brute_ctc(lp, g, blank);
      CHECK(s.prefix_score == doctest::Approx(want.prefix).epsilon(1e-10));
      CHECK(sc.extend(s, eos).prefix_score == doctest::Approx(want.full).epsilon(1e-10));
    }
    CHECK(sc.extend(sc.initial(), eos).prefix_score == doctest::Approx(brute_ctc(lp, {}, blank).full));
  }
}

TEST_CASE("beam 1 equals an independent greedy loop") {
  Fixture f;
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix x = f.input(23);  // 5 subsampled frames
    const Matrix mem = f.memory(x);
    const Matrix lp = f.ctc_lp(x);
    REQUIRE(lp.rows() == 5);
    const double w = 0.3;
    const int eos = f.vocab.sos_eos();
    const int max_len = 3;

    std::vector<int> ids;
    double score = 0.0, psi = 0.0;
    while (true) {
      std::vector<int> in{eos};
      in.insert(in.end(), ids.begin(), ids.end());
      const auto att = att_log_probs(f.params, f.cfg, mem, in);
      int best = -1;
      double best_s = kNegInf, best_psi = 0.0;
      for (int c = 2; c <= eos; ++c) {
        if (c == eos ? ids.empty() : static_cast<int>(ids.size()) == max_len) continue;
        std::vector<int> h = ids;
        double p;
        if (c == eos) {
          p = brute_ctc(lp, h, 0).full;
        } else {
          h.push_back(c);
          p = brute_ctc(lp, h, 0).prefix;
        }
        const double s = score + (1 - w) * att[c] + w * (p - psi);
        if (s > best_s) {
          best_s = s;
          best = c;
          best_psi = p;
        }
      }
      score = best_s;
      psi = best_psi;
      if (best == eos) break;
      ids.push_back(best);
    }

    DecodeConfig dc;
    dc.beam = 1;
    dc.ctc_weight = w;
    dc.max_len_ratio = 0.6;  // floor(0.6 * 5) = 3
    const Hypothesis h = beam_search(f.params, f.cfg, f.vocab, x, dc);
    CHECK(h.ids == ids);
    CHECK(h.score == doctest::Approx(score).epsilon(1e-9));
  }
}

TEST_CASE("attention-only beam search is exact against enumeration") {
  Fixture f;
  const int eos = f.vocab.sos_eos();
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix x = f.input(27);
    const Matrix mem = f.memory(x);
    // every sequence over {a, b} of length 1..3 followed by eos
    double best = kNegInf;
    std::vector<int> best_ids;
    std::function<void(std::vector<int>, double)> walk = [&](std::vector<int> ids, double s) {
      std::vector<int> in{eos};
      in.insert(in.end(), ids.begin(), ids.end());
      const auto att = att_log_probs(f.params, f.cfg, mem, in);
      if (!ids.empty() && s + att[eos] > best) {
        best = s + att[eos];
        best_ids = ids;
      }
      if (ids.size() == 3) return;
      for (int c = 2; c < eos; ++c) {
        auto n = ids;
        n.push_back(c);
        walk(n, s + att[c]);
      }
    };
    walk({}, 0.0);

    DecodeConfig dc;
    dc.ctc_weight = 0.0;
    dc.max_len_ratio = 3.0 / subsampled_length(27) + 1e-9;
    dc.beam = 16;
    const Hypothesis h = beam_search(f.params, f.cfg, f.vocab, x, dc);
    CHECK(h.ids == best_ids);
    CHECK(h.score == doctest::Approx(best).epsilon(1e-10));
    dc.beam = 2;
    CHECK(beam_search(f.params, f.cfg, f.vocab, x, dc).score <= best + 1e-12);
  }
}

TEST_CASE("wider beams do not score worse") {
  Fixture f;
  int strictly_better = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const Matrix x = f.input(40 + 5 * trial);
    DecodeConfig dc;
    dc.beam = 1;
    const double s1 = beam_search(f.params, f.cfg, f.vocab, x, dc).score;
    dc.beam = 8;
    const Hypothesis h8 = beam_search(f.params, f.cfg, f.vocab, x, dc);
    CHECK(h8.score >= s1 - 1e-12);
    CHECK(!h8.ids.empty());
    CHECK(static_cast<int>(h8.ids.size()) <= subsampled_length(x.rows()));
    strictly_better += h8.score > s1 + 1e-12;
  }
  MESSAGE("beam 8 beat greedy on " << strictly_better << " of 8 inputs");
}

TEST_CASE("decode errors and hypothesis files") {
  Fixture f;
  DecodeConfig dc;
  CHECK_THROWS_AS(beam_search(f.params, f.cfg, f.vocab, Matrix(0, 83), dc), DataError);
  CHECK_THROWS_AS(beam_search(f.params, f.cfg, f.vocab, f.input(5), dc), DataError);
  dc.beam = 0;
  CHECK_THROWS_AS(beam_search(f.params, f.cfg, f.vocab, f.input(30), dc), UsageError);

  TempDir dir("hyps");
  std::vector<Hypothesis> hs(2);
  hs[0].utt_id = "u1";
  hs[0].score = -1.25;
  hs[0].text = "ab ba";
  hs[1].utt_id = "u2";
  hs[1].score = -3.5;
  hs[1].text = "";
  write_hypotheses(dir / "h.txt", hs);
  const auto back = read_hypotheses(dir / "h.txt");
  REQUIRE(back.size() == 2);
  CHECK(back[0].utt_id == "u1");
  CHECK(back[0].text == "ab ba");
  CHECK(back[0].score == -1.25);
  CHECK(back[1].text.empty());
  std::ofstream(dir / "bad.txt") << "u1 no tabs\n";
  CHECK_THROWS_AS(read_hypotheses(dir / "bad.txt"), DataError);
}
