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

// Acceptance checks. Prints one PASS/FAIL line per criterion; pass criterion
// numbers as arguments to run a subset. Exit status is nonzero if any
// selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spkadapt/adapt.h"
#include "spkadapt/corpus.h"
#include "spkadapt/decode.h"
#include "spkadapt/frontend.h"
#include "spkadapt/gradcheck.h"
#include "spkadapt/layers.h"
#include "spkadapt/losses.h"
#include "spkadapt/model.h"
#include "spkadapt/optim.h"
#include "spkadapt/pipeline.h"
#include "spkadapt/score.h"
#include "spkadapt/specaug.h"
#include "spkadapt/tokenizer.h"
#include "spkadapt/trainer.h"
#include "test_util.h"

using namespace spkadapt;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

Matrix randn(int r, int c, Rng& rng) {
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (auto& v : m.storage()) v = n(rng);
  return m;
}

SpeakerEmbedding random_embedding(Rng& rng, EmbeddingScope scope) {
  std::normal_distribution<double> n;
  SpeakerEmbedding e;
  e.vector.resize(kEmbeddingDim);
  for (auto& v : e.vector) v = n(rng);
  e.scope = scope;
  e.id = e.speaker = "spk";
  return e;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1 -------------------------------------------------------------------------
Outcome shapes() {
  Rng rng(101);
  std::uniform_int_distribution<int> len(7, 400);
  ModelConfig mc = ModelConfig::desk();
  mc.vocab_size = 10;
  ParamStore params;
  init_model(params, mc, rng);
  init_down_projection(params, rng);
  int ok = 0;
  const int cases = 1000;
  for (int i = 0; i < cases; ++i) {
    const int t = len(rng);
    const Matrix x = randn(t, kFeatureDim, rng);
    const SpeakerEmbedding e = random_embedding(rng, EmbeddingScope::kUtterance);
    AdaptConfig ac;
    ac.mode = AdaptMode::kCat;
    const auto prepared = prepare_batch({&x}, {&e}, ac, SpecAugPolicy{}, nullptr, false);
    Graph g;
    const bool joint = join(x, e.vector).cols() == 595;
    const bool cat = adapt_input(g, params, prepared[0], AdaptMode::kCat).cols() == 166;
    Var add = adapt_input(g, params, prepared[0], AdaptMode::kAdd);
    const bool add_w = add.cols() == 83;
    const int want = ((t - 3) / 2 + 1 - 3) / 2 + 1;
    const bool sub = conv_subsample(g, params, mc, add).rows() == want;
    ok += joint && cat && add_w && sub && add.rows() == t;
  }
  return {ok == cases, std::to_string(ok) + "/" + std::to_string(cases) + " cases"};
}

// 2 -------------------------------------------------------------------------
Outcome gradients() {
  Rng rng(202);
  std::vector<std::string> lines;
  bool pass = true;
  auto run = [&](const std::string& name, ParamStore p, const LossBuilder& fn) {
    const GradCheckResult r = grad_check(p, fn, rng);
    const bool good = r.max_rel_error < 1e-4 && r.coords_checked >= 200;
    pass = pass && good;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s %.1e/%d", name.c_str(), r.max_rel_error, r.coords_checked);
    lines.push_back(buf);
  };
  std::uniform_int_distribution<int> tok(0, 9);
  std::vector<int> targets(12);
  for (auto& t : targets) t = tok(rng);

  {  // down-projection inside cat injection
    ParamStore p;
    init_down_projection(p, rng);
    const Matrix x = randn(12, 83, rng), e = randn(12, 512, rng), head = randn(166, 10, rng);
    run("down-proj", p, [&](Graph& g, const ParamStore& ps) {
      return attention_ce_loss(matmul(adapt_input(g, ps, {x, e}, AdaptMode::kCat), g.constant(head)), targets,
                               0.1);
    });
  }
  {  // self-attention block with its layer norm and feed-forward
    ParamStore p;
    init_attention(p, "att", 16, rng);
    init_layer_norm(p, "ln", 16);
    init_feed_forward(p, "ff", 16, 24, rng);
    const Matrix x = randn(12, 16, rng), head = randn(16, 10, rng);
    run("attention", p, [&](Graph& g, const ParamStore& ps) {
      Var h = g.constant(x);
      h = layer_norm_layer(g, ps, "ln", add(h, multi_head_attention(g, ps, "att", h, h, 2, nullptr, 0.0)));
      h = feed_forward(g, ps, "ff", h, 0.0);
      return attention_ce_loss(matmul(h, g.constant(head)), targets, 0.1);
    });
  }
  {  // layer norm, input and affine parameters
    ParamStore p;
    init_layer_norm(p, "ln", 16);
    p["x"] = randn(12, 16, rng);
    for (auto& [k, v] : p) {
      if (k != "x") {
        for (auto& z : v.storage()) z += 0.3 * std::normal_distribution<double>()(rng);
      }
    }
    const Matrix head = randn(16, 10, rng);
    run("layernorm", p, [&](Graph& g, const ParamStore& ps) {
      return attention_ce_loss(matmul(layer_norm_layer(g, ps, "ln", g.param(ps, "x")), g.constant(head)),
                               std::vector<int>(targets.begin(), targets.begin() + 12), 0.1);
    });
  }
  {  // convolutional subsampler
    ModelConfig mc = ModelConfig::desk();
    mc.vocab_size = 10;
    mc.conv_channels = 4;
    mc.d_model = 16;
    ParamStore all, p;
    init_model(all, mc, rng);
    for (auto& [k, v] : all) {
      if (k.rfind("subsample.", 0) == 0) p[k] = v;
    }
    const Matrix x = randn(23, 83, rng), head = randn(16, 10, rng);
    run("conv", p, [&](Graph& g, const ParamStore& ps) {
      Var h = conv_subsample(g, ps, mc, g.constant(x));
      return attention_ce_loss(matmul(h, g.constant(head)),
                               std::vector<int>(targets.begin(), targets.begin() + h.rows()), 0.1);
    });
  }
  const ParamStore logits{{"z", randn(20, 12, rng)}};
  std::vector<int> ce_targets(20);
  for (auto& t : ce_targets) t = tok(rng);
  LossBuilder ce = [&](Graph& g, const ParamStore& ps) { return attention_ce_loss(g.param(ps, "z"), ce_targets, 0.1); };
  run("ce", logits, ce);
  run("ctc", ParamStore{{"z", randn(30, 8, rng)}}, [](Graph& g, const ParamStore& ps) {
    return ctc_loss(log_softmax_rows(g.param(ps, "z")), {1, 3, 3, 5, 2}, 0).loss;
  });

  // negative control: one flipped gradient entry must be caught
  ParamStore p = logits;
  GradCheckOptions bad;
  bad.corrupt = [](Gradients& gr) { gr["z"].data()[7] = -gr["z"].data()[7] + 0.01; };
  bad.coords_per_param = 240;
  const double fault = grad_check(p, ce, rng, bad).max_rel_error;
  const bool caught = fault > 1e-2;
  pass = pass && caught;
  std::string detail;
  for (const auto& l : lines) detail += l + ", ";
  return {pass, detail + "fault " + (caught ? "detected" : "MISSED") + fmt(" (%.2g)", fault)};
}

// 3 -------------------------------------------------------------------------
Outcome ctc_oracle() {
  Rng rng(303);
  std::normal_distribution<double> nd(0.0, 2.0);
  int checked = 0, bad = 0, infeasible = 0;
  double worst = 0.0;
  for (int v = 1; v <= 3; ++v) {  // labels 1..v plus blank 0
    std::vector<std::vector<int>> targets = {{}};
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (targets[i].size() == 3) continue;
      for (int l = 1; l <= v; ++l) {
        auto t = targets[i];
        t.push_back(l);
        targets.push_back(t);
      }
    }
    for (int t_len = 1; t_len <= 6; ++t_len) {
      for (int rep = 0; rep < 50; ++rep) {
        Matrix lp(t_len, v + 1);
        for (int r = 0; r < t_len; ++r) {
          double mx = -1e300, s = 0.0;
          for (int c = 0; c <= v; ++c) mx = std::max(mx, lp(r, c) = nd(rng));
          for (int c = 0; c <= v; ++c) s += std::exp(lp(r, c) - mx);
          for (int c = 0; c <= v; ++c) lp(r, c) -= mx + std::log(s);
        }
        // probability of every labelling, by enumerating all paths once
        std::map<std::vector<int>, double> mass;
        std::vector<int> path(t_len, 0);
        while (true) {
          std::vector<int> lab;
          int prev = -1;
          double logp = 0.0;
          for (int t = 0; t < t_len; ++t) {
            logp += lp(t, path[t]);
            if (path[t] != 0 && path[t] != prev) lab.push_back(path[t]);
            prev = path[t];
          }
          mass[lab] += std::exp(logp);
          int i = 0;
          while (i < t_len && ++path[i] == v + 1) path[i++] = 0;
          if (i == t_len) break;
        }
        for (const auto& target : targets) {
          const CtcResult r = ctc_forward_backward(lp, target, 0);
          const auto it = mass.find(target);
          ++checked;
          if (it == mass.end()) {
            ++infeasible;
            bad += r.feasible || !std::isinf(r.nll);
            continue;
          }
          const double err = std::abs(r.nll + std::log(it->second));
          worst = std::max(worst, err);
          bad += !(err < 1e-6);
        }
      }
    }
  }
  return {bad == 0, std::to_string(checked) + " cases (" + std::to_string(infeasible) +
                        " infeasible), max |diff| " + fmt("%.2g", worst) + ", " + std::to_string(bad) + " bad"};
}

// 4 -------------------------------------------------------------------------
int plain_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Outcome wer_oracle() {
  Rng rng(404);
  std::uniform_int_distribution<int> rl(1, 12), hl(0, 12), w(0, 3);
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> ref(rl(rng)), hyp(hl(rng));
    for (auto& s : ref) s = std::string(1, static_cast<char>('a' + w(rng)));
    for (auto& s : hyp) s = std::string(1, static_cast<char>('a' + w(rng)));
    const double want = 100.0 * plain_edit_distance(ref, hyp) / static_cast<double>(ref.size());
    mismatches += align(ref, hyp).rate() != want;
  }
  const bool anchors = wer("a b c", "a b c") == 0.0 && std::abs(wer("a b c", "a x c") - 33.33) < 0.005 &&
                       wer("a", "b c") == 200.0;
  return {mismatches == 0 && anchors,
          std::to_string(mismatches) + " mismatches over 200 pairs, anchors " + (anchors ? "ok" : "WRONG")};
}

// 5 -------------------------------------------------------------------------
Outcome normalization() {
  Rng rng(505);
  std::vector<Matrix> batch = {randn(7, 512, rng), randn(11, 512, rng)};
  const auto f = l2_normalize(batch, NormAxis::kF);
  const auto ff = l2_normalize(f, NormAxis::kF);
  double unit_err = 0.0, idem = 0.0;
  for (std::size_t b = 0; b < f.size(); ++b) {
    for (int t = 0; t < f[b].rows(); ++t) {
      double s = 0.0;
      for (double v : f[b].row(t)) s += v * v;
      unit_err = std::max(unit_err, std::abs(std::sqrt(s) - 1.0));
    }
    idem = std::max(idem, max_abs_diff(f[b], ff[b]));
  }
  // constant embedding over T frames: every entry becomes sign(e)/sqrt(T)
  std::uniform_real_distribution<double> mag(0.05, 1.0);
  std::vector<double> e(512);
  for (auto& v : e) v = (rng() % 2 ? 1.0 : -1.0) * mag(rng);
  double t_err = 0.0;
  for (int t : {1, 5, 50}) {
    Matrix m(t, 512);
    for (int r = 0; r < t; ++r) std::copy(e.begin(), e.end(), m.row(r).begin());
    const Matrix n = l2_normalize({m}, NormAxis::kT)[0];
    for (int r = 0; r < t; ++r) {
      for (int d = 0; d < 512; ++d) {
        t_err = std::max(t_err, std::abs(n(r, d) - (e[d] > 0 ? 1.0 : -1.0) / std::sqrt(static_cast<double>(t))));
      }
    }
  }
  // B = 1 with entries away from zero: every entry is +-1 and a warning is raised
  int warnings = 0;
  Matrix single(9, 512);
  for (auto& v : single.storage()) v = (rng() % 2 ? 1.0 : -1.0) * mag(rng);
  set_warning_sink([&](const std::string&) { ++warnings; });
  const Matrix b1 = l2_normalize({single}, NormAxis::kB)[0];
  set_warning_sink(nullptr);
  double b_err = 0.0;
  for (double v : b1.storage()) b_err = std::max(b_err, std::abs(std::abs(v) - 1.0));
  const bool pass = unit_err <= 1e-6 && idem <= 1e-6 && t_err <= 1e-6 && b_err <= 1e-6 && warnings == 1;
  char buf[200];
  std::snprintf(buf, sizeof buf, "F unit %.1e idem %.1e, T %.1e, B=1 %.1e with %d warning(s)", unit_err, idem, t_err,
                b_err, warnings);
  return {pass, buf};
}

// 6 -------------------------------------------------------------------------
Outcome specaugment() {
  Rng rng(606);
  const Matrix x = randn(300, 83, rng);
  SpecAugPolicy off;
  off.enabled = false;
  bool identity = true;
  for (int i = 0; i < 20; ++i) identity = identity && spec_augment(x, off, rng) == x;

  const SpecAugPolicy p;
  int budget_bad = 0, untouched_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    Rng r1(1000 + i), r2(1000 + i);
    const auto fm = draw_freq_masks(83, p, r1);
    const auto tm = draw_time_masks(300, p, r1);
    int fw = 0, tw = 0;
    std::vector<char> col(83, 0), row(300, 0);
    for (const auto& s : fm) {
      fw += s.width;
      budget_bad += s.width < 0 || s.width > p.max_freq_width || s.start < 0 || s.start + s.width > 83;
      for (int c = s.start; c < s.start + s.width; ++c) col[c] = 1;
    }
    for (const auto& s : tm) {
      tw += s.width;
      budget_bad += s.width < 0 || s.width > p.time_width_bound(300) || s.start < 0 || s.start + s.width > 300;
      for (int r = s.start; r < s.start + s.width; ++r) row[r] = 1;
    }
    budget_bad += fm.size() != static_cast<std::size_t>(p.n_freq_masks) ||
                  tm.size() != static_cast<std::size_t>(p.n_time_masks) || fw > p.n_freq_masks * p.max_freq_width ||
                  tw > p.n_time_masks * p.time_width_bound(300);
    const Matrix y = spec_augment(x, p, r2);
    for (int r = 0; r < 300; ++r) {
      for (int c = 0; c < 83; ++c) {
        if (row[r] || col[c]) {
          untouched_bad += y(r, c) != 0.0;
        } else {
          untouched_bad += std::memcmp(y.data() + r * 83 + c, x.data() + r * 83 + c, sizeof(double)) != 0;
        }
      }
    }
  }

  // joint 595-wide matrix: find a draw whose masks sit wholly in [83, 595)
  const Matrix j = randn(40, 595, rng);
  SpecAugPolicy jp = SpecAugPolicy{}.scaled_to(595);
  jp.n_time_masks = 0;
  bool landed = false;
  for (std::uint64_t seed = 0; seed < 2000 && !landed; ++seed) {
    Rng r1(seed), r2(seed);
    const auto fm = draw_freq_masks(595, jp, r1);
    bool inside = true;
    int w = 0;
    for (const auto& s : fm) {
      inside = inside && (s.width == 0 || s.start >= 83);
      w += s.width;
    }
    if (!inside || w == 0) continue;
    const Matrix y = spec_augment(j, jp, r2);
    landed = y.col_slice(0, 83) == j.col_slice(0, 83) && !(y.col_slice(83, 512) == j.col_slice(83, 512));
  }
  const bool pass = identity && budget_bad == 0 && untouched_bad == 0 && landed;
  return {pass, std::string("identity ") + (identity ? "ok" : "BROKEN") + ", " + std::to_string(budget_bad) +
                    " budget violations and " + std::to_string(untouched_bad) +
                    " wrong entries over 1000 draws, embedding-only joint mask " + (landed ? "found" : "NOT found")};
}

// 7 -------------------------------------------------------------------------
Outcome noam() {
  const int d = 256, w = 25000;
  const double factor = 5.0;
  const double peak = noam_lr(w, d, w, factor);
  const double closed = factor / std::sqrt(static_cast<double>(d)) / std::sqrt(static_cast<double>(w));
  const bool closed_ok = std::abs(peak - closed) <= 1e-12;
  const double quarter = noam_lr(w / 4, d, w, factor) / peak;
  const bool quarter_ok = std::abs(quarter - 0.5) <= 1e-12;
  bool mono = true;
  for (long s = 1; s < 10L * w; ++s) {
    const double a = noam_lr(s, d, w, factor), b = noam_lr(s + 1, d, w, factor);
    mono = mono && (s < w ? b > a : b < a);
  }
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "closed form %s (|diff| %.1e), lr(w/4)/peak = %.6f vs 0.5 required, monotone up/down over 1..10w %s",
                closed_ok ? "ok" : "WRONG", std::abs(peak - closed), quarter, mono ? "ok" : "BROKEN");
  return {closed_ok && quarter_ok && mono, buf};
}

// 8 -------------------------------------------------------------------------
Outcome memorization() {
  TempDir dir("accept_mem");
  CorpusSpec spec;
  spec.n_speakers = 4;
  spec.utterances_per_speaker = 5;
  spec.min_duration_s = 1.5;
  spec.seed = 3;
  const Manifest m = generate_corpus(spec, dir.path());
  const auto raw = extract_manifest_features(m);
  CmvnStats st;
  for (const auto& [id, f] : raw) st.accumulate(f);
  std::vector<Matrix> feats;
  for (const auto& [id, f] : raw) feats.push_back(st.apply(f));
  std::vector<std::string> transcripts;
  for (const auto& r : m.records) transcripts.push_back(r.transcript);
  const Vocab vocab = Vocab::characters(transcripts);
  std::vector<TrainExample> data;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    TrainExample ex;
    ex.utt_id = m.records[i].utt_id;
    ex.features = &feats[i];
    ex.target = vocab.encode(m.records[i].transcript);
    data.push_back(std::move(ex));
  }
  ModelConfig mc = ModelConfig::desk();
  mc.vocab_size = vocab.size();
  TrainConfig tc;
  tc.epochs = 100;
  tc.batch_size = 2;
  tc.warmup_steps = 100;
  tc.lr_factor = 0.3;
  tc.specaug.enabled = false;
  const TrainResult r = train(data, {}, mc, tc, vocab);
  ErrorCounts total;
  for (const auto& ex : data) {
    const Hypothesis h = beam_search(r.last, mc, vocab, *ex.features, DecodeConfig{});
    std::vector<std::string> a, b;
    for (int t : ex.target) a.push_back(std::to_string(t));
    for (int t : h.ids) b.push_back(std::to_string(t));
    total += align(a, b);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d utterances, %ld tokens, token error %.2f%% after 100 epochs (final loss %.3f)",
                static_cast<int>(data.size()), total.ref, total.rate(), r.log.back().train_loss);
  return {total.rate() <= 2.0, buf};
}

// 9 -------------------------------------------------------------------------
Outcome directional() {
  TempDir dir("accept_dir");
  std::vector<double> base, cat;
  for (std::uint64_t seed : {1, 2, 3}) {
    RunConfig c;
    c.root = dir.path() / ("seed" + std::to_string(seed));
    c.seed = seed;
    c.train.seed = c.x_embedder.seed = c.s_embedder.seed = seed;
    c.corpus.n_speakers = 8;
    c.corpus.utterances_per_speaker = 15;
    c.corpus.color_strength = 2.0;
    c.dev_per_speaker = 3;
    c.train.epochs = 30;
    c.train.specaug.enabled = true;
    c.train.adapt.norm_axis = NormAxis::kT;
    c.systems = {"baseline", "s_cat"};
    const ScoreReport r = run_experiment(c);
    base.push_back(r.at("baseline", "overall").rate());
    cat.push_back(r.at("s_cat", "overall").rate());
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[1];
  };
  const double mb = median(base), mc = median(cat);
  char buf[200];
  std::snprintf(buf, sizeof buf, "dev WER baseline %.2f/%.2f/%.2f (median %.2f), s_cat %.2f/%.2f/%.2f (median %.2f)",
                base[0], base[1], base[2], mb, cat[0], cat[1], cat[2], mc);
  return {mc <= mb, buf};
}

// 10 ------------------------------------------------------------------------
Outcome bucket_report_check() {
  Manifest m;
  m.records = {{"u1", "s1", "u1.wav", 3.0, "a b c d"},
               {"u2", "s1", "u2.wav", 4.0, "e f"},
               {"u3", "s2", "u3.wav", 8.0, "a b c d e f g h"},
               {"u4", "s2", "u4.wav", 20.0, "x y"}};
  const std::vector<SystemHyps> systems = {
      {"sysA", {{"u1", "a b c d"}, {"u2", "e"}, {"u3", "a b c d e f g h"}, {"u4", "x y z w"}}},
      {"sysB", {{"u1", "a x c d"}, {"u2", "e f g"}, {"u3", "b c d e f g h"}, {"u4", ""}}}};
  const std::vector<double> edges = {5.0, 15.0};

  // membership, including durations on the edges
  Manifest edge_m;
  const std::vector<std::pair<double, int>> probe = {{0.5, 0}, {4.999, 0}, {5.0, 1}, {14.99, 1}, {15.0, 2}, {30.0, 2}};
  for (std::size_t i = 0; i < probe.size(); ++i) {
    edge_m.records.push_back({"p" + std::to_string(i), "s", "p.wav", probe[i].first, "x"});
  }
  const auto parts = split_by_duration(edge_m, edges);
  bool member = parts.size() == 3;
  for (std::size_t i = 0; member && i < probe.size(); ++i) {
    const auto& recs = parts[probe[i].second].records;
    member = std::any_of(recs.begin(), recs.end(), [&](const UtteranceRecord& r) { return r.utt_id == edge_m.records[i].utt_id; });
  }

  const ScoreReport r = bucket_report(m, systems, edges, ScoreUnit::kWord);
  // hand counts: (errors, reference words) per system and bucket
  const std::map<std::pair<std::string, std::string>, std::pair<long, long>> hand = {
      {{"sysA", "less_5"}, {1, 6}},   {{"sysA", "5_15"}, {0, 8}},   {{"sysA", "15_above"}, {2, 2}},
      {{"sysA", "overall"}, {3, 16}}, {{"sysB", "less_5"}, {2, 6}}, {{"sysB", "5_15"}, {1, 8}},
      {{"sysB", "15_above"}, {2, 2}}, {{"sysB", "overall"}, {5, 16}}};
  bool counts = true;
  for (const auto& [key, v] : hand) {
    const ErrorCounts& c = r.at(key.first, key.second);
    counts = counts && c.errors() == v.first && c.ref == v.second &&
             c.rate() == 100.0 * static_cast<double>(v.first) / static_cast<double>(v.second);
  }
  std::ifstream golden(std::string(SPKADAPT_GOLDEN_DIR) + "/bucket_report.txt");
  std::stringstream want;
  want << golden.rdbuf();
  const bool bytes = golden.good() && r.table() + "\n" + r.csv() == want.str();
  return {member && counts && bytes, std::string("membership ") + (member ? "ok" : "WRONG") + ", pooled counts " +
                                         (counts ? "ok" : "WRONG") + ", golden " + (bytes ? "identical" : "DIFFERS")};
}

// 11 ------------------------------------------------------------------------
Outcome averaging() {
  Rng rng(1111);
  ParamStore w{{"a", randn(3, 4, rng)}, {"b", randn(1, 5, rng)}};
  ParamStore neg = w;
  for (auto& [k, v] : neg) {
    for (auto& z : v.storage()) z = -z;
  }
  const ParamStore same = average_params({&w, &w, &w});
  const ParamStore zero = average_params({&w, &neg});
  bool identity = true, cancels = true;
  for (const auto& [k, v] : w) {
    identity = identity && same.at(k) == v;
    cancels = cancels && zero.at(k) == Matrix(v.rows(), v.cols());
  }
  const auto best = select_best({5, 4, 3, 2, 1}, 3);
  std::vector<Checkpoint> ck(5);
  for (int i = 0; i < 5; ++i) {
    ck[i].dev_loss = 5 - i;
    ck[i].params["a"] = Matrix(1, 1, static_cast<double>(i + 1));
  }
  const double avg = average_checkpoints(ck, 3)["a"](0, 0);
  const bool selection = best == std::vector<int>{4, 3, 2} && avg == 4.0;
  return {identity && cancels && selection, std::string("identity ") + (identity ? "exact" : "WRONG") + ", {W,-W} " +
                                                (cancels ? "-> 0" : "WRONG") + ", best-3 of {5,4,3,2,1} " +
                                                (selection ? "= epochs 5,4,3, mean 4" : "WRONG")};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*fn)();
  };
  const std::vector<Criterion> all = {
      {1, "shape suite", shapes},           {2, "gradient suite", gradients},
      {3, "CTC oracle", ctc_oracle},        {4, "WER oracle", wer_oracle},
      {5, "normalization suite", normalization}, {6, "SpecAugment suite", specaugment},
      {7, "Noam schedule", noam},           {8, "memorization sanity", memorization},
      {9, "directional adaptation", directional}, {10, "duration-bucket report", bucket_report_check},
      {11, "checkpoint averaging", averaging}};
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %-24s %s  %s [%.1f s]\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), s);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
