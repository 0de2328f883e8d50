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

#include "spkadapt/adapt.h"

#include <cmath>

#include "spkadapt/frontend.h"
#include "spkadapt/layers.h"

namespace spkadapt {

std::string to_string(AdaptMode m) {
  switch (m) {
    case AdaptMode::kNone: return "none";
    case AdaptMode::kAdd: return "add";
    case AdaptMode::kCat: return "cat";
  }
  return "?";
}

std::string to_string(NormAxis a) {
  switch (a) {
    case NormAxis::kNone: return "none";
    case NormAxis::kB: return "B";
    case NormAxis::kT: return "T";
    case NormAxis::kF: return "F";
  }
  return "?";
}

AdaptMode parse_adapt_mode(const std::string& s) {
  if (s == "none") return AdaptMode::kNone;
  if (s == "add") return AdaptMode::kAdd;
  if (s == "cat") return AdaptMode::kCat;
  throw UsageError("unknown adapt mode '" + s + "' (expected none|add|cat)");
}

NormAxis parse_norm_axis(const std::string& s) {
  if (s == "none") return NormAxis::kNone;
  if (s == "B" || s == "b") return NormAxis::kB;
  if (s == "T" || s == "t") return NormAxis::kT;
  if (s == "F" || s == "f") return NormAxis::kF;
  throw UsageError("unknown norm axis '" + s + "' (expected none|B|T|F)");
}

int AdaptConfig::input_dim() const { return mode == AdaptMode::kCat ? 2 * kFeatureDim : kFeatureDim; }

Matrix join(const Matrix& features, std::span<const double> emb) {
  if (features.cols() != kFeatureDim) {
    throw DataError("join: features have " + std::to_string(features.cols()) + " columns, expected 83");
  }
  if (emb.size() != static_cast<std::size_t>(kEmbeddingDim)) {
    throw DataError("join: embedding has " + std::to_string(emb.size()) + " dims, expected 512");
  }
  Matrix out(features.rows(), kJointDim);
  for (int r = 0; r < features.rows(); ++r) {
    for (int c = 0; c < kFeatureDim; ++c) out(r, c) = features(r, c);
    for (int d = 0; d < kEmbeddingDim; ++d) out(r, kFeatureDim + d) = emb[d];
  }
  return out;
}

std::vector<Matrix> l2_normalize(const std::vector<Matrix>& batch, NormAxis axis, double eps) {
  std::vector<Matrix> out = batch;
  if (axis == NormAxis::kNone || batch.empty()) return out;
  const int dim = batch[0].cols();
  if (axis == NormAxis::kF) {
    for (auto& m : out) {
      for (int t = 0; t < m.rows(); ++t) {
        double s = 0.0;
        for (double v : m.row(t)) s += v * v;
        const double n = std::sqrt(s) + eps;
        for (double& v : m.row(t)) v /= n;
      }
    }
  } else if (axis == NormAxis::kT) {
    for (auto& m : out) {
      for (int d = 0; d < dim; ++d) {
        double s = 0.0;
        for (int t = 0; t < m.rows(); ++t) s += m(t, d) * m(t, d);
        const double n = std::sqrt(s) + eps;
        for (int t = 0; t < m.rows(); ++t) m(t, d) /= n;
      }
    }
  } else {
    if (batch.size() == 1) {
      warn("B-axis embedding normalization with a single utterance reduces to sign(e)");
    }
    int max_t = 0;
    for (const auto& m : batch) max_t = std::max(max_t, m.rows());
    for (int t = 0; t < max_t; ++t) {
      for (int d = 0; d < dim; ++d) {
        double s = 0.0;
        for (const auto& m : batch) {
          if (t < m.rows()) s += m(t, d) * m(t, d);
        }
        const double n = std::sqrt(s) + eps;
        for (auto& m : out) {
          if (t < m.rows()) m(t, d) /= n;
        }
      }
    }
  }
  return out;
}

Matrix broadcast_embedding(const SpeakerEmbedding& e, int frames) {
  e.validate();
  Matrix out(frames, kEmbeddingDim);
  for (int t = 0; t < frames; ++t) std::copy(e.vector.begin(), e.vector.end(), out.row(t).begin());
  return out;
}

void init_down_projection(ParamStore& p, Rng& rng) {
  init_linear(p, kDownProjection, kFeatureDim, kEmbeddingDim, rng);
}

Matrix down_project(const Matrix& e, const Matrix& weight, const Matrix& bias) {
  Graph g;
  return linear(g.constant(e), g.constant(weight), g.constant(bias)).value();
}

Matrix inject(const Matrix& features, const Matrix& e83, AdaptMode mode) {
  if (mode == AdaptMode::kNone) throw UsageError("inject: mode none has nothing to inject");
  if (e83.cols() != features.cols() || (e83.rows() != 1 && e83.rows() != features.rows())) {
    throw DataError("inject: embedding shape does not match features");
  }
  auto erow = [&](int t) { return e83.row(e83.rows() == 1 ? 0 : t); };
  if (mode == AdaptMode::kAdd) {
    Matrix out = features;
    for (int t = 0; t < out.rows(); ++t) {
      auto e = erow(t);
      auto r = out.row(t);
      for (int c = 0; c < out.cols(); ++c) r[c] += e[c];
    }
    return out;
  }
  Matrix out(features.rows(), 2 * features.cols());
  for (int t = 0; t < out.rows(); ++t) {
    auto e = erow(t);
    for (int c = 0; c < features.cols(); ++c) {
      out(t, c) = features(t, c);
      out(t, features.cols() + c) = e[c];
    }
  }
  return out;
}

void check_scope(const SpeakerEmbedding& e, bool training) {
  const auto want = training ? EmbeddingScope::kSpeaker : EmbeddingScope::kUtterance;
  if (e.scope != want) {
    throw DataError(std::string(training ? "training" : "decoding") + " requires " +
                    to_string(want) + "-scope embeddings, got " + to_string(e.scope) +
                    " embedding '" + e.id + "'");
  }
}

std::vector<PreparedInput> prepare_batch(const std::vector<const Matrix*>& features,
                                         const std::vector<const SpeakerEmbedding*>& embeddings,
                                         const AdaptConfig& cfg, const SpecAugPolicy& policy,
                                         std::vector<Rng>* rngs, bool training) {
  const std::size_t n = features.size();
  const bool augment = training && policy.enabled;
  if (augment && (!rngs || rngs->size() != n)) {
    throw UsageError("prepare_batch: SpecAugment needs one rng per utterance");
  }
  for (const Matrix* f : features) {
    if (f->cols() != kFeatureDim) throw DataError("model input features must have 83 columns");
  }
  std::vector<PreparedInput> out(n);
  if (cfg.mode == AdaptMode::kNone) {
    for (std::size_t i = 0; i < n; ++i) {
      out[i].features = augment ? spec_augment(*features[i], policy, (*rngs)[i]) : *features[i];
    }
    return out;
  }
  if (embeddings.size() != n) throw UsageError("prepare_batch: one embedding per utterance");
  std::vector<Matrix> emb(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!embeddings[i]) throw DataError("missing speaker embedding");
    check_scope(*embeddings[i], training);
    emb[i] = broadcast_embedding(*embeddings[i], features[i]->rows());
  }
  if (!cfg.normalize_after_specaug) emb = l2_normalize(emb, cfg.norm_axis, cfg.epsilon);
  const SpecAugPolicy joint = policy.scaled_to(kJointDim, kFeatureDim);
  for (std::size_t i = 0; i < n; ++i) {
    if (augment && cfg.specaug_joint) {
      Matrix j = hconcat(*features[i], emb[i]);
      j = spec_augment(j, joint, (*rngs)[i]);
      out[i].features = j.col_slice(0, kFeatureDim);
      out[i].embedding = j.col_slice(kFeatureDim, kEmbeddingDim);
    } else {
      out[i].features = augment ? spec_augment(*features[i], policy, (*rngs)[i]) : *features[i];
      out[i].embedding = std::move(emb[i]);
    }
  }
  if (cfg.normalize_after_specaug) {
    std::vector<Matrix> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = std::move(out[i].embedding);
    e = l2_normalize(e, cfg.norm_axis, cfg.epsilon);
    for (std::size_t i = 0; i < n; ++i) out[i].embedding = std::move(e[i]);
  }
  return out;
}

Var adapt_input(Graph& g, const ParamStore& params, const PreparedInput& in, AdaptMode mode) {
  Var x = g.constant(in.features);
  if (mode == AdaptMode::kNone) return x;
  Var e83 = linear_layer(g, params, kDownProjection, g.constant(in.embedding));
  return mode == AdaptMode::kAdd ? add(x, e83) : concat_cols({x, e83});
}

Matrix adapt_frontend(const Matrix& features, const SpeakerEmbedding* emb, const AdaptConfig& cfg,
                      const SpecAugPolicy& policy, const ParamStore& params, Rng* rng,
                      bool training) {
  std::vector<Rng> rngs;
  if (rng) rngs.push_back(*rng);
  auto prepared = prepare_batch({&features}, {emb}, cfg, policy, rng ? &rngs : nullptr, training);
  if (rng) *rng = rngs[0];
  Graph g;
  return adapt_input(g, params, prepared[0], cfg.mode).value();
}

}  // namespace spkadapt
