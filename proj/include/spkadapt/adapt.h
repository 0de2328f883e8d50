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

// Speaker adaptation of the acoustic input: the 512-dim embedding is joined
// to every 83-dim frame (595 columns), optionally SpecAugment'ed together with
// the features, split off again, projected down to 83 dims by a learned affine
// map and then added to or concatenated with the features.

#ifndef SPKADAPT_ADAPT_H_
#define SPKADAPT_ADAPT_H_

#include <span>
#include <string>
#include <vector>

#include "spkadapt/graph.h"
#include "spkadapt/specaug.h"
#include "spkadapt/speaker_embed.h"

namespace spkadapt {

enum class AdaptMode { kNone, kAdd, kCat };
enum class NormAxis { kNone, kB, kT, kF };

std::string to_string(AdaptMode m);
std::string to_string(NormAxis a);
AdaptMode parse_adapt_mode(const std::string& s);  // none|add|cat
NormAxis parse_norm_axis(const std::string& s);    // none|B|T|F

inline constexpr int kJointDim = 595;  // 83 + 512

struct AdaptConfig {
  AdaptMode mode = AdaptMode::kNone;
  NormAxis norm_axis = NormAxis::kT;
  bool specaug_joint = true;
  double epsilon = 1e-8;
  // Normalize the (possibly masked) embedding block after SpecAugment
  // instead of before joining.
  bool normalize_after_specaug = false;

  /// Model input width: 166 for cat, else 83.
  int input_dim() const;
};

/// [features | emb] with emb repeated on every row.
Matrix join(const Matrix& features, std::span<const double> emb);

/// Each element divided by (L2 norm of its slice + eps). F: over the 512
/// dims of one frame; T: over the frames of one utterance and dim; B: over
/// the utterances that have frame t. Utterances may differ in length; norms
/// only see real frames. B with a single utterance warns.
std::vector<Matrix> l2_normalize(const std::vector<Matrix>& batch, NormAxis axis,
                                 double eps = 1e-8);

/// The embedding repeated on `frames` rows.
Matrix broadcast_embedding(const SpeakerEmbedding& e, int frames);

inline constexpr const char* kDownProjection = "adapt.down";
/// adapt.down.weight (83 x 512) and adapt.down.bias (1 x 83).
void init_down_projection(ParamStore& p, Rng& rng);
/// Rows of e (R x 512) -> R x 83: e W^T + b.
Matrix down_project(const Matrix& e, const Matrix& weight, const Matrix& bias);

/// add: features + e83; cat: [features | e83]. `e83` is T x 83 or 1 x 83
/// (broadcast). DataError on a dimension mismatch; UsageError for kNone.
Matrix inject(const Matrix& features, const Matrix& e83, AdaptMode mode);

/// Training consumes speaker-scope embeddings, decoding utterance-scope
/// ones. DataError otherwise.
void check_scope(const SpeakerEmbedding& e, bool training);

/// Steps before the learned projection: normalized, augmented, split.
struct PreparedInput {
  Matrix features;   // T x 83
  Matrix embedding;  // T x 512; empty for mode none
};

/// Runs normalize -> join -> SpecAugment -> split for a batch. `rngs` holds
/// one stream per utterance and may be null when not training. SpecAugment
/// runs only when training; with mode none or specaug_joint off it sees the
/// 83-dim features alone. `policy` is given for 83 columns and is rescaled
/// for the joint matrix.
std::vector<PreparedInput> prepare_batch(const std::vector<const Matrix*>& features,
                                         const std::vector<const SpeakerEmbedding*>& embeddings,
                                         const AdaptConfig& cfg, const SpecAugPolicy& policy,
                                         std::vector<Rng>* rngs, bool training);

/// Projection and injection inside a graph. The result is the model input.
Var adapt_input(Graph& g, const ParamStore& params, const PreparedInput& in, AdaptMode mode);

/// Whole pipeline for one utterance, returning the model-input matrix.
/// `emb` may be null only for mode none.
Matrix adapt_frontend(const Matrix& features, const SpeakerEmbedding* emb, const AdaptConfig& cfg,
                      const SpecAugPolicy& policy, const ParamStore& params, Rng* rng,
                      bool training);

}  // namespace spkadapt

#endif  // SPKADAPT_ADAPT_H_
