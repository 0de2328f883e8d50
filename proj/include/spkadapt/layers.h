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

// Transformer building blocks over the autograd graph, shared by the speaker
// embedder and the ASR model. Parameters live in a ParamStore under a prefix:
// "<prefix>.weight" / "<prefix>.bias" for affine maps, "<prefix>.gain" /
// "<prefix>.shift" for layer norms.

#ifndef SPKADAPT_LAYERS_H_
#define SPKADAPT_LAYERS_H_

#include <string>
#include <vector>

#include "spkadapt/graph.h"

namespace spkadapt {

/// Xavier-uniform weight (out x in) and zero bias.
void init_linear(ParamStore& p, const std::string& prefix, int out, int in, Rng& rng);
void init_layer_norm(ParamStore& p, const std::string& prefix, int dim);
/// Four projections q, k, v, o of size d x d; k has no bias.
void init_attention(ParamStore& p, const std::string& prefix, int d, Rng& rng);
/// Two affine maps w1 (ffn x d) and w2 (d x ffn).
void init_feed_forward(ParamStore& p, const std::string& prefix, int d, int ffn, Rng& rng);

Var linear_layer(Graph& g, const ParamStore& p, const std::string& prefix, Var x);
Var layer_norm_layer(Graph& g, const ParamStore& p, const std::string& prefix, Var x);
/// relu(x W1^T + b1) W2^T + b2, with dropout after the activation.
Var feed_forward(Graph& g, const ParamStore& p, const std::string& prefix, Var x,
                 double dropout_rate);

/// Multi-head scaled dot-product attention. `query` is Lq x d, `memory` is
/// Lk x d; `mask` (Lq x Lk, entries 0 or -inf) may be null. When `probs` is
/// given, the per-head attention matrices are appended to it.
Var multi_head_attention(Graph& g, const ParamStore& p, const std::string& prefix, Var query,
                         Var memory, int heads, const Matrix* mask, double dropout_rate,
                         std::vector<Matrix>* probs = nullptr);

/// Sinusoidal position table, T x d.
Matrix positional_encoding(int frames, int d);
/// Lower-triangular visibility: 0 on and below the diagonal, -inf above.
Matrix causal_mask(int n);

}  // namespace spkadapt

#endif  // SPKADAPT_LAYERS_H_
