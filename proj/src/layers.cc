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

#include "spkadapt/layers.h"

#include <cmath>
#include <limits>

namespace spkadapt {

void init_linear(ParamStore& p, const std::string& prefix, int out, int in, Rng& rng) {
  const double bound = std::sqrt(6.0 / (in + out));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix w(out, in);
  for (auto& v : w.storage()) v = u(rng);
  p[prefix + ".weight"] = std::move(w);
  p[prefix + ".bias"] = Matrix(1, out);
}

void init_layer_norm(ParamStore& p, const std::string& prefix, int dim) {
  p[prefix + ".gain"] = Matrix(1, dim, 1.0);
  p[prefix + ".shift"] = Matrix(1, dim);
}

void init_attention(ParamStore& p, const std::string& prefix, int d, Rng& rng) {
  for (const char* n : {"q", "k", "v", "o"}) init_linear(p, prefix + "." + n, d, d, rng);
  // A key bias adds the same amount to every score of a query row, which
  // softmax cancels; it would only be a parameter with zero gradient.
  p.erase(prefix + ".k.bias");
}

void init_feed_forward(ParamStore& p, const std::string& prefix, int d, int ffn, Rng& rng) {
  init_linear(p, prefix + ".w1", ffn, d, rng);
  init_linear(p, prefix + ".w2", d, ffn, rng);
}

Var linear_layer(Graph& g, const ParamStore& p, const std::string& prefix, Var x) {
  return linear(x, g.param(p, prefix + ".weight"), g.param(p, prefix + ".bias"));
}

Var layer_norm_layer(Graph& g, const ParamStore& p, const std::string& prefix, Var x) {
  return layer_norm(x, g.param(p, prefix + ".gain"), g.param(p, prefix + ".shift"));
}

Var feed_forward(Graph& g, const ParamStore& p, const std::string& prefix, Var x,
                 double dropout_rate) {
  Var h = relu(linear_layer(g, p, prefix + ".w1", x));
  h = dropout(h, dropout_rate);
  return linear_layer(g, p, prefix + ".w2", h);
}

Var multi_head_attention(Graph& g, const ParamStore& p, const std::string& prefix, Var query,
                         Var memory, int heads, const Matrix* mask, double dropout_rate,
                         std::vector<Matrix>* probs) {
  const int d = query.cols();
  const int dk = d / heads;
  Var q = linear_layer(g, p, prefix + ".q", query);
  Var k = linear(memory, g.param(p, prefix + ".k.weight"), Var{});
  Var v = linear_layer(g, p, prefix + ".v", memory);
  const double s = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<Var> outs;
  for (int h = 0; h < heads; ++h) {
    Var qh = slice_cols(q, h * dk, dk);
    Var kh = slice_cols(k, h * dk, dk);
    Var vh = slice_cols(v, h * dk, dk);
    Var a = softmax_rows(scale(matmul_nt(qh, kh), s), mask);
    if (probs) probs->push_back(a.value());
    a = dropout(a, dropout_rate);
    outs.push_back(matmul(a, vh));
  }
  Var cat = heads == 1 ? outs[0] : concat_cols(outs);
  return linear_layer(g, p, prefix + ".o", cat);
}

Matrix positional_encoding(int frames, int d) {
  Matrix pe(frames, d);
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < d; i += 2) {
      const double angle = t / std::pow(10000.0, static_cast<double>(i) / d);
      pe(t, i) = std::sin(angle);
      if (i + 1 < d) pe(t, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

Matrix causal_mask(int n) {
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) m(r, c) = -std::numeric_limits<double>::infinity();
  }
  return m;
}

}  // namespace spkadapt
