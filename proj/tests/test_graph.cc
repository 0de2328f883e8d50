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
#include <memory>

#include "doctest.h"
#include "spkadapt/gradcheck.h"
#include "spkadapt/graph.h"

using namespace spkadapt;

namespace {

Matrix randn(int r, int c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.storage()) v = d(rng);
  return m;
}

// sum(x .* w) for a fixed w, so every output coordinate matters.
Var dot_const(Var x, Matrix w) {
  Graph& g = *x.graph;
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += x.value().data()[i] * w.data()[i];
  auto wp = std::make_shared<Matrix>(std::move(w));
  return g.push(Matrix(1, 1, s), g.requires_grad(x.id), [x, wp](Graph& g, int self) {
    g.grad(x.id).add_scaled(*wp, g.grad(self)(0, 0));
  });
}

double check(ParamStore& p, const std::function<Var(Graph&, const ParamStore&)>& body,
             int out_rows, int out_cols) {
  Rng rng(99);
  Matrix w = randn(out_rows, out_cols, rng);
  LossBuilder fn = [&](Graph& g, const ParamStore& ps) { return dot_const(body(g, ps), w); };
  const auto res = grad_check(p, fn, rng);
  CHECK(res.coords_checked > 0);
  return res.max_rel_error;
}

}  // namespace

TEST_CASE("op gradients match central differences") {
  Rng rng(1);
  SUBCASE("matmul and matmul_nt") {
    ParamStore p{{"a", randn(4, 6, rng)}, {"b", randn(6, 3, rng)}, {"c", randn(5, 6, rng)}};
    CHECK(check(p, [](Graph& g, const ParamStore& ps) {
      return matmul(g.param(ps, "a"), g.param(ps, "b"));
    }, 4, 3) < 1e-6);
    CHECK(check(p, [](Graph& g, const ParamStore& ps) {
      return matmul_nt(g.param(ps, "a"), g.param(ps, "c"));
    }, 4, 5) < 1e-6);
  }
  SUBCASE("linear with bias") {
    ParamStore p{{"x", randn(5, 7, rng)}, {"w", randn(3, 7, rng)}, {"b", randn(1, 3, rng)}};
    CHECK(check(p, [](Graph& g, const ParamStore& ps) {
      return linear(g.param(ps, "x"), g.param(ps, "w"), g.param(ps, "b"));
    }, 5, 3) < 1e-6);
  }
  SUBCASE("layer norm") {
    ParamStore p{{"x", randn(4, 8, rng)}, {"g", randn(1, 8, rng)}, {"s", randn(1, 8, rng)}};
    CHECK(check(p, [](Graph& g, const ParamStore& ps) {
      return layer_norm(g.param(ps, "x"), g.param(ps, "g"), g.param(ps, "s"));
    }, 4, 8) < 1e-5);
  }
  SUBCASE("softmax, log-softmax, relu, slices, concat, reshape") {
    ParamStore p{{"x", randn(3, 5, rng)}};
    Matrix mask(3, 5, 0.0);
    mask(0, 4) = -std::numeric_limits<double>::infinity();
    CHECK(check(p, [&](Graph& g, const ParamStore& ps) {
      return softmax_rows(g.param(ps, "x"), &mask);
    }, 3, 5) < 1e-6);
    CHECK(check(p, [](Graph& g, const ParamStore& ps) {
      return log_softmax_rows(g.param(ps, "x"));
    }, 3, 5) < 1e-6);
    CHECK(check(p, [](Graph& g, const ParamStore& ps) {
      Var x = g.param(ps, "x");
      return concat_cols({relu(slice_cols(x, 1, 3)), scale(slice_cols(x, 0, 2), 2.0)});
    }, 3, 5) < 1e-6);
    CHECK(check(p, [](Graph& g, const ParamStore& ps) {
      return reshape(g.param(ps, "x"), 5, 3);
    }, 5, 3) < 1e-6);
  }
  SUBCASE("conv2d and channel flattening") {
    const kernels::ConvGeometry geom{2, 9, 8, 3, 2};
    ParamStore p{{"x", randn(2, 72, rng)}, {"w", randn(3, geom.patch(), rng)}, {"b", randn(1, 3, rng)}};
    const int oh = geom.out_height(), ow = geom.out_width();
    CHECK(check(p, [&](Graph& g, const ParamStore& ps) {
      Var y = conv2d(g.param(ps, "x"), geom, g.param(ps, "w"), g.param(ps, "b"));
      return channels_to_frames(y, 3, oh, ow);
    }, oh, 3 * ow) < 1e-6);
  }
  SUBCASE("embedding, add_row, pooling") {
    ParamStore p{{"t", randn(6, 4, rng)}, {"r", randn(1, 4, rng)}};
    CHECK(check(p, [](Graph& g, const ParamStore& ps) {
      Var e = embedding(g.param(ps, "t"), {0, 3, 3, 5});
      return mean_std_pool(add_row(e, g.param(ps, "r")));
    }, 1, 8) < 1e-5);
  }
}

TEST_CASE("channels_to_frames places channel c, frame h, bin w at (h, c*W + w)") {
  Graph g;
  Matrix x(2, 6);
  for (int i = 0; i < 12; ++i) x.data()[i] = i;
  Var y = channels_to_frames(g.constant(x), 2, 3, 2);
  CHECK(y.value()(1, 0) == 2);   // c=0, h=1, w=0
  CHECK(y.value()(1, 3) == 9);   // c=1, h=1, w=1
}

TEST_CASE("dropout is the identity outside training") {
  Graph g(false);
  Rng rng(1);
  Matrix x = randn(3, 3, rng);
  CHECK(dropout(g.constant(x), 0.5).value() == x);
}

TEST_CASE("gradient checker flags a corrupted gradient") {
  Rng rng(4);
  ParamStore p{{"x", randn(4, 6, rng)}, {"w", randn(2, 6, rng)}};
  Matrix w = randn(4, 2, rng);
  LossBuilder fn = [&](Graph& g, const ParamStore& ps) {
    return dot_const(linear(g.param(ps, "x"), g.param(ps, "w"), Var{}), w);
  };
  GradCheckOptions opts;
  CHECK(grad_check(p, fn, rng, opts).max_rel_error < 1e-6);
  opts.corrupt = [](Gradients& gr) { gr["w"].data()[3] *= -1.0; };
  CHECK(grad_check(p, fn, rng, opts).max_rel_error > 1e-1);
}
