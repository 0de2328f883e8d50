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

#include "spkadapt/graph.h"

#include <cassert>
#include <cmath>
#include <limits>
#include <memory>

namespace spkadapt {

Var Graph::constant(Matrix m) {
  nodes_.push_back(Node{std::move(m), nullptr, {}, false, {}, {}});
  return {this, size() - 1};
}

Var Graph::variable(Matrix m) {
  nodes_.push_back(Node{std::move(m), nullptr, {}, true, {}, {}});
  return {this, size() - 1};
}

Var Graph::param(const ParamStore& store, const std::string& name) {
  const auto it = store.find(name);
  if (it == store.end()) throw Error("unknown parameter " + name);
  nodes_.push_back(Node{{}, &it->second, {}, true, name, {}});
  return {this, size() - 1};
}

Matrix& Graph::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) {
    const Matrix& v = value(id);
    n.grad = Matrix(v.rows(), v.cols());
  }
  return n.grad;
}

Var Graph::push(Matrix value, bool requires_grad, BackwardFn fn) {
  nodes_.push_back(Node{std::move(value), nullptr, {}, requires_grad, {},
                        requires_grad ? std::move(fn) : BackwardFn{}});
  return {this, size() - 1};
}

void Graph::backward(Var out) {
  assert(out.graph == this);
  const Matrix& v = value(out.id);
  assert(v.rows() == 1 && v.cols() == 1);
  (void)v;
  grad(out.id)(0, 0) += 1.0;
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.empty()) n.backward(*this, i);
  }
}

void Graph::accumulate_param_grads(Gradients& into, double scale) const {
  for (const auto& n : nodes_) {
    if (n.param_name.empty() || n.grad.empty()) continue;
    auto it = into.find(n.param_name);
    if (it == into.end()) {
      it = into.emplace(n.param_name, Matrix(n.grad.rows(), n.grad.cols())).first;
    }
    it->second.add_scaled(n.grad, scale);
  }
}

namespace {

bool any_grad(std::initializer_list<Var> vs) {
  for (const Var& v : vs) {
    if (v.valid() && v.graph->requires_grad(v.id)) return true;
  }
  return false;
}

std::span<const double> cspan(const Matrix& m) { return {m.data(), m.size()}; }
std::span<double> mspan(Matrix& m) { return {m.data(), m.size()}; }

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = *a.graph;
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  assert(av.cols() == bv.rows());
  Matrix out(av.rows(), bv.cols());
  kernels::gemm_nn(av.rows(), bv.cols(), av.cols(), cspan(av), cspan(bv), mspan(out), false);
  return g.push(std::move(out), any_grad({a, b}), [a, b](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    const Matrix& av = g.value(a.id);
    const Matrix& bv = g.value(b.id);
    const int m = av.rows(), k = av.cols(), n = bv.cols();
    if (g.requires_grad(a.id)) kernels::gemm_nt(m, k, n, cspan(dy), cspan(bv), mspan(g.grad(a.id)), true);
    if (g.requires_grad(b.id)) kernels::gemm_tn(k, n, m, cspan(av), cspan(dy), mspan(g.grad(b.id)), true);
  });
}

Var matmul_nt(Var a, Var b) {
  Graph& g = *a.graph;
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  assert(av.cols() == bv.cols());
  Matrix out(av.rows(), bv.rows());
  kernels::gemm_nt(av.rows(), bv.rows(), av.cols(), cspan(av), cspan(bv), mspan(out), false);
  return g.push(std::move(out), any_grad({a, b}), [a, b](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    const Matrix& av = g.value(a.id);
    const Matrix& bv = g.value(b.id);
    const int m = av.rows(), k = av.cols(), n = bv.rows();
    if (g.requires_grad(a.id)) kernels::gemm_nn(m, k, n, cspan(dy), cspan(bv), mspan(g.grad(a.id)), true);
    if (g.requires_grad(b.id)) kernels::gemm_tn(n, k, m, cspan(dy), cspan(av), mspan(g.grad(b.id)), true);
  });
}

Var linear(Var x, Var weight, Var bias) {
  Graph& g = *x.graph;
  const Matrix& xv = x.value();
  const Matrix& wv = weight.value();
  assert(xv.cols() == wv.cols());
  const int t = xv.rows(), in = xv.cols(), out_dim = wv.rows();
  Matrix out(t, out_dim);
  kernels::gemm_nt(t, out_dim, in, cspan(xv), cspan(wv), mspan(out), false);
  if (bias.valid()) {
    const Matrix& bv = bias.value();
    assert(bv.rows() == 1 && bv.cols() == out_dim);
    for (int r = 0; r < t; ++r) {
      for (int c = 0; c < out_dim; ++c) out(r, c) += bv(0, c);
    }
  }
  return g.push(std::move(out), any_grad({x, weight, bias}), [x, weight, bias](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    const Matrix& xv = g.value(x.id);
    const Matrix& wv = g.value(weight.id);
    const int t = xv.rows(), in = xv.cols(), out_dim = wv.rows();
    if (g.requires_grad(x.id)) kernels::gemm_nn(t, in, out_dim, cspan(dy), cspan(wv), mspan(g.grad(x.id)), true);
    if (g.requires_grad(weight.id)) {
      kernels::gemm_tn(out_dim, in, t, cspan(dy), cspan(xv), mspan(g.grad(weight.id)), true);
    }
    if (bias.valid() && g.requires_grad(bias.id)) {
      Matrix& db = g.grad(bias.id);
      for (int r = 0; r < t; ++r) {
        for (int c = 0; c < out_dim; ++c) db(0, c) += dy(r, c);
      }
    }
  });
}

Var add(Var a, Var b) {
  Graph& g = *a.graph;
  Matrix out = a.value();
  out.add_scaled(b.value());
  return g.push(std::move(out), any_grad({a, b}), [a, b](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    if (g.requires_grad(a.id)) g.grad(a.id).add_scaled(dy);
    if (g.requires_grad(b.id)) g.grad(b.id).add_scaled(dy);
  });
}

Var add_row(Var a, Var row) {
  Graph& g = *a.graph;
  Matrix out = a.value();
  const Matrix& rv = row.value();
  assert(rv.rows() == 1 && rv.cols() == out.cols());
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) out(r, c) += rv(0, c);
  }
  return g.push(std::move(out), any_grad({a, row}), [a, row](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    if (g.requires_grad(a.id)) g.grad(a.id).add_scaled(dy);
    if (g.requires_grad(row.id)) {
      Matrix& dr = g.grad(row.id);
      for (int r = 0; r < dy.rows(); ++r) {
        for (int c = 0; c < dy.cols(); ++c) dr(0, c) += dy(r, c);
      }
    }
  });
}

Var scale(Var a, double s) {
  Graph& g = *a.graph;
  Matrix out = a.value();
  for (double& v : out.storage()) v *= s;
  return g.push(std::move(out), any_grad({a}), [a, s](Graph& g, int self) {
    g.grad(a.id).add_scaled(g.grad(self), s);
  });
}

Var relu(Var a) {
  Graph& g = *a.graph;
  Matrix out = a.value();
  for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
  return g.push(std::move(out), any_grad({a}), [a](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    const Matrix& y = g.value(self);
    Matrix& da = g.grad(a.id);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      if (y.data()[i] > 0.0) da.data()[i] += dy.data()[i];
    }
  });
}

Var dropout(Var a, double rate) {
  Graph& g = *a.graph;
  if (!g.training() || rate <= 0.0 || g.rng() == nullptr) return a;
  auto mask = std::make_shared<std::vector<double>>(a.value().size());
  std::bernoulli_distribution keep(1.0 - rate);
  const double s = 1.0 / (1.0 - rate);
  for (double& m : *mask) m = keep(*g.rng()) ? s : 0.0;
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= (*mask)[i];
  return g.push(std::move(out), any_grad({a}), [a, mask](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    Matrix& da = g.grad(a.id);
    for (std::size_t i = 0; i < dy.size(); ++i) da.data()[i] += dy.data()[i] * (*mask)[i];
  });
}

Var layer_norm(Var x, Var gain, Var shift, double eps) {
  Graph& g = *x.graph;
  const Matrix& xv = x.value();
  const int rows = xv.rows(), cols = xv.cols();
  auto xhat = std::make_shared<Matrix>(rows, cols);
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  Matrix out(rows, cols);
  const Matrix& gv = gain.value();
  const Matrix& sv = shift.value();
  for (int r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < cols; ++c) mean += xv(r, c);
    mean /= cols;
    double var = 0.0;
    for (int c = 0; c < cols; ++c) var += (xv(r, c) - mean) * (xv(r, c) - mean);
    var /= cols;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (int c = 0; c < cols; ++c) {
      (*xhat)(r, c) = (xv(r, c) - mean) * is;
      out(r, c) = gv(0, c) * (*xhat)(r, c) + sv(0, c);
    }
  }
  return g.push(std::move(out), any_grad({x, gain, shift}),
                [x, gain, shift, xhat, inv_std](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    const Matrix& gv = g.value(gain.id);
    const int rows = dy.rows(), cols = dy.cols();
    if (g.requires_grad(gain.id) || g.requires_grad(shift.id)) {
      Matrix& dg = g.grad(gain.id);
      Matrix& ds = g.grad(shift.id);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          dg(0, c) += dy(r, c) * (*xhat)(r, c);
          ds(0, c) += dy(r, c);
        }
      }
    }
    if (!g.requires_grad(x.id)) return;
    Matrix& dx = g.grad(x.id);
    std::vector<double> dxhat(static_cast<std::size_t>(cols));
    for (int r = 0; r < rows; ++r) {
      double m1 = 0.0, m2 = 0.0;
      for (int c = 0; c < cols; ++c) {
        dxhat[c] = dy(r, c) * gv(0, c);
        m1 += dxhat[c];
        m2 += dxhat[c] * (*xhat)(r, c);
      }
      m1 /= cols;
      m2 /= cols;
      for (int c = 0; c < cols; ++c) {
        dx(r, c) += (*inv_std)[r] * (dxhat[c] - m1 - (*xhat)(r, c) * m2);
      }
    }
  });
}

Var softmax_rows(Var x, const Matrix* additive_mask) {
  Graph& g = *x.graph;
  Matrix out = x.value();
  if (additive_mask) {
    assert(additive_mask->same_shape(out));
    out.add_scaled(*additive_mask);
  }
  for (int r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : row) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return g.push(std::move(out), any_grad({x}), [x](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    const Matrix& p = g.value(self);
    Matrix& dx = g.grad(x.id);
    for (int r = 0; r < p.rows(); ++r) {
      double dot = 0.0;
      for (int c = 0; c < p.cols(); ++c) dot += dy(r, c) * p(r, c);
      for (int c = 0; c < p.cols(); ++c) dx(r, c) += p(r, c) * (dy(r, c) - dot);
    }
  });
}

Var log_softmax_rows(Var x) {
  Graph& g = *x.graph;
  Matrix out = x.value();
  for (int r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : row) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    for (double& v : row) v -= lse;
  }
  return g.push(std::move(out), any_grad({x}), [x](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    const Matrix& y = g.value(self);
    Matrix& dx = g.grad(x.id);
    for (int r = 0; r < y.rows(); ++r) {
      double sum = 0.0;
      for (int c = 0; c < y.cols(); ++c) sum += dy(r, c);
      for (int c = 0; c < y.cols(); ++c) dx(r, c) += dy(r, c) - std::exp(y(r, c)) * sum;
    }
  });
}

Var slice_cols(Var x, int begin, int count) {
  Graph& g = *x.graph;
  return g.push(x.value().col_slice(begin, count), any_grad({x}),
                [x, begin, count](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    Matrix& dx = g.grad(x.id);
    for (int r = 0; r < dy.rows(); ++r) {
      for (int c = 0; c < count; ++c) dx(r, begin + c) += dy(r, c);
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  assert(!parts.empty());
  Graph& g = *parts.front().graph;
  const int rows = parts.front().rows();
  int cols = 0;
  bool needs = false;
  for (const Var& p : parts) {
    assert(p.rows() == rows);
    cols += p.cols();
    needs = needs || g.requires_grad(p.id);
  }
  Matrix out(rows, cols);
  int off = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (int r = 0; r < rows; ++r) {
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + off);
    }
    off += v.cols();
  }
  return g.push(std::move(out), needs, [parts](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    int off = 0;
    for (const Var& p : parts) {
      const int pc = g.value(p.id).cols();
      if (g.requires_grad(p.id)) {
        Matrix& dp = g.grad(p.id);
        for (int r = 0; r < dy.rows(); ++r) {
          for (int c = 0; c < pc; ++c) dp(r, c) += dy(r, off + c);
        }
      }
      off += pc;
    }
  });
}

Var reshape(Var x, int rows, int cols) {
  Graph& g = *x.graph;
  assert(static_cast<std::size_t>(rows) * cols == x.value().size());
  Matrix out(rows, cols, x.value().storage());
  return g.push(std::move(out), any_grad({x}), [x](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    Matrix& dx = g.grad(x.id);
    for (std::size_t i = 0; i < dy.size(); ++i) dx.data()[i] += dy.data()[i];
  });
}

Var conv2d(Var x, const kernels::ConvGeometry& geom, Var weight, Var bias) {
  Graph& g = *x.graph;
  const Matrix& xv = x.value();
  const Matrix& wv = weight.value();
  assert(xv.rows() == geom.in_channels && xv.cols() == geom.height * geom.width);
  assert(wv.cols() == geom.patch());
  const int spatial = geom.out_height() * geom.out_width();
  const int out_ch = wv.rows();
  auto cols = std::make_shared<Matrix>(geom.patch(), spatial);
  kernels::im2col(geom, cspan(xv), mspan(*cols));
  Matrix out(out_ch, spatial);
  kernels::gemm_nn(out_ch, spatial, geom.patch(), cspan(wv), cspan(*cols), mspan(out), false);
  const Matrix& bv = bias.value();
  for (int c = 0; c < out_ch; ++c) {
    for (int s = 0; s < spatial; ++s) out(c, s) += bv(0, c);
  }
  return g.push(std::move(out), any_grad({x, weight, bias}),
                [x, geom, weight, bias, cols](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    const Matrix& wv = g.value(weight.id);
    const int out_ch = dy.rows(), spatial = dy.cols(), patch = geom.patch();
    if (g.requires_grad(weight.id)) {
      kernels::gemm_nt(out_ch, patch, spatial, cspan(dy), cspan(*cols), mspan(g.grad(weight.id)), true);
    }
    if (g.requires_grad(bias.id)) {
      Matrix& db = g.grad(bias.id);
      for (int c = 0; c < out_ch; ++c) {
        double s = 0.0;
        for (int k = 0; k < spatial; ++k) s += dy(c, k);
        db(0, c) += s;
      }
    }
    if (g.requires_grad(x.id)) {
      Matrix dcols(patch, spatial);
      kernels::gemm_tn(patch, spatial, out_ch, cspan(wv), cspan(dy), mspan(dcols), false);
      kernels::col2im(geom, cspan(dcols), mspan(g.grad(x.id)));
    }
  });
}

Var channels_to_frames(Var x, int channels, int height, int width) {
  Graph& g = *x.graph;
  const Matrix& xv = x.value();
  assert(xv.rows() == channels && xv.cols() == height * width);
  Matrix out(height, channels * width);
  for (int c = 0; c < channels; ++c) {
    for (int h = 0; h < height; ++h) {
      for (int w = 0; w < width; ++w) out(h, c * width + w) = xv(c, h * width + w);
    }
  }
  return g.push(std::move(out), any_grad({x}), [x, channels, height, width](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    Matrix& dx = g.grad(x.id);
    for (int c = 0; c < channels; ++c) {
      for (int h = 0; h < height; ++h) {
        for (int w = 0; w < width; ++w) dx(c, h * width + w) += dy(h, c * width + w);
      }
    }
  });
}

Var embedding(Var table, const std::vector<int>& ids) {
  Graph& g = *table.graph;
  const Matrix& tv = table.value();
  Matrix out(static_cast<int>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    assert(ids[i] >= 0 && ids[i] < tv.rows());
    std::copy(tv.row(ids[i]).begin(), tv.row(ids[i]).end(), out.row(static_cast<int>(i)).begin());
  }
  return g.push(std::move(out), any_grad({table}), [table, ids](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    Matrix& dt = g.grad(table.id);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (int c = 0; c < dy.cols(); ++c) dt(ids[i], c) += dy(static_cast<int>(i), c);
    }
  });
}

Var mean_std_pool(Var x, double eps) {
  Graph& g = *x.graph;
  const Matrix& xv = x.value();
  const int t = xv.rows(), d = xv.cols();
  assert(t >= 1);
  auto mean = std::make_shared<std::vector<double>>(d, 0.0);
  auto std_dev = std::make_shared<std::vector<double>>(d, 0.0);
  for (int r = 0; r < t; ++r) {
    for (int c = 0; c < d; ++c) (*mean)[c] += xv(r, c);
  }
  for (double& m : *mean) m /= t;
  for (int c = 0; c < d; ++c) {
    double v = 0.0;
    for (int r = 0; r < t; ++r) v += (xv(r, c) - (*mean)[c]) * (xv(r, c) - (*mean)[c]);
    (*std_dev)[c] = std::sqrt(v / t + eps);
  }
  Matrix out(1, 2 * d);
  for (int c = 0; c < d; ++c) {
    out(0, c) = (*mean)[c];
    out(0, d + c) = (*std_dev)[c];
  }
  return g.push(std::move(out), any_grad({x}), [x, mean, std_dev](Graph& g, int self) {
    const Matrix& dy = g.grad(self);
    const Matrix& xv = g.value(x.id);
    Matrix& dx = g.grad(x.id);
    const int t = xv.rows(), d = xv.cols();
    for (int r = 0; r < t; ++r) {
      for (int c = 0; c < d; ++c) {
        dx(r, c) += dy(0, c) / t +
                    dy(0, d + c) * (xv(r, c) - (*mean)[c]) / (t * (*std_dev)[c]);
      }
    }
  });
}

Var weighted_sum(Var a, double wa, Var b, double wb) {
  Graph& g = *a.graph;
  Matrix out(1, 1, wa * a.value()(0, 0) + wb * b.value()(0, 0));
  return g.push(std::move(out), any_grad({a, b}), [a, wa, b, wb](Graph& g, int self) {
    const double dy = g.grad(self)(0, 0);
    if (g.requires_grad(a.id)) g.grad(a.id)(0, 0) += wa * dy;
    if (g.requires_grad(b.id)) g.grad(b.id)(0, 0) += wb * dy;
  });
}

Var mean_all(Var a) {
  Graph& g = *a.graph;
  const Matrix& av = a.value();
  double s = 0.0;
  for (double v : av.storage()) s += v;
  Matrix out(1, 1, s / static_cast<double>(av.size()));
  return g.push(std::move(out), any_grad({a}), [a](Graph& g, int self) {
    const double dy = g.grad(self)(0, 0);
    Matrix& da = g.grad(a.id);
    const double share = dy / static_cast<double>(da.size());
    for (double& v : da.storage()) v += share;
  });
}

}  // namespace spkadapt
