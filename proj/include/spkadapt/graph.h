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

#ifndef SPKADAPT_GRAPH_H_
#define SPKADAPT_GRAPH_H_

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spkadapt/common.h"
#include "spkadapt/kernels.h"
#include "spkadapt/matrix.h"

namespace spkadapt {

/// Learnable arrays keyed by hierarchical names ("encoder.0.attn.q.weight").
/// std::map keeps iteration order, and therefore serialization and
/// reductions, deterministic.
using ParamStore = std::map<std::string, Matrix>;
using Gradients = std::map<std::string, Matrix>;

class Graph;

/// Handle to a node of a Graph.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  bool valid() const { return graph != nullptr; }
  const Matrix& value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
};

/// Tape for one forward pass. Nodes are appended in topological order, so
/// backward() is a reverse sweep. Parameters are referenced, not copied: the
/// ParamStore must outlive the graph and stay unchanged while it is alive.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int self)>;

  explicit Graph(bool training = false, Rng* rng = nullptr)
      : training_(training), rng_(rng) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool training() const { return training_; }
  Rng* rng() { return rng_; }

  /// Leaf without gradient.
  Var constant(Matrix m);
  /// Leaf whose gradient is tracked (used for input-gradient checks).
  Var variable(Matrix m);
  /// Parameter leaf; its gradient is reported by param_gradients().
  Var param(const ParamStore& store, const std::string& name);

  const Matrix& value(int id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, allocated (zeroed) on first use.
  Matrix& grad(int id);
  bool has_grad(int id) const { return !nodes_[id].grad.empty(); }

  /// Appends an op node. `fn` runs during backward only if some input
  /// requires a gradient.
  Var push(Matrix value, bool requires_grad, BackwardFn fn);

  /// Seeds d(out)/d(out) = 1 for a 1x1 output and sweeps the tape.
  void backward(Var out);

  /// Adds scale * dL/dparam into `into`, allocating entries as needed.
  void accumulate_param_grads(Gradients& into, double scale = 1.0) const;

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    bool requires_grad = false;
    std::string param_name;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  bool training_;
  Rng* rng_;
};

inline const Matrix& Var::value() const { return graph->value(id); }

// ---------------------------------------------------------------------------
// Ops. Shapes are asserted; every op supports backward.

Var matmul(Var a, Var b);       // a(MxK) * b(KxN)
Var matmul_nt(Var a, Var b);    // a(MxK) * b(NxK)^T
/// x(T x in) * W(out x in)^T + bias(1 x out); bias may be invalid.
Var linear(Var x, Var weight, Var bias);
Var add(Var a, Var b);
/// a(R x C) + row(1 x C) broadcast over rows.
Var add_row(Var a, Var row);
Var scale(Var a, double s);
Var relu(Var a);
/// Inverted dropout; identity unless the graph is training and rate > 0.
Var dropout(Var a, double rate);
/// Per-row layer normalization with learned gain/shift (1 x C each).
Var layer_norm(Var x, Var gain, Var shift, double eps = 1e-5);
/// Row softmax of x + additive_mask (mask entries are 0 or -inf).
Var softmax_rows(Var x, const Matrix* additive_mask = nullptr);
Var log_softmax_rows(Var x);
Var slice_cols(Var x, int begin, int count);
Var concat_cols(const std::vector<Var>& parts);
/// Same data, new shape (row-major order preserved).
Var reshape(Var x, int rows, int cols);
/// x: in_channels x (H*W) -> out_channels x (H'*W'), valid convolution.
Var conv2d(Var x, const kernels::ConvGeometry& geom, Var weight, Var bias);
/// C x (H*W) -> H x (C*W): time-major frames with channel-major features.
Var channels_to_frames(Var x, int channels, int height, int width);
/// Rows of table (V x d) selected by ids.
Var embedding(Var table, const std::vector<int>& ids);
/// 1 x 2C: per-column mean then population stddev, sqrt(var + eps).
Var mean_std_pool(Var x, double eps = 1e-8);
/// wa * a + wb * b for 1x1 scalars.
Var weighted_sum(Var a, double wa, Var b, double wb);
/// Mean of all entries, 1x1.
Var mean_all(Var a);

}  // namespace spkadapt

#endif  // SPKADAPT_GRAPH_H_
