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

#ifndef SPKADAPT_GRADCHECK_H_
#define SPKADAPT_GRADCHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "spkadapt/graph.h"

namespace spkadapt {

/// Builds a scalar (1x1) loss from the given parameters on a fresh graph.
using LossBuilder = std::function<Var(Graph&, const ParamStore&)>;

struct GradCheckOptions {
  double step = 1e-5;
  int coords_per_param = 200;    // all coordinates when the array is smaller
  double denominator_floor = 1e-6;
  std::vector<std::string> only;  // restrict to these parameter names
  /// Applied to the analytic gradients before comparison (fault injection).
  std::function<void(Gradients&)> corrupt;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  int coords_checked = 0;
  std::string worst_param;
  int worst_index = -1;
};

/// Central differences vs. backprop on a random subset of every parameter.
/// Relative error is |a - n| / max(|a|, |n|, denominator_floor).
GradCheckResult grad_check(ParamStore& params, const LossBuilder& loss, Rng& rng,
                           const GradCheckOptions& opts = {});

}  // namespace spkadapt

#endif  // SPKADAPT_GRADCHECK_H_
