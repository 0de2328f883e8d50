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

#include "spkadapt/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace spkadapt {

GradCheckResult grad_check(ParamStore& params, const LossBuilder& loss, Rng& rng,
                           const GradCheckOptions& opts) {
  Gradients analytic;
  {
    Graph g;
    Var out = loss(g, params);
    g.backward(out);
    g.accumulate_param_grads(analytic);
  }
  if (opts.corrupt) opts.corrupt(analytic);

  auto eval = [&] {
    Graph g;
    return loss(g, params).value()(0, 0);
  };

  GradCheckResult res;
  for (auto& [name, value] : params) {
    if (!opts.only.empty() &&
        std::find(opts.only.begin(), opts.only.end(), name) == opts.only.end()) {
      continue;
    }
    std::vector<int> idx(value.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (static_cast<int>(idx.size()) > opts.coords_per_param) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<std::size_t>(opts.coords_per_param));
    }
    const auto git = analytic.find(name);
    for (int i : idx) {
      double& x = value.data()[i];
      const double saved = x;
      x = saved + opts.step;
      const double up = eval();
      x = saved - opts.step;
      const double down = eval();
      x = saved;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double a = git == analytic.end() ? 0.0 : git->second.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), opts.denominator_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++res.coords_checked;
      if (rel > res.max_rel_error || !std::isfinite(rel)) {
        res.max_rel_error = std::isfinite(rel) ? rel : std::numeric_limits<double>::infinity();
        res.worst_param = name;
        res.worst_index = i;
      }
    }
  }
  return res;
}

}  // namespace spkadapt
