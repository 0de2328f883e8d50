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

#include "spkadapt/optim.h"

#include <algorithm>
#include <cmath>

namespace spkadapt {

void Adam::step(ParamStore& params, const Gradients& grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) continue;
    Matrix& w = it->second;
    Matrix& m = m_.try_emplace(name, g.rows(), g.cols()).first->second;
    Matrix& v = v_.try_emplace(name, g.rows(), g.cols()).first->second;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.data()[i];
      m.data()[i] = cfg_.beta1 * m.data()[i] + (1.0 - cfg_.beta1) * gi;
      v.data()[i] = cfg_.beta2 * v.data()[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mh = m.data()[i] / c1;
      const double vh = v.data()[i] / c2;
      w.data()[i] -= lr * mh / (std::sqrt(vh) + cfg_.epsilon);
    }
  }
}

double grad_norm(const Gradients& grads) {
  double s = 0.0;
  for (const auto& [name, g] : grads) {
    for (double v : g.storage()) s += v * v;
  }
  return std::sqrt(s);
}

double clip_grad_norm(Gradients& grads, double max_norm) {
  const double n = grad_norm(grads);
  if (max_norm > 0.0 && n > max_norm) {
    const double s = max_norm / n;
    for (auto& [name, g] : grads) {
      for (double& v : g.storage()) v *= s;
    }
  }
  return n;
}

double noam_lr(long step, int d_model, int warmup, double factor) {
  const double s = static_cast<double>(std::max(step, 1L));
  const double w = static_cast<double>(std::max(warmup, 1));
  return factor / std::sqrt(static_cast<double>(d_model)) *
         std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5));
}

}  // namespace spkadapt
