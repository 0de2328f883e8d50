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

#ifndef SPKADAPT_OPTIM_H_
#define SPKADAPT_OPTIM_H_

#include "spkadapt/graph.h"

namespace spkadapt {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
};

/// Adam with bias correction. State is keyed like the parameters.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  /// One update; parameters without a gradient entry are left alone.
  void step(ParamStore& params, const Gradients& grads, double lr);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::map<std::string, Matrix> m_, v_;
};

/// Global L2 norm of all gradients.
double grad_norm(const Gradients& grads);
/// Rescales so the global norm is at most max_norm; returns the norm before.
double clip_grad_norm(Gradients& grads, double max_norm);

/// factor * d^-0.5 * min(step^-0.5, step * warmup^-1.5), step >= 1.
double noam_lr(long step, int d_model, int warmup, double factor);

}  // namespace spkadapt

#endif  // SPKADAPT_OPTIM_H_
