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

#ifndef SPKADAPT_LOSSES_H_
#define SPKADAPT_LOSSES_H_

#include <vector>

#include "spkadapt/graph.h"

namespace spkadapt {

/// Frames CTC needs for `target`: its length plus one blank between each
/// pair of equal neighbours.
int ctc_min_frames(const std::vector<int>& target);

struct CtcResult {
  bool feasible = true;
  double nll = 0.0;       // +inf when infeasible
  Matrix grad_log_probs;  // d nll / d log_probs (= -occupancy); empty if infeasible
};

/// Forward-backward over the blank-augmented target in log space.
/// `log_probs` is T x V (rows are log-distributions); `blank` is a label id.
CtcResult ctc_forward_backward(const Matrix& log_probs, const std::vector<int>& target, int blank);

struct CtcLoss {
  Var loss;  // 1x1; a constant +inf when infeasible
  bool feasible = true;
};
CtcLoss ctc_loss(Var log_probs, const std::vector<int>& target, int blank);

/// Mean over positions of -sum_k q_k log softmax(logits)_k with
/// q = (1 - smoothing) on the target and smoothing / (V - 1) elsewhere.
Var attention_ce_loss(Var logits, const std::vector<int>& targets, double smoothing);

/// weight * ctc + (1 - weight) * ce.
inline double hybrid_loss(double ctc, double ce, double weight) {
  return weight * ctc + (1.0 - weight) * ce;
}
Var hybrid_loss(Var ctc, Var ce, double weight);

}  // namespace spkadapt

#endif  // SPKADAPT_LOSSES_H_
