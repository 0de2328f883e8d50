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

#include "spkadapt/losses.h"

#include <cmath>
#include <cassert>
#include <limits>
#include <memory>

namespace spkadapt {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

int ctc_min_frames(const std::vector<int>& target) {
  int n = static_cast<int>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

CtcResult ctc_forward_backward(const Matrix& log_probs, const std::vector<int>& target, int blank) {
  CtcResult res;
  const int t_len = log_probs.rows();
  if (t_len < ctc_min_frames(target) || t_len == 0) {
    res.feasible = false;
    res.nll = std::numeric_limits<double>::infinity();
    return res;
  }
  const int s_len = 2 * static_cast<int>(target.size()) + 1;
  std::vector<int> label(static_cast<std::size_t>(s_len), blank);
  for (std::size_t i = 0; i < target.size(); ++i) label[2 * i + 1] = target[i];
  auto skip_ok = [&](int s) { return s >= 2 && label[s] != blank && label[s] != label[s - 2]; };

  Matrix alpha(t_len, s_len, kNegInf);
  Matrix beta(t_len, s_len, kNegInf);
  alpha(0, 0) = log_probs(0, label[0]);
  if (s_len > 1) alpha(0, 1) = log_probs(0, label[1]);
  for (int t = 1; t < t_len; ++t) {
    for (int s = 0; s < s_len; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = log_add(a, alpha(t - 1, s - 1));
      if (skip_ok(s)) a = log_add(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + log_probs(t, label[s]);
    }
  }
  // beta(t, s): log prob of emitting the remainder after frame t, given state s at t.
  beta(t_len - 1, s_len - 1) = 0.0;
  if (s_len > 1) beta(t_len - 1, s_len - 2) = 0.0;
  for (int t = t_len - 2; t >= 0; --t) {
    for (int s = 0; s < s_len; ++s) {
      double b = beta(t + 1, s) + log_probs(t + 1, label[s]);
      if (s + 1 < s_len) b = log_add(b, beta(t + 1, s + 1) + log_probs(t + 1, label[s + 1]));
      if (s + 2 < s_len && skip_ok(s + 2)) {
        b = log_add(b, beta(t + 1, s + 2) + log_probs(t + 1, label[s + 2]));
      }
      beta(t, s) = b;
    }
  }
  double log_total = alpha(t_len - 1, s_len - 1);
  if (s_len > 1) log_total = log_add(log_total, alpha(t_len - 1, s_len - 2));
  res.nll = -log_total;
  res.grad_log_probs = Matrix(t_len, log_probs.cols());
  for (int t = 0; t < t_len; ++t) {
    for (int s = 0; s < s_len; ++s) {
      const double lg = alpha(t, s) + beta(t, s) - log_total;
      if (lg > kNegInf) res.grad_log_probs(t, label[s]) -= std::exp(lg);
    }
  }
  return res;
}

CtcLoss ctc_loss(Var log_probs, const std::vector<int>& target, int blank) {
  Graph& g = *log_probs.graph;
  CtcResult r = ctc_forward_backward(log_probs.value(), target, blank);
  if (!r.feasible) return {g.constant(Matrix(1, 1, r.nll)), false};
  auto grad = std::make_shared<Matrix>(std::move(r.grad_log_probs));
  Var loss = g.push(Matrix(1, 1, r.nll), g.requires_grad(log_probs.id),
                    [log_probs, grad](Graph& g, int self) {
    g.grad(log_probs.id).add_scaled(*grad, g.grad(self)(0, 0));
  });
  return {loss, true};
}

Var attention_ce_loss(Var logits, const std::vector<int>& targets, double smoothing) {
  Graph& g = *logits.graph;
  const Matrix& z = logits.value();
  const int len = z.rows(), vocab = z.cols();
  assert(static_cast<int>(targets.size()) == len && len > 0);
  const double off = vocab > 1 ? smoothing / (vocab - 1) : 0.0;
  const double on = 1.0 - smoothing;
  auto probs = std::make_shared<Matrix>(len, vocab);
  double total = 0.0;
  for (int r = 0; r < len; ++r) {
    double mx = kNegInf;
    for (int c = 0; c < vocab; ++c) mx = std::max(mx, z(r, c));
    double sum = 0.0;
    for (int c = 0; c < vocab; ++c) sum += std::exp(z(r, c) - mx);
    const double lse = mx + std::log(sum);
    for (int c = 0; c < vocab; ++c) {
      const double lp = z(r, c) - lse;
      (*probs)(r, c) = std::exp(lp);
      const double q = c == targets[r] ? on : off;
      if (q != 0.0) total -= q * lp;
    }
  }
  return g.push(Matrix(1, 1, total / len), g.requires_grad(logits.id),
                [logits, targets, probs, on, off](Graph& g, int self) {
    const double dy = g.grad(self)(0, 0);
    Matrix& dz = g.grad(logits.id);
    const int len = probs->rows();
    for (int r = 0; r < len; ++r) {
      for (int c = 0; c < probs->cols(); ++c) {
        const double q = c == targets[r] ? on : off;
        dz(r, c) += dy * ((*probs)(r, c) - q) / len;
      }
    }
  });
}

Var hybrid_loss(Var ctc, Var ce, double weight) {
  return weighted_sum(ctc, weight, ce, 1.0 - weight);
}

}  // namespace spkadapt
