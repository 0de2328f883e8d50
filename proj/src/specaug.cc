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

#include "spkadapt/specaug.h"

#include <algorithm>
#include <cmath>

namespace spkadapt {
namespace {

int draw_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::vector<MaskSpan> draw_spans(int extent, int count, int max_width, Rng& rng) {
  std::vector<MaskSpan> out;
  max_width = std::min(max_width, extent);
  if (max_width <= 0 || extent <= 0) return out;
  for (int i = 0; i < count; ++i) {
    const int w = draw_int(rng, 0, max_width);
    const int start = draw_int(rng, 0, extent - w);
    out.push_back({start, w});
  }
  return out;
}

}  // namespace

SpecAugPolicy SpecAugPolicy::scaled_to(int dim, int base_dim) const {
  SpecAugPolicy p = *this;
  p.max_freq_width = static_cast<int>(std::lround(static_cast<double>(max_freq_width) * dim / base_dim));
  return p;
}

int SpecAugPolicy::time_width_bound(int frames) const {
  int bound = static_cast<int>(std::floor(max_time_ratio * frames));
  if (max_time_width >= 0) bound = std::min(bound, max_time_width);
  return std::max(bound, 0);
}

std::vector<MaskSpan> draw_freq_masks(int dim, const SpecAugPolicy& policy, Rng& rng) {
  return draw_spans(dim, policy.n_freq_masks, policy.max_freq_width, rng);
}

std::vector<MaskSpan> draw_time_masks(int frames, const SpecAugPolicy& policy, Rng& rng) {
  return draw_spans(frames, policy.n_time_masks, policy.time_width_bound(frames), rng);
}

void apply_freq_masks(Matrix& x, const std::vector<MaskSpan>& spans) {
  for (const auto& s : spans) {
    for (int r = 0; r < x.rows(); ++r) {
      for (int c = s.start; c < s.start + s.width; ++c) x(r, c) = 0.0;
    }
  }
}

void apply_time_masks(Matrix& x, const std::vector<MaskSpan>& spans) {
  for (const auto& s : spans) {
    for (int r = s.start; r < s.start + s.width; ++r) {
      auto row = x.row(r);
      std::fill(row.begin(), row.end(), 0.0);
    }
  }
}

Matrix freq_mask(const Matrix& x, const SpecAugPolicy& policy, Rng& rng) {
  Matrix out = x;
  apply_freq_masks(out, draw_freq_masks(x.cols(), policy, rng));
  return out;
}

Matrix time_mask(const Matrix& x, const SpecAugPolicy& policy, Rng& rng) {
  Matrix out = x;
  apply_time_masks(out, draw_time_masks(x.rows(), policy, rng));
  return out;
}

Matrix apply_time_warp(const Matrix& x, int center, int shift) {
  const int t = x.rows();
  if (shift == 0) return x;
  const int target = center + shift;
  if (center <= 0 || center >= t - 1 || target <= 0 || target >= t - 1) {
    throw UsageError("time warp: center and warped center must be interior frames");
  }
  Matrix out(t, x.cols());
  const double left = static_cast<double>(center) / target;
  const double right = static_cast<double>(t - 1 - center) / (t - 1 - target);
  for (int r = 0; r < t; ++r) {
    const double src = r <= target ? r * left : center + (r - target) * right;
    const int i0 = std::clamp(static_cast<int>(std::floor(src)), 0, t - 1);
    const int i1 = std::min(i0 + 1, t - 1);
    const double frac = src - i0;
    for (int c = 0; c < x.cols(); ++c) {
      out(r, c) = frac == 0.0 ? x(i0, c) : (1.0 - frac) * x(i0, c) + frac * x(i1, c);
    }
  }
  return out;
}

Matrix time_warp(const Matrix& x, const SpecAugPolicy& policy, Rng& rng) {
  const int w = policy.time_warp_window;
  if (w <= 0) return x;
  const int t = x.rows();
  if (t <= 2 * w) throw UsageError("time warp needs more than 2W frames");
  // Keep both the centre and its image strictly inside the utterance.
  if (t - w - 2 < w + 1) return x;
  const int center = draw_int(rng, w + 1, t - w - 2);
  const int shift = draw_int(rng, -w, w);
  return apply_time_warp(x, center, shift);
}

Matrix spec_augment(const Matrix& x, const SpecAugPolicy& policy, Rng& rng) {
  if (!policy.enabled) return x;
  Matrix out = policy.time_warp && x.rows() > 2 * policy.time_warp_window
                   ? time_warp(x, policy, rng)
                   : x;
  apply_freq_masks(out, draw_freq_masks(out.cols(), policy, rng));
  apply_time_masks(out, draw_time_masks(out.rows(), policy, rng));
  return out;
}

}  // namespace spkadapt
