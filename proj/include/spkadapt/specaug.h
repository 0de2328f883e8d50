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

#ifndef SPKADAPT_SPECAUG_H_
#define SPKADAPT_SPECAUG_H_

#include <vector>

#include "spkadapt/common.h"
#include "spkadapt/matrix.h"

namespace spkadapt {

struct SpecAugPolicy {
  bool enabled = true;
  int n_freq_masks = 2;
  int max_freq_width = 27;  // F, in columns
  int n_time_masks = 2;
  int max_time_width = -1;       // frames; < 0 means bounded by the ratio only
  double max_time_ratio = 0.05;  // of T
  bool time_warp = false;
  int time_warp_window = 5;  // W

  /// Frequency-mask width scaled from the 83-dim feature space to `dim`
  /// columns (27 -> 194 for the 595-dim joint matrix).
  SpecAugPolicy scaled_to(int dim, int base_dim = 83) const;
  /// Largest time-mask width for T frames.
  int time_width_bound(int frames) const;
};

/// Half-open span [start, start + width) along one axis.
struct MaskSpan {
  int start = 0;
  int width = 0;
  friend bool operator==(const MaskSpan&, const MaskSpan&) = default;
};

/// For each mask: width ~ U{0..F}, start ~ U{0..D-width}.
std::vector<MaskSpan> draw_freq_masks(int dim, const SpecAugPolicy& policy, Rng& rng);
std::vector<MaskSpan> draw_time_masks(int frames, const SpecAugPolicy& policy, Rng& rng);
/// Zeroes the given columns / rows in place; nothing else is written.
void apply_freq_masks(Matrix& x, const std::vector<MaskSpan>& spans);
void apply_time_masks(Matrix& x, const std::vector<MaskSpan>& spans);

Matrix freq_mask(const Matrix& x, const SpecAugPolicy& policy, Rng& rng);
Matrix time_mask(const Matrix& x, const SpecAugPolicy& policy, Rng& rng);

/// Moves frame `center` to `center + shift` and resamples both sides
/// linearly; shift = 0 is the identity.
Matrix apply_time_warp(const Matrix& x, int center, int shift);
/// Random warp with shift ~ U{-W..W}. Throws UsageError if T <= 2W.
Matrix time_warp(const Matrix& x, const SpecAugPolicy& policy, Rng& rng);

/// Warp (if enabled), then frequency masks, then time masks. Identity when
/// the policy is disabled.
Matrix spec_augment(const Matrix& x, const SpecAugPolicy& policy, Rng& rng);

}  // namespace spkadapt

#endif  // SPKADAPT_SPECAUG_H_
