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

// Per-row bodies shared by the serial and OpenMP kernels. Both loops call
// these, so an output row is computed by the same code either way.

#ifndef SPKADAPT_SRC_KERNEL_ROWS_H_
#define SPKADAPT_SRC_KERNEL_ROWS_H_

#include <algorithm>
#include <cstddef>

#include "spkadapt/kernels.h"

namespace spkadapt::kernels::rows {

inline void nn(int i, int n, int k, const double* a, const double* b, double* c, bool accumulate) {
  double* crow = c + static_cast<std::size_t>(i) * n;
  if (!accumulate) std::fill(crow, crow + n, 0.0);
  const double* arow = a + static_cast<std::size_t>(i) * k;
  for (int p = 0; p < k; ++p) {
    const double aip = arow[p];
    if (aip == 0.0) continue;
    const double* brow = b + static_cast<std::size_t>(p) * n;
    for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
  }
}

inline void nt(int i, int n, int k, const double* a, const double* b, double* c, bool accumulate) {
  const double* arow = a + static_cast<std::size_t>(i) * k;
  double* crow = c + static_cast<std::size_t>(i) * n;
  for (int j = 0; j < n; ++j) {
    const double* brow = b + static_cast<std::size_t>(j) * k;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int p = 0;
    for (; p + 4 <= k; p += 4) {
      s0 += arow[p] * brow[p];
      s1 += arow[p + 1] * brow[p + 1];
      s2 += arow[p + 2] * brow[p + 2];
      s3 += arow[p + 3] * brow[p + 3];
    }
    for (; p < k; ++p) s0 += arow[p] * brow[p];
    const double s = (s0 + s1) + (s2 + s3);
    crow[j] = accumulate ? crow[j] + s : s;
  }
}

// row i of A^T B, A stored k x m
inline void tn(int i, int m, int n, int k, const double* a, const double* b, double* c, bool accumulate) {
  double* crow = c + static_cast<std::size_t>(i) * n;
  if (!accumulate) std::fill(crow, crow + n, 0.0);
  for (int p = 0; p < k; ++p) {
    const double api = a[static_cast<std::size_t>(p) * m + i];
    if (api == 0.0) continue;
    const double* brow = b + static_cast<std::size_t>(p) * n;
    for (int j = 0; j < n; ++j) crow[j] += api * brow[j];
  }
}

inline void im2col(const ConvGeometry& g, int r, const double* image, double* cols) {
  const int oh = g.out_height(), ow = g.out_width();
  const int kk = g.kernel * g.kernel;
  const int ch = r / kk, ki = (r % kk) / g.kernel, kj = r % g.kernel;
  const double* img = image + static_cast<std::size_t>(ch) * g.height * g.width;
  double* out = cols + static_cast<std::size_t>(r) * oh * ow;
  for (int y = 0; y < oh; ++y) {
    const double* src = img + static_cast<std::size_t>(y * g.stride + ki) * g.width + kj;
    for (int x = 0; x < ow; ++x) out[y * ow + x] = src[x * g.stride];
  }
}

// channels never overlap in the image, so they are the unit of work
inline void col2im(const ConvGeometry& g, int ch, const double* cols, double* image) {
  const int oh = g.out_height(), ow = g.out_width();
  const int kk = g.kernel * g.kernel;
  double* img = image + static_cast<std::size_t>(ch) * g.height * g.width;
  for (int q = 0; q < kk; ++q) {
    const int ki = q / g.kernel, kj = q % g.kernel;
    const double* in = cols + static_cast<std::size_t>(ch * kk + q) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      double* dst = img + static_cast<std::size_t>(y * g.stride + ki) * g.width + kj;
      for (int x = 0; x < ow; ++x) dst[x * g.stride] += in[y * ow + x];
    }
  }
}

}  // namespace spkadapt::kernels::rows

#endif  // SPKADAPT_SRC_KERNEL_ROWS_H_
