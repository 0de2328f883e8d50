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

#include "spkadapt/kernels.h"

#include "kernel_rows.h"

namespace spkadapt::kernels::omp {

void gemm_nn(int m, int n, int k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) rows::nn(i, n, k, pa, pb, pc, accumulate);
}

void gemm_nt(int m, int n, int k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) rows::nt(i, n, k, pa, pb, pc, accumulate);
}

void gemm_tn(int m, int n, int k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) rows::tn(i, m, n, k, pa, pb, pc, accumulate);
}

void im2col(const ConvGeometry& g, std::span<const double> image,
            std::span<double> cols) {
  const double* src = image.data();
  double* dst = cols.data();
  const int n = g.patch();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) rows::im2col(g, r, src, dst);
}

void col2im(const ConvGeometry& g, std::span<const double> cols,
            std::span<double> image) {
  const double* src = cols.data();
  double* dst = image.data();
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < g.in_channels; ++ch) rows::col2im(g, ch, src, dst);
}

}  // namespace spkadapt::kernels::omp
