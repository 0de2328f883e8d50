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

#include <omp.h>

namespace spkadapt::kernels {
namespace {

// Below this many multiply-adds the fork/join cost outweighs the work.
constexpr long kParallelWork = 1L << 16;

bool go_parallel(long work) {
  return work >= kParallelWork && !omp_in_parallel() && omp_get_max_threads() > 1;
}

}  // namespace

void gemm_nn(int m, int n, int k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  if (go_parallel(static_cast<long>(m) * n * k)) {
    omp::gemm_nn(m, n, k, a, b, c, accumulate);
  } else {
    serial::gemm_nn(m, n, k, a, b, c, accumulate);
  }
}

void gemm_nt(int m, int n, int k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  if (go_parallel(static_cast<long>(m) * n * k)) {
    omp::gemm_nt(m, n, k, a, b, c, accumulate);
  } else {
    serial::gemm_nt(m, n, k, a, b, c, accumulate);
  }
}

void gemm_tn(int m, int n, int k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  if (go_parallel(static_cast<long>(m) * n * k)) {
    omp::gemm_tn(m, n, k, a, b, c, accumulate);
  } else {
    serial::gemm_tn(m, n, k, a, b, c, accumulate);
  }
}

void im2col(const ConvGeometry& g, std::span<const double> image,
            std::span<double> cols) {
  if (go_parallel(static_cast<long>(g.patch()) * g.out_height() * g.out_width())) {
    omp::im2col(g, image, cols);
  } else {
    serial::im2col(g, image, cols);
  }
}

void col2im(const ConvGeometry& g, std::span<const double> cols,
            std::span<double> image) {
  if (go_parallel(static_cast<long>(g.patch()) * g.out_height() * g.out_width())) {
    omp::col2im(g, cols, image);
  } else {
    serial::col2im(g, cols, image);
  }
}

void set_num_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int num_threads() { return omp_get_max_threads(); }

}  // namespace spkadapt::kernels
