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

// Dense compute kernels. Every kernel exists twice: a plain serial reference
// in `kernels::serial` and an OpenMP version in `kernels::omp`. The OpenMP
// versions partition output rows only, so each output element is produced by
// the same sequence of floating-point operations as in the serial version and
// the two agree bit for bit. The unqualified entry points in `kernels`
// dispatch to OpenMP when the problem is large and we are not already inside
// a parallel region.

#ifndef SPKADAPT_KERNELS_H_
#define SPKADAPT_KERNELS_H_

#include <span>

namespace spkadapt::kernels {

struct ConvGeometry {
  int in_channels;
  int height;  // time
  int width;   // feature
  int kernel;
  int stride;
  int out_height() const { return (height - kernel) / stride + 1; }
  int out_width() const { return (width - kernel) / stride + 1; }
  int patch() const { return in_channels * kernel * kernel; }
};

#define SPKADAPT_DECLARE_KERNELS                                              \
  /* C(MxN) (+)= A(MxK) * B(KxN) */                                           \
  void gemm_nn(int m, int n, int k, std::span<const double> a,                \
               std::span<const double> b, std::span<double> c,                \
               bool accumulate);                                              \
  /* C(MxN) (+)= A(MxK) * B(NxK)^T */                                         \
  void gemm_nt(int m, int n, int k, std::span<const double> a,                \
               std::span<const double> b, std::span<double> c,                \
               bool accumulate);                                              \
  /* C(MxN) (+)= A(KxM)^T * B(KxN) */                                         \
  void gemm_tn(int m, int n, int k, std::span<const double> a,                \
               std::span<const double> b, std::span<double> c,                \
               bool accumulate);                                              \
  /* image (C x H*W) -> columns (C*k*k x H'*W') */                            \
  void im2col(const ConvGeometry& g, std::span<const double> image,           \
              std::span<double> cols);                                        \
  /* accumulate columns back into image (adjoint of im2col) */                \
  void col2im(const ConvGeometry& g, std::span<const double> cols,            \
              std::span<double> image);

namespace serial {
SPKADAPT_DECLARE_KERNELS
}  // namespace serial

namespace omp {
SPKADAPT_DECLARE_KERNELS
}  // namespace omp

SPKADAPT_DECLARE_KERNELS

#undef SPKADAPT_DECLARE_KERNELS

/// Caps the OpenMP pool used by the dispatching kernels and by callers that
/// parallelize over utterances. n <= 0 leaves the runtime default.
void set_num_threads(int n);
int num_threads();

}  // namespace spkadapt::kernels

#endif  // SPKADAPT_KERNELS_H_
