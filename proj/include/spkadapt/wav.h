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

#ifndef SPKADAPT_WAV_H_
#define SPKADAPT_WAV_H_

#include <filesystem>
#include <span>
#include <vector>

namespace spkadapt {

struct Audio {
  std::vector<double> samples;  // in [-1, 1)
  int sample_rate = 16000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Writes mono 16-bit PCM RIFF/WAVE. Samples are clipped to [-1, 1).
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate);

/// Reads mono 16-bit PCM RIFF/WAVE; throws DataError on anything else.
Audio read_wav(const std::filesystem::path& path);

/// Sample count and rate from the header only.
struct WavInfo {
  long sample_count = 0;
  int sample_rate = 0;
};
WavInfo probe_wav(const std::filesystem::path& path);

}  // namespace spkadapt

#endif  // SPKADAPT_WAV_H_
