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

#ifndef SPKADAPT_FRONTEND_H_
#define SPKADAPT_FRONTEND_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "spkadapt/matrix.h"
#include "spkadapt/wav.h"

namespace spkadapt {

inline constexpr int kFbankDim = 80;
inline constexpr int kPitchDim = 3;
inline constexpr int kFeatureDim = kFbankDim + kPitchDim;  // 83
inline constexpr double kLogFloor = -23.0;                 // log(exp(-23))

struct FeatureMatrix {
  Matrix data;  // T x D
  double frame_shift_s = 0.010;
  double frame_length_s = 0.025;
  std::string layout = "fbank80+pitch3";
};

struct FrameGeometry {
  int window;  // samples per frame
  int shift;   // samples between frame starts
  static FrameGeometry for_rate(int sample_rate) {
    return {sample_rate * 25 / 1000, sample_rate * 10 / 1000};
  }
  int frame_count(long n_samples) const {
    return n_samples < window ? 0 : static_cast<int>(1 + (n_samples - window) / shift);
  }
};

/// Splits audio into 25 ms frames every 10 ms, removes each frame's DC
/// offset and applies a periodic Hann window. Throws DataError when the audio
/// is shorter than one window.
Matrix frame_signal(std::span<const double> samples, int sample_rate);

/// Centre frequency (Hz) of every band of the HTK-scale mel bank used by fbank.
std::vector<double> mel_band_centers(int sample_rate, int n_mels = kFbankDim);

/// Log mel-filterbank energies of windowed frames (one row per frame).
Matrix fbank(const Matrix& frames, int sample_rate, int n_mels = kFbankDim);

/// Raw per-frame f0 (Hz, 0 where no peak was found) and peak NCCF.
struct PitchTrack {
  std::vector<double> f0;
  std::vector<double> voicing;
};
PitchTrack track_pitch(std::span<const double> samples, int sample_rate);

/// Per frame: normalized log-f0, voicing probability in [0, 1] and delta
/// log-f0. f0 comes from the normalized cross-correlation peak in
/// [60, 400] Hz. Row count equals frame_signal's.
Matrix pitch(std::span<const double> samples, int sample_rate);

enum class PitchMode { kNccf, kZeros };

/// fbank80 + pitch3 for one utterance.
FeatureMatrix extract_features(const Audio& audio, PitchMode mode = PitchMode::kNccf);

// ---------------------------------------------------------------------------

inline constexpr double kCmvnEpsilon = 1e-8;

/// Per-dimension mean and population variance, mergeable across shards.
class CmvnStats {
 public:
  CmvnStats() = default;
  explicit CmvnStats(int dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void accumulate(const Matrix& features);
  /// Combines two partial accumulations (parallel-variance merge).
  void merge(const CmvnStats& other);

  int dim() const { return static_cast<int>(mean_.size()); }
  long frame_count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  std::vector<double> variance() const;

  /// (x - mean) / sqrt(variance + eps); throws DataError without frames.
  Matrix apply(const Matrix& features) const;
  Matrix invert(const Matrix& normalized) const;

  std::string to_json() const;
  static CmvnStats from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static CmvnStats load(const std::filesystem::path& path);

 private:
  std::vector<double> mean_;
  std::vector<double> m2_;
  long count_ = 0;
};

/// Stats over several matrices, same as accumulating their concatenation.
CmvnStats cmvn_accumulate(std::span<const Matrix> features);

// ---------------------------------------------------------------------------

/// Per-utterance matrices in one binary file (float64, little endian) with a
/// plain-text index `utt_id \t offset \t rows \t cols`.
class FeatureArchive {
 public:
  static void write(const std::filesystem::path& dir,
                    const std::vector<std::pair<std::string, Matrix>>& items);
  static FeatureArchive open(const std::filesystem::path& dir);

  bool contains(const std::string& utt_id) const { return index_.count(utt_id) > 0; }
  Matrix get(const std::string& utt_id) const;  // DataError if absent
  std::vector<std::string> keys() const;

 private:
  struct Entry {
    long offset;
    int rows;
    int cols;
  };
  std::filesystem::path data_path_;
  std::map<std::string, Entry> index_;
};

struct Manifest;

/// Features for every record, in manifest order, extracted in parallel over
/// utterances. The result does not depend on the thread count.
std::vector<std::pair<std::string, Matrix>> extract_manifest_features(
    const Manifest& manifest, PitchMode mode = PitchMode::kNccf);

/// Per-utterance CMVN: every matrix normalized with its own statistics.
Matrix apply_utterance_cmvn(const Matrix& features);

}  // namespace spkadapt

#endif  // SPKADAPT_FRONTEND_H_
