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

#include "spkadapt/frontend.h"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "spkadapt/common.h"
#include "spkadapt/corpus.h"

namespace spkadapt {
namespace {

constexpr int kFftSize = 512;
constexpr double kLowHz = 20.0;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filter weights over FFT bins 0..kFftSize/2.
struct MelBank {
  std::vector<std::vector<double>> weights;
  std::vector<int> first_bin;
};

MelBank make_mel_bank(int sample_rate, int n_mels) {
  const double lo = hz_to_mel(kLowHz), hi = hz_to_mel(sample_rate / 2.0);
  const double step = (hi - lo) / (n_mels + 1);
  MelBank bank;
  const int n_bins = kFftSize / 2 + 1;
  for (int m = 0; m < n_mels; ++m) {
    const double left = lo + m * step, center = left + step, right = center + step;
    std::vector<double> w;
    int first = -1;
    for (int k = 0; k < n_bins; ++k) {
      const double mel = hz_to_mel(static_cast<double>(k) * sample_rate / kFftSize);
      double v = 0.0;
      if (mel > left && mel <= center) v = (mel - left) / (center - left);
      else if (mel > center && mel < right) v = (right - mel) / (right - center);
      if (v > 0.0) {
        if (first < 0) first = k;
        w.resize(static_cast<std::size_t>(k - first + 1), 0.0);
        w.back() = v;
      }
    }
    bank.first_bin.push_back(std::max(first, 0));
    bank.weights.push_back(std::move(w));
  }
  return bank;
}

// FFTW planning is not thread-safe; execution with new arrays is.
fftw_plan r2c_plan() {
  static std::once_flag once;
  static fftw_plan plan;
  std::call_once(once, [] {
    double* in = fftw_alloc_real(kFftSize);
    fftw_complex* out = fftw_alloc_complex(kFftSize / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(kFftSize, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
  });
  return plan;
}

}  // namespace

Matrix frame_signal(std::span<const double> samples, int sample_rate) {
  const FrameGeometry g = FrameGeometry::for_rate(sample_rate);
  const int t = g.frame_count(static_cast<long>(samples.size()));
  if (t < 1) {
    throw DataError("audio shorter than one analysis window (" +
                    std::to_string(samples.size()) + " < " + std::to_string(g.window) +
                    " samples)");
  }
  std::vector<double> hann(static_cast<std::size_t>(g.window));
  for (int i = 0; i < g.window; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / g.window);
  }
  Matrix frames(t, g.window);
  for (int f = 0; f < t; ++f) {
    const double* src = samples.data() + static_cast<std::size_t>(f) * g.shift;
    double mean = 0.0;
    for (int i = 0; i < g.window; ++i) mean += src[i];
    mean /= g.window;
    auto row = frames.row(f);
    for (int i = 0; i < g.window; ++i) row[i] = (src[i] - mean) * hann[i];
  }
  return frames;
}

std::vector<double> mel_band_centers(int sample_rate, int n_mels) {
  const double lo = hz_to_mel(kLowHz), hi = hz_to_mel(sample_rate / 2.0);
  const double step = (hi - lo) / (n_mels + 1);
  std::vector<double> out;
  for (int m = 0; m < n_mels; ++m) out.push_back(mel_to_hz(lo + (m + 1) * step));
  return out;
}

Matrix fbank(const Matrix& frames, int sample_rate, int n_mels) {
  if (frames.cols() > kFftSize) throw DataError("frame longer than the FFT size");
  const MelBank bank = make_mel_bank(sample_rate, n_mels);
  const fftw_plan plan = r2c_plan();
  std::vector<double> in(kFftSize);
  std::vector<fftw_complex> spec(kFftSize / 2 + 1);
  std::vector<double> power(kFftSize / 2 + 1);
  Matrix out(frames.rows(), n_mels);
  for (int t = 0; t < frames.rows(); ++t) {
    std::fill(in.begin(), in.end(), 0.0);
    std::copy(frames.row(t).begin(), frames.row(t).end(), in.begin());
    fftw_execute_dft_r2c(plan, in.data(), spec.data());
    for (std::size_t k = 0; k < power.size(); ++k) {
      power[k] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    }
    for (int m = 0; m < n_mels; ++m) {
      double e = 0.0;
      const auto& w = bank.weights[m];
      for (std::size_t i = 0; i < w.size(); ++i) e += w[i] * power[bank.first_bin[m] + i];
      out(t, m) = e > std::exp(kLogFloor) ? std::log(e) : kLogFloor;
    }
  }
  return out;
}

PitchTrack track_pitch(std::span<const double> samples, int sample_rate) {
  const FrameGeometry g = FrameGeometry::for_rate(sample_rate);
  const int t_count = g.frame_count(static_cast<long>(samples.size()));
  if (t_count < 1) throw DataError("audio shorter than one analysis window");
  const int half = sample_rate * 20 / 1000;  // 40 ms analysis span
  const int min_lag = static_cast<int>(std::ceil(sample_rate / 400.0));
  const int max_lag = static_cast<int>(std::floor(sample_rate / 60.0));
  const int span = 2 * half;

  std::vector<double> f0(static_cast<std::size_t>(t_count), 0.0);
  std::vector<double> voicing(static_cast<std::size_t>(t_count), 0.0);
  std::vector<double> seg(static_cast<std::size_t>(span));
  std::vector<double> energy(static_cast<std::size_t>(span) + 1);
  std::vector<double> nccf(static_cast<std::size_t>(max_lag) + 2, 0.0);

  for (int t = 0; t < t_count; ++t) {
    const long center = static_cast<long>(t) * g.shift + g.window / 2;
    double mean = 0.0;
    for (int i = 0; i < span; ++i) {
      const long s = center - half + i;
      seg[i] = (s >= 0 && s < static_cast<long>(samples.size())) ? samples[s] : 0.0;
      mean += seg[i];
    }
    mean /= span;
    for (double& v : seg) v -= mean;
    energy[0] = 0.0;
    for (int i = 0; i < span; ++i) energy[i + 1] = energy[i] + seg[i] * seg[i];

    double best = 0.0;
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      const int n = span - lag;
      double cross = 0.0;
      for (int i = 0; i < n; ++i) cross += seg[i] * seg[i + lag];
      const double e0 = energy[n] - energy[0];
      const double e1 = energy[span] - energy[lag];
      const double denom = std::sqrt(e0 * e1);
      nccf[lag] = denom > 1e-12 ? cross / denom : 0.0;
      best = std::max(best, nccf[lag]);
    }
    // Earliest strong local peak avoids sub-harmonic (octave-down) errors.
    int chosen = -1;
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      const double left = lag > min_lag ? nccf[lag - 1] : -1.0;
      const double right = lag < max_lag ? nccf[lag + 1] : -1.0;
      if (nccf[lag] >= 0.9 * best && nccf[lag] >= left && nccf[lag] >= right) {
        chosen = lag;
        break;
      }
    }
    if (chosen < 0 || best <= 0.0) continue;
    double lag = chosen;
    if (chosen > min_lag && chosen < max_lag) {
      const double a = nccf[chosen - 1], b = nccf[chosen], c = nccf[chosen + 1];
      const double den = a - 2.0 * b + c;
      if (den < 0.0) lag += std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
    }
    voicing[t] = std::clamp(nccf[chosen], 0.0, 1.0);
    f0[t] = sample_rate / lag;
  }
  return {std::move(f0), std::move(voicing)};
}

Matrix pitch(std::span<const double> samples, int sample_rate) {
  const PitchTrack track = track_pitch(samples, sample_rate);
  const auto& f0 = track.f0;
  const auto& voicing = track.voicing;
  const int t_count = static_cast<int>(f0.size());

  constexpr double kVoicedThreshold = 0.3;
  constexpr double kDefaultF0 = 150.0;
  // Carry f0 forward through unvoiced frames; back-fill leading ones.
  double first_voiced = kDefaultF0;
  for (int t = 0; t < t_count; ++t) {
    if (voicing[t] >= kVoicedThreshold) {
      first_voiced = f0[t];
      break;
    }
  }
  std::vector<double> log_f0(static_cast<std::size_t>(t_count));
  double carry = first_voiced;
  double weighted = 0.0, weight = 0.0;
  for (int t = 0; t < t_count; ++t) {
    if (voicing[t] >= kVoicedThreshold) carry = f0[t];
    log_f0[t] = std::log(carry);
    weighted += voicing[t] * log_f0[t];
    weight += voicing[t];
  }
  const double mean_log = weight > 0.0 ? weighted / weight : std::log(kDefaultF0);

  Matrix out(t_count, kPitchDim);
  for (int t = 0; t < t_count; ++t) {
    const double prev = log_f0[std::max(t - 1, 0)];
    const double next = log_f0[std::min(t + 1, t_count - 1)];
    out(t, 0) = log_f0[t] - mean_log;
    out(t, 1) = voicing[t];
    out(t, 2) = 0.5 * (next - prev);
  }
  return out;
}

FeatureMatrix extract_features(const Audio& audio, PitchMode mode) {
  const Matrix fb = fbank(frame_signal(audio.samples, audio.sample_rate), audio.sample_rate);
  Matrix pt = mode == PitchMode::kZeros ? Matrix(fb.rows(), kPitchDim)
                                        : pitch(audio.samples, audio.sample_rate);
  FeatureMatrix f;
  f.data = hconcat(fb, pt);
  if (mode == PitchMode::kZeros) f.layout = "fbank80+zeros3";
  return f;
}

// ---------------------------------------------------------------------------

void CmvnStats::accumulate(const Matrix& features) {
  if (mean_.empty()) *this = CmvnStats(features.cols());
  if (features.cols() != dim()) throw DataError("CMVN: feature dimension mismatch");
  // Each matrix is folded in as its own shard so accumulate == merge.
  CmvnStats shard(dim());
  shard.count_ = features.rows();
  if (shard.count_ == 0) return;
  for (int r = 0; r < features.rows(); ++r) {
    for (int d = 0; d < dim(); ++d) shard.mean_[d] += features(r, d);
  }
  for (int d = 0; d < dim(); ++d) shard.mean_[d] /= shard.count_;
  for (int r = 0; r < features.rows(); ++r) {
    for (int d = 0; d < dim(); ++d) {
      const double dev = features(r, d) - shard.mean_[d];
      shard.m2_[d] += dev * dev;
    }
  }
  merge(shard);
}

void CmvnStats::merge(const CmvnStats& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  if (other.dim() != dim()) throw DataError("CMVN: cannot merge stats of different dims");
  const double na = static_cast<double>(count_), nb = static_cast<double>(other.count_);
  const double n = na + nb;
  for (int d = 0; d < dim(); ++d) {
    const double delta = other.mean_[d] - mean_[d];
    mean_[d] += delta * nb / n;
    m2_[d] += other.m2_[d] + delta * delta * na * nb / n;
  }
  count_ += other.count_;
}

std::vector<double> CmvnStats::variance() const {
  std::vector<double> v(m2_.size(), 0.0);
  if (count_ == 0) return v;
  for (std::size_t d = 0; d < v.size(); ++d) v[d] = std::max(0.0, m2_[d] / count_);
  return v;
}

Matrix CmvnStats::apply(const Matrix& features) const {
  if (count_ == 0) throw DataError("CMVN: stats have zero frames");
  if (features.cols() != dim()) throw DataError("CMVN: feature dimension mismatch");
  const auto var = variance();
  std::vector<double> inv(var.size());
  for (std::size_t d = 0; d < var.size(); ++d) inv[d] = 1.0 / std::sqrt(var[d] + kCmvnEpsilon);
  Matrix out(features.rows(), features.cols());
  for (int r = 0; r < features.rows(); ++r) {
    for (int d = 0; d < dim(); ++d) out(r, d) = (features(r, d) - mean_[d]) * inv[d];
  }
  return out;
}

Matrix CmvnStats::invert(const Matrix& normalized) const {
  if (count_ == 0) throw DataError("CMVN: stats have zero frames");
  const auto var = variance();
  Matrix out(normalized.rows(), normalized.cols());
  for (int r = 0; r < normalized.rows(); ++r) {
    for (int d = 0; d < dim(); ++d) {
      out(r, d) = normalized(r, d) * std::sqrt(var[d] + kCmvnEpsilon) + mean_[d];
    }
  }
  return out;
}

std::string CmvnStats::to_json() const {
  nlohmann::json j;
  j["frame_count"] = count_;
  j["mean"] = mean_;
  j["m2"] = m2_;
  j["variance"] = variance();
  return j.dump(1);
}

CmvnStats CmvnStats::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    CmvnStats s;
    s.count_ = j.at("frame_count").get<long>();
    s.mean_ = j.at("mean").get<std::vector<double>>();
    s.m2_ = j.at("m2").get<std::vector<double>>();
    if (s.mean_.size() != s.m2_.size()) throw DataError("CMVN stats: dimension mismatch");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("CMVN stats: ") + e.what());
  }
}

void CmvnStats::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << to_json() << '\n';
}

CmvnStats CmvnStats::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json(ss.str());
}

CmvnStats cmvn_accumulate(std::span<const Matrix> features) {
  CmvnStats s;
  for (const auto& f : features) s.accumulate(f);
  return s;
}

// ---------------------------------------------------------------------------

void FeatureArchive::write(const std::filesystem::path& dir,
                           const std::vector<std::pair<std::string, Matrix>>& items) {
  std::filesystem::create_directories(dir);
  std::ofstream data(dir / "feats.bin", std::ios::binary | std::ios::trunc);
  std::ofstream index(dir / "feats.idx", std::ios::trunc);
  if (!data || !index) throw DataError("cannot write feature archive in " + dir.string());
  long offset = 0;
  for (const auto& [id, m] : items) {
    data.write(reinterpret_cast<const char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(double)));
    index << id << '\t' << offset << '\t' << m.rows() << '\t' << m.cols() << '\n';
    offset += static_cast<long>(m.size() * sizeof(double));
  }
  if (!data || !index) throw DataError("short write to feature archive " + dir.string());
}

FeatureArchive FeatureArchive::open(const std::filesystem::path& dir) {
  FeatureArchive a;
  a.data_path_ = dir / "feats.bin";
  std::ifstream index(dir / "feats.idx");
  if (!index) throw DataError("cannot open feature index in " + dir.string());
  std::string line;
  int lineno = 0;
  while (std::getline(index, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id;
    Entry e{};
    if (!std::getline(ls, id, '\t') || !(ls >> e.offset >> e.rows >> e.cols)) {
      throw DataError((dir / "feats.idx").string() + ":" + std::to_string(lineno) +
                      ": malformed index line");
    }
    a.index_[id] = e;
  }
  return a;
}

Matrix FeatureArchive::get(const std::string& utt_id) const {
  const auto it = index_.find(utt_id);
  if (it == index_.end()) throw DataError("no features for utterance " + utt_id);
  std::ifstream data(data_path_, std::ios::binary);
  data.seekg(it->second.offset);
  Matrix m(it->second.rows, it->second.cols);
  data.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!data) throw DataError("truncated feature archive for " + utt_id);
  return m;
}

std::vector<std::string> FeatureArchive::keys() const {
  std::vector<std::string> out;
  for (const auto& kv : index_) out.push_back(kv.first);
  return out;
}

std::vector<std::pair<std::string, Matrix>> extract_manifest_features(const Manifest& manifest,
                                                                     PitchMode mode) {
  const int n = static_cast<int>(manifest.records.size());
  std::vector<std::pair<std::string, Matrix>> out(n);
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const auto& r = manifest.records[i];
    try {
      out[i] = {r.utt_id, extract_features(read_wav(manifest.audio_file(r)), mode).data};
    } catch (const std::exception& e) {
      errors[i] = r.utt_id + ": " + e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw DataError(e);
  }
  return out;
}

Matrix apply_utterance_cmvn(const Matrix& features) {
  CmvnStats s;
  s.accumulate(features);
  return s.apply(features);
}

}  // namespace spkadapt
