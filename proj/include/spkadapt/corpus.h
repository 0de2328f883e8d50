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

#ifndef SPKADAPT_CORPUS_H_
#define SPKADAPT_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spkadapt/common.h"
#include "spkadapt/wav.h"

namespace spkadapt {

struct UtteranceRecord {
  std::string utt_id;
  std::string speaker_id;
  std::string audio_path;  // relative to the manifest's directory
  double duration_s = 0.0;
  std::string transcript;

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

struct Manifest {
  std::vector<UtteranceRecord> records;
  int sample_rate = 16000;
  std::filesystem::path base_dir;  // where relative audio paths resolve

  std::filesystem::path audio_file(const UtteranceRecord& r) const {
    return base_dir / r.audio_path;
  }
  /// Speakers in order of first appearance.
  std::vector<std::string> speakers() const;
  const UtteranceRecord* find(const std::string& utt_id) const;
};

/// Writes the tab-separated manifest. Durations are printed with six
/// decimals; load_manifest recomputes them from the audio.
void save_manifest(const Manifest& m, const std::filesystem::path& path);

/// Parses a manifest, checks every referenced audio file exists and that its
/// sample count agrees with the listed duration within 1 ms.
Manifest load_manifest(const std::filesystem::path& path);

/// Names for the buckets produced by split_by_duration: "less_5", "5_15",
/// "15_above" for edges {5, 15}.
std::vector<std::string> bucket_names(const std::vector<double>& edges);

/// Index of the half-open bucket [edges[i-1], edges[i]) holding `duration`.
int bucket_index(double duration, const std::vector<double>& edges);

/// Partitions records into edges.size() + 1 buckets; throws UsageError if
/// the edges are not strictly increasing.
std::vector<Manifest> split_by_duration(const Manifest& m,
                                        const std::vector<double>& edges = {5.0, 15.0});

/// Holds out the last `per_speaker` utterances of every speaker.
std::pair<Manifest, Manifest> holdout_per_speaker(const Manifest& m, int per_speaker);

// ---------------------------------------------------------------------------
// Synthetic corpus.

/// Spectral colouring applied to every utterance of one speaker.
struct SpeakerColor {
  double formant_scale = 1.0;       // multiplies every token's formants
  double resonance_hz = 1500.0;     // extra speaker resonance
  double resonance_width_hz = 200.0;
  double resonance_gain = 0.5;      // linear gain of the resonance branch
  double tilt = 0.0;                // one-pole coefficient in (-1, 1); > 0 darkens
  double f0_hz = 140.0;
};

struct DurationBucket {
  std::string bucket;  // less_5 | 5_15 | 15_above
  double probability = 0.0;
};

struct CorpusSpec {
  int n_speakers = 8;
  int utterances_per_speaker = 10;
  std::vector<DurationBucket> duration_distribution = {
      {"less_5", 1.0}, {"5_15", 0.0}, {"15_above", 0.0}};
  double min_duration_s = 1.0;   // lower end of less_5
  double max_duration_s = 20.0;  // upper end of 15_above
  // Sentence grammar: one word from each slot, in order.
  std::vector<std::vector<std::string>> grammar = {
      {"bob", "kate", "sid", "tess"},
      {"sees", "eats", "kicks", "buys"},
      {"a", "the"},
      {"dot", "kite", "box", "bus", "cake"}};
  std::vector<SpeakerColor> speaker_colors;  // explicit; sampled if empty
  double color_strength = 1.0;               // spread of sampled colours
  int sample_rate = 16000;
  std::uint64_t seed = 1;

  /// Throws UsageError on an inconsistent spec.
  void validate() const;
};

CorpusSpec corpus_spec_from_json(const std::string& text);
std::string corpus_spec_to_json(const CorpusSpec& spec);

/// Colour of speaker `index`: explicit if given, otherwise drawn from the
/// seed.
SpeakerColor speaker_color(const CorpusSpec& spec, int index);

/// Token layout of one utterance: which unit is rendered for how many
/// samples. Silence segments carry token '\0'.
struct UtterancePlan {
  std::string transcript;
  std::vector<std::pair<char, int>> segments;
  long total_samples() const;
};

/// Draws words from the grammar until the target duration is filled, then
/// pads with silence so the audio lasts exactly round(target * rate) samples.
/// Pure function of (spec.seed, utt_id, target).
UtterancePlan plan_utterance(const CorpusSpec& spec, const std::string& utt_id,
                             double target_duration_s);

/// Renders a plan through the speaker's colouring. Pure function of its
/// arguments.
std::vector<double> render_utterance(const CorpusSpec& spec, const SpeakerColor& color,
                                     const std::string& utt_id, const UtterancePlan& plan);

/// Writes `out_dir/manifest.tsv` and `out_dir/wav/*.wav`.
Manifest generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir);

}  // namespace spkadapt

#endif  // SPKADAPT_CORPUS_H_
