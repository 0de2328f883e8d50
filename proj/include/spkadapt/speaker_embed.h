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

// Toy speaker-embedding extractor: frame encoder, mean+std pooling, a 512-dim
// projection (the embedding tap) and a speaker classifier used only for
// training. The "ff" flavour is a feed-forward frame stack in the spirit of
// x-vectors; "attn" puts one self-attention block in front of pooling.

#ifndef SPKADAPT_SPEAKER_EMBED_H_
#define SPKADAPT_SPEAKER_EMBED_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spkadapt/graph.h"

namespace spkadapt {

class FeatureArchive;
struct Manifest;

inline constexpr int kEmbeddingDim = 512;

enum class EmbeddingScope { kSpeaker, kUtterance };
std::string to_string(EmbeddingScope s);
EmbeddingScope parse_scope(const std::string& s);  // UsageError otherwise

struct SpeakerEmbedding {
  std::vector<double> vector;
  EmbeddingScope scope = EmbeddingScope::kUtterance;
  std::string id;       // utt_id or speaker_id, per scope
  std::string speaker;  // owning speaker (equals id for speaker scope)
  /// DataError unless the vector has 512 finite entries.
  void validate() const;
};

struct EmbedderConfig {
  std::string flavor = "ff";  // "ff" or "attn"
  int hidden = 64;
  int ff_layers = 2;
  int heads = 1;
  int epochs = 20;
  int batch = 8;
  int crop_frames = 200;  // random training crops; <= 0 uses whole utterances
  double lr = 2e-3;
  std::uint64_t seed = 1;
  void validate() const;
  std::string to_json() const;
  static EmbedderConfig from_json(const std::string& text);
};

struct EmbedderModel {
  EmbedderConfig config;
  std::vector<std::string> speakers;  // classifier classes, sorted
  ParamStore params;
  double train_accuracy = 0.0;

  void save(const std::filesystem::path& path) const;
  static EmbedderModel load(const std::filesystem::path& path);
};

/// Speaker-classification training on (features, speaker) pairs. DataError
/// with fewer than two speakers. Deterministic for a fixed seed.
EmbedderModel train_embedder(const std::vector<Matrix>& features,
                             const std::vector<std::string>& speaker_ids,
                             const EmbedderConfig& cfg);
EmbedderModel train_embedder(const Manifest& manifest, const FeatureArchive& features,
                             const EmbedderConfig& cfg);

/// Pools over every frame. DataError on an empty matrix.
SpeakerEmbedding extract_utterance_embedding(const EmbedderModel& model, const Matrix& features,
                                             const std::string& utt_id,
                                             const std::string& speaker = {});

/// Arithmetic mean of one speaker's utterance embeddings. DataError when the
/// list is empty or mixes speakers.
SpeakerEmbedding speaker_embedding(const std::vector<SpeakerEmbedding>& utterances);

/// Classifier posteriors' argmax, used for accuracy reporting.
int classify_speaker(const EmbedderModel& model, const Matrix& features);

/// Directory store: vectors.bin holds raw float64 vectors, index.txt maps
/// (id, scope) to a record. Writes append; a later put of the same key wins.
/// One writer at a time; any number of readers.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::filesystem::path dir);
  void put(const SpeakerEmbedding& e);
  /// std::nullopt when the key was never stored.
  std::optional<SpeakerEmbedding> get(const std::string& id, EmbeddingScope scope) const;
  /// DataError naming the key when missing.
  SpeakerEmbedding at(const std::string& id, EmbeddingScope scope) const;
  std::size_t size() const { return index_.size(); }
  std::vector<std::string> ids(EmbeddingScope scope) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  struct Entry {
    std::string speaker;
    long record = 0;
  };
  std::filesystem::path dir_;
  std::map<std::pair<std::string, EmbeddingScope>, Entry> index_;
  long records_ = 0;
};

}  // namespace spkadapt

#endif  // SPKADAPT_SPEAKER_EMBED_H_
