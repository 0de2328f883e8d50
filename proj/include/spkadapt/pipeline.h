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

// End-to-end orchestration: corpus -> features -> embeddings -> training ->
// decoding -> scoring, with resumable stages. Each stage writes a `.stage`
// marker holding a hash of everything it depends on; a stage whose marker
// matches is skipped.

#ifndef SPKADAPT_PIPELINE_H_
#define SPKADAPT_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spkadapt/corpus.h"
#include "spkadapt/decode.h"
#include "spkadapt/frontend.h"
#include "spkadapt/model.h"
#include "spkadapt/score.h"
#include "spkadapt/speaker_embed.h"
#include "spkadapt/trainer.h"

namespace spkadapt {

enum class CmvnMode { kGlobal, kUtterance };
CmvnMode parse_cmvn_mode(const std::string& s);
std::string to_string(CmvnMode m);
PitchMode parse_pitch_mode(const std::string& s);
std::string to_string(PitchMode m);
ScoreUnit parse_score_unit(const std::string& s);
std::string to_string(ScoreUnit u);

/// Named system of the experiment matrix: "baseline" or
/// "{x,s}_{add,cat}" where x uses the "ff" embedder and s the "attn" one.
struct SystemSpec {
  std::string name;
  AdaptMode mode = AdaptMode::kNone;
  std::string embedder;  // "x", "s" or empty
};
SystemSpec parse_system(const std::string& name);  // UsageError listing valid names
const std::vector<std::string>& all_systems();

struct RunConfig {
  std::filesystem::path root = "run";
  std::uint64_t seed = 1;  // training and embedder seed; the corpus has its own
  int threads = 0;
  CorpusSpec corpus;
  int dev_per_speaker = 3;
  CmvnMode cmvn = CmvnMode::kGlobal;
  PitchMode pitch = PitchMode::kNccf;
  EmbedderConfig x_embedder;  // flavor ff
  EmbedderConfig s_embedder;  // flavor attn
  ModelConfig model;
  TrainConfig train;
  DecodeConfig decode;
  std::vector<double> edges = {5.0, 15.0};
  ScoreUnit unit = ScoreUnit::kWord;
  std::vector<std::string> systems = all_systems();
  std::string checkpoint = "avg";  // avg | last

  RunConfig();
  void validate() const;
  std::string to_json() const;  // every key, pretty printed
  /// Keys missing from `text` keep their defaults; unknown keys are a
  /// UsageError.
  static RunConfig from_json(const std::string& text);
};

/// Sets dotted key paths ("train.epochs") in a config JSON text. Values
/// are parsed as JSON and fall back to plain strings; a comma list fills
/// an array-valued key. Unknown keys are a UsageError.
std::string apply_overrides(const std::string& config_json,
                            const std::vector<std::pair<std::string, std::string>>& overrides);
/// SPKADAPT_TRAIN__EPOCHS=3 -> ("train.epochs", "3"), from the process
/// environment.
std::vector<std::pair<std::string, std::string>> env_overrides();

// --- stage operations, shared by `run` and the single-stage subcommands ---

struct CorpusSplit {
  Manifest all;
  Manifest train;
  Manifest dev;
};
/// Generates audio plus manifest.tsv, train.tsv and dev.tsv (the last
/// `dev_per_speaker` utterances of each speaker) under `dir`.
CorpusSplit generate_split_corpus(const CorpusSpec& spec, int dev_per_speaker,
                                  const std::filesystem::path& dir);

/// Raw features for every manifest utterance into an archive at `dir`.
void extract_feature_archive(const Manifest& m, PitchMode pitch, const std::filesystem::path& dir);
/// Normalizes every utterance of `raw`: with `global` stats, or each with
/// its own when null.
void normalize_feature_archive(const FeatureArchive& raw, const CmvnStats* global,
                               const std::filesystem::path& dir);
CmvnStats accumulate_cmvn(const Manifest& m, const FeatureArchive& raw);

/// Utterance-scope embeddings for every manifest utterance, or speaker-scope
/// means over each speaker's manifest utterances, appended to `store`.
void extract_embeddings(const EmbedderModel& model, const Manifest& m, const FeatureArchive& feats,
                        EmbeddingScope scope, EmbeddingStore& store);

/// Character vocabulary from the training transcripts, targets for both
/// sets and embeddings looked up by scope, then train(). Writes vocab.txt
/// and the run outputs into `out_dir`.
TrainResult train_system(const Manifest& train_set, const Manifest& dev_set,
                         const FeatureArchive& feats, const EmbeddingStore* store,
                         ModelConfig model, const TrainConfig& cfg,
                         const std::filesystem::path& out_dir, const TrainHooks& hooks = {});

/// Decodes every manifest utterance (in parallel, results in manifest
/// order) with utterance-scope embeddings when the checkpoint is adapted.
std::vector<Hypothesis> decode_manifest(const Checkpoint& ckpt, const Manifest& m,
                                        const FeatureArchive& feats, const EmbeddingStore* store,
                                        const DecodeConfig& cfg);

SystemHyps load_system_hyps(const std::string& name, const std::filesystem::path& hyps_file);

/// Runs the configured systems end to end below cfg.root and writes
/// reports/comparison.{txt,csv}. Stages already complete with the same
/// inputs are reused. Errors are rethrown with the stage name prepended.
ScoreReport run_experiment(const RunConfig& cfg,
                           const std::function<void(const std::string&)>& log = {});

}  // namespace spkadapt

#endif  // SPKADAPT_PIPELINE_H_
