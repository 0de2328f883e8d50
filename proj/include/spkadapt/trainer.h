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

#ifndef SPKADAPT_TRAINER_H_
#define SPKADAPT_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "spkadapt/adapt.h"
#include "spkadapt/model.h"
#include "spkadapt/specaug.h"

namespace spkadapt {

struct TrainConfig {
  int epochs = 30;
  int warmup_steps = 800;
  double lr_factor = 1.0;
  int batch_size = 8;     // utterances per micro-batch
  int batch_frames = 0;   // frame cap per micro-batch; 0 = none
  int accum_grad = 1;     // micro-batches per optimizer step
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  int average_k = 3;
  AdaptConfig adapt;
  SpecAugPolicy specaug;

  void validate() const;  // UsageError
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
};

std::string adapt_config_to_json(const AdaptConfig& a);
AdaptConfig adapt_config_from_json(const std::string& text);
std::string specaug_policy_to_json(const SpecAugPolicy& p);
SpecAugPolicy specaug_policy_from_json(const std::string& text);

struct TrainExample {
  std::string utt_id;
  const Matrix* features = nullptr;  // T x 83, CMVN'd
  std::vector<int> target;
  const SpeakerEmbedding* embedding = nullptr;  // required unless adapt mode is none
};

/// Utterance indices per micro-batch for one epoch: a seeded shuffle cut by
/// count and frame cap.
std::vector<std::vector<int>> make_batches(const std::vector<TrainExample>& data,
                                           const TrainConfig& cfg, int epoch);

/// Adds scale * d(loss)/d(params) for each utterance of `batch` into
/// `grads` (summed in batch order) and returns the summed hybrid loss.
/// Training mode enables dropout and SpecAugment with per-(epoch, utt_id)
/// streams. NumericError on a non-finite loss.
double accumulate_gradients(const ParamStore& params, const ModelConfig& model,
                            const TrainConfig& cfg, const std::vector<TrainExample>& data,
                            const std::vector<int>& batch, int epoch, int sos_eos, double scale,
                            Gradients& grads);

/// Mean hybrid loss without dropout or SpecAugment.
double evaluate_loss(const ParamStore& params, const ModelConfig& model, const TrainConfig& cfg,
                     const std::vector<TrainExample>& data, int sos_eos);

/// Fresh parameters (model plus down-projection when adapting).
ParamStore init_params(const ModelConfig& model, const TrainConfig& cfg);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double lr = 0.0;
  double wall_s = 0.0;
};

struct TrainResult {
  ParamStore last;
  ParamStore averaged;  // mean of the best average_k epochs by dev loss
  std::vector<EpochStats> log;
  long steps = 0;
};

struct TrainHooks {
  std::function<void(const EpochStats&)> on_epoch;
  std::function<void(long step, double loss)> on_step;
};

/// Runs cfg.epochs epochs. When `out_dir` is non-empty it receives
/// train_log.csv, checkpoints/epoch_NNN.bin, model.last.bin and
/// model.avg.bin. Training embeddings must be speaker-scope, dev ones
/// utterance-scope. `init` replaces the seeded initialization.
TrainResult train(const std::vector<TrainExample>& train_set, const std::vector<TrainExample>& dev_set,
                  const ModelConfig& model, const TrainConfig& cfg, const Vocab& vocab,
                  const std::filesystem::path& out_dir = {}, const ParamStore* init = nullptr,
                  const TrainHooks& hooks = {});

/// Key-wise arithmetic mean. DataError when key sets or shapes differ.
ParamStore average_params(const std::vector<const ParamStore*>& stores);
/// Indices of the k lowest dev losses (ties: later index first), in
/// ascending loss order. DataError when fewer than k entries.
std::vector<int> select_best(const std::vector<double>& dev_losses, int k);
/// Mean of the k checkpoints with the lowest dev loss.
ParamStore average_checkpoints(const std::vector<Checkpoint>& ckpts, int k);

}  // namespace spkadapt

#endif  // SPKADAPT_TRAINER_H_
