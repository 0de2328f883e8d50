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

// Transformer encoder-decoder ASR model with a convolutional subsampler, a
// CTC head on the encoder and a hybrid CTC/attention loss.

#ifndef SPKADAPT_MODEL_H_
#define SPKADAPT_MODEL_H_

#include <filesystem>
#include <string>
#include <vector>

#include "spkadapt/graph.h"
#include "spkadapt/tokenizer.h"

namespace spkadapt {

struct ModelConfig {
  int input_dim = 83;  // 83, or 166 for concatenated embeddings
  int enc_layers = 2;
  int dec_layers = 1;
  int d_model = 64;
  int heads = 2;
  int ffn_dim = 256;
  int conv_channels = 16;
  double dropout = 0.1;
  double ctc_weight = 0.3;
  double label_smoothing = 0.1;
  int vocab_size = 0;

  static ModelConfig desk();
  /// 12 encoder / 6 decoder layers, d 256, 4 heads, FFN 2048.
  static ModelConfig nptel();
  static ModelConfig preset(const std::string& name);  // desk | nptel

  void validate() const;  // UsageError
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

/// Frames after one kernel-3 stride-2 stage.
inline int conv_stage_length(int n) { return (n - 3) / 2 + 1; }
/// Frames after the two-stage subsampler; needs T >= 7.
inline int subsampled_length(int frames) { return conv_stage_length(conv_stage_length(frames)); }
inline constexpr int kMinInputFrames = 7;

/// All model parameters (the down-projection is added by the adapt module).
void init_model(ParamStore& p, const ModelConfig& cfg, Rng& rng);

/// Attention maps of one forward pass, per layer and head, in call order.
struct AttentionTrace {
  std::vector<Matrix> encoder_self;
  std::vector<Matrix> decoder_self;
  std::vector<Matrix> decoder_cross;
};

/// T x input_dim -> T'' x d_model (before positional encoding). DataError
/// when T < 7.
Var conv_subsample(Graph& g, const ParamStore& p, const ModelConfig& cfg, Var x);
/// Subsampler, scaled positional encoding and the encoder stack.
Var encode(Graph& g, const ParamStore& p, const ModelConfig& cfg, Var x,
           AttentionTrace* trace = nullptr);
/// Teacher-forced logits, one row per input token (input starts with sos).
Var decode_forward(Graph& g, const ParamStore& p, const ModelConfig& cfg, Var memory,
                   const std::vector<int>& input_tokens, AttentionTrace* trace = nullptr);
/// T'' x V log-probabilities of the CTC head.
Var ctc_log_probs(Graph& g, const ParamStore& p, const ModelConfig& cfg, Var memory);

struct HybridLoss {
  Var loss;  // 1x1 hybrid value
  double ctc = 0.0;
  double ce = 0.0;
  bool ctc_feasible = true;  // false: the CTC term was dropped
};
/// weight * ctc + (1 - weight) * ce for one utterance. An infeasible CTC
/// target (too few subsampled frames) leaves only the attention term.
HybridLoss hybrid_forward(Graph& g, const ParamStore& p, const ModelConfig& cfg, Var input,
                          const std::vector<int>& target, int sos_eos, int blank);

// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  Vocab vocab;
  ParamStore params;
  std::string adapt_json = "{}";  // adaptation settings used in training
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
};
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// DataError on a missing or incompatible file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace spkadapt

#endif  // SPKADAPT_MODEL_H_
