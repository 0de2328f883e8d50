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

#include "spkadapt/model.h"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "spkadapt/layers.h"
#include "spkadapt/losses.h"
#include "spkadapt/param_io.h"

namespace spkadapt {
namespace {

using nlohmann::json;

std::string layer(const char* part, int i) { return std::string(part) + "." + std::to_string(i); }

kernels::ConvGeometry stage(int channels, int height, int width) {
  return {channels, height, width, 3, 2};
}

}  // namespace

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::nptel() {
  ModelConfig c;
  c.enc_layers = 12;
  c.dec_layers = 6;
  c.d_model = 256;
  c.heads = 4;
  c.ffn_dim = 2048;
  c.conv_channels = 64;
  return c;
}

ModelConfig ModelConfig::preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "nptel") return nptel();
  throw UsageError("unknown model preset '" + name + "' (expected desk|nptel)");
}

void ModelConfig::validate() const {
  if (input_dim != 83 && input_dim != 166) throw UsageError("input_dim must be 83 or 166");
  if (d_model < 1 || heads < 1 || d_model % heads != 0) {
    throw UsageError("d_model must be a positive multiple of heads");
  }
  if (enc_layers < 1 || dec_layers < 1 || ffn_dim < 1 || conv_channels < 1) {
    throw UsageError("layer counts and widths must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("dropout must be in [0, 1)");
  if (ctc_weight < 0.0 || ctc_weight > 1.0) throw UsageError("ctc_weight must be in [0, 1]");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
    throw UsageError("label_smoothing must be in [0, 1)");
  }
  if (vocab_size < 4) throw UsageError("vocab_size must be at least 4");
}

std::string ModelConfig::to_json() const {
  return json{{"input_dim", input_dim},   {"enc_layers", enc_layers},
              {"dec_layers", dec_layers}, {"d_model", d_model},
              {"heads", heads},           {"ffn_dim", ffn_dim},
              {"conv_channels", conv_channels}, {"dropout", dropout},
              {"ctc_weight", ctc_weight}, {"label_smoothing", label_smoothing},
              {"vocab_size", vocab_size}}
      .dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw UsageError("model config is not a JSON object");
  ModelConfig c = preset(j.value("preset", std::string("desk")));
  c.input_dim = j.value("input_dim", c.input_dim);
  c.enc_layers = j.value("enc_layers", c.enc_layers);
  c.dec_layers = j.value("dec_layers", c.dec_layers);
  c.d_model = j.value("d_model", c.d_model);
  c.heads = j.value("heads", c.heads);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.conv_channels = j.value("conv_channels", c.conv_channels);
  c.dropout = j.value("dropout", c.dropout);
  c.ctc_weight = j.value("ctc_weight", c.ctc_weight);
  c.label_smoothing = j.value("label_smoothing", c.label_smoothing);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  return c;
}

void init_model(ParamStore& p, const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  const int c = cfg.conv_channels;
  const int d = cfg.d_model;
  init_linear(p, "subsample.conv1", c, 9, rng);
  init_linear(p, "subsample.conv2", c, 9 * c, rng);
  const int w2 = conv_stage_length(conv_stage_length(cfg.input_dim));
  init_linear(p, "subsample.out", d, c * w2, rng);
  for (int i = 0; i < cfg.enc_layers; ++i) {
    const std::string pre = layer("encoder", i);
    init_attention(p, pre + ".self_attn", d, rng);
    init_layer_norm(p, pre + ".norm1", d);
    init_feed_forward(p, pre + ".ffn", d, cfg.ffn_dim, rng);
    init_layer_norm(p, pre + ".norm2", d);
  }
  Matrix emb(cfg.vocab_size, d);
  std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  for (auto& v : emb.storage()) v = n(rng);
  p["decoder.embed"] = std::move(emb);
  for (int i = 0; i < cfg.dec_layers; ++i) {
    const std::string pre = layer("decoder", i);
    init_attention(p, pre + ".self_attn", d, rng);
    init_layer_norm(p, pre + ".norm1", d);
    init_attention(p, pre + ".src_attn", d, rng);
    init_layer_norm(p, pre + ".norm2", d);
    init_feed_forward(p, pre + ".ffn", d, cfg.ffn_dim, rng);
    init_layer_norm(p, pre + ".norm3", d);
  }
  init_linear(p, "decoder.out", cfg.vocab_size, d, rng);
  init_linear(p, "ctc", cfg.vocab_size, d, rng);
}

Var conv_subsample(Graph& g, const ParamStore& p, const ModelConfig& cfg, Var x) {
  const int t = x.rows();
  const int f = x.cols();
  if (t < kMinInputFrames) {
    throw DataError("input has " + std::to_string(t) + " frames; the subsampler needs at least 7");
  }
  if (f != cfg.input_dim) {
    throw DataError("input has " + std::to_string(f) + " columns, model expects " +
                    std::to_string(cfg.input_dim));
  }
  const int c = cfg.conv_channels;
  const auto g1 = stage(1, t, f);
  Var h = relu(conv2d(reshape(x, 1, t * f), g1, g.param(p, "subsample.conv1.weight"),
                      g.param(p, "subsample.conv1.bias")));
  const auto g2 = stage(c, g1.out_height(), g1.out_width());
  h = relu(conv2d(h, g2, g.param(p, "subsample.conv2.weight"), g.param(p, "subsample.conv2.bias")));
  h = channels_to_frames(h, c, g2.out_height(), g2.out_width());
  return linear_layer(g, p, "subsample.out", h);
}

Var encode(Graph& g, const ParamStore& p, const ModelConfig& cfg, Var x, AttentionTrace* trace) {
  Var h = conv_subsample(g, p, cfg, x);
  h = add(scale(h, std::sqrt(static_cast<double>(cfg.d_model))),
          g.constant(positional_encoding(h.rows(), cfg.d_model)));
  h = dropout(h, cfg.dropout);
  for (int i = 0; i < cfg.enc_layers; ++i) {
    const std::string pre = layer("encoder", i);
    Var a = multi_head_attention(g, p, pre + ".self_attn", h, h, cfg.heads, nullptr, cfg.dropout,
                                 trace ? &trace->encoder_self : nullptr);
    h = layer_norm_layer(g, p, pre + ".norm1", add(h, dropout(a, cfg.dropout)));
    Var f = feed_forward(g, p, pre + ".ffn", h, cfg.dropout);
    h = layer_norm_layer(g, p, pre + ".norm2", add(h, dropout(f, cfg.dropout)));
  }
  return h;
}

Var decode_forward(Graph& g, const ParamStore& p, const ModelConfig& cfg, Var memory,
                   const std::vector<int>& input_tokens, AttentionTrace* trace) {
  if (input_tokens.empty()) throw DataError("decoder input is empty");
  const int l = static_cast<int>(input_tokens.size());
  Var h = embedding(g.param(p, "decoder.embed"), input_tokens);
  h = add(scale(h, std::sqrt(static_cast<double>(cfg.d_model))),
          g.constant(positional_encoding(l, cfg.d_model)));
  h = dropout(h, cfg.dropout);
  const Matrix mask = causal_mask(l);
  for (int i = 0; i < cfg.dec_layers; ++i) {
    const std::string pre = layer("decoder", i);
    Var a = multi_head_attention(g, p, pre + ".self_attn", h, h, cfg.heads, &mask, cfg.dropout,
                                 trace ? &trace->decoder_self : nullptr);
    h = layer_norm_layer(g, p, pre + ".norm1", add(h, dropout(a, cfg.dropout)));
    Var s = multi_head_attention(g, p, pre + ".src_attn", h, memory, cfg.heads, nullptr,
                                 cfg.dropout, trace ? &trace->decoder_cross : nullptr);
    h = layer_norm_layer(g, p, pre + ".norm2", add(h, dropout(s, cfg.dropout)));
    Var f = feed_forward(g, p, pre + ".ffn", h, cfg.dropout);
    h = layer_norm_layer(g, p, pre + ".norm3", add(h, dropout(f, cfg.dropout)));
  }
  return linear_layer(g, p, "decoder.out", h);
}

Var ctc_log_probs(Graph& g, const ParamStore& p, const ModelConfig& cfg, Var memory) {
  (void)cfg;
  return log_softmax_rows(linear_layer(g, p, "ctc", memory));
}

HybridLoss hybrid_forward(Graph& g, const ParamStore& p, const ModelConfig& cfg, Var input,
                          const std::vector<int>& target, int sos_eos, int blank) {
  if (target.empty()) throw DataError("empty target sequence");
  Var memory = encode(g, p, cfg, input);
  std::vector<int> in{sos_eos}, out = target;
  in.insert(in.end(), target.begin(), target.end());
  out.push_back(sos_eos);
  Var ce = attention_ce_loss(decode_forward(g, p, cfg, memory, in), out, cfg.label_smoothing);
  HybridLoss r;
  r.ce = ce.value()(0, 0);
  CtcLoss ctc = ctc_loss(ctc_log_probs(g, p, cfg, memory), target, blank);
  r.ctc_feasible = ctc.feasible;
  if (!ctc.feasible) {
    r.ctc = std::numeric_limits<double>::infinity();
    r.loss = ce;
    return r;
  }
  r.ctc = ctc.loss.value()(0, 0);
  r.loss = hybrid_loss(ctc.loss, ce, cfg.ctc_weight);
  return r;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json meta{{"kind", "asr"},
            {"version", kCheckpointVersion},
            {"config", json::parse(ckpt.config.to_json())},
            {"vocab", ckpt.vocab.tokens()},
            {"adapt", json::parse(ckpt.adapt_json)},
            {"epoch", ckpt.epoch},
            {"train_loss", ckpt.train_loss},
            {"dev_loss", ckpt.dev_loss}};
  save_params(path, meta.dump(), ckpt.params);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  ParamFile f = load_params(path);
  json meta = json::parse(f.metadata_json, nullptr, false);
  if (meta.is_discarded() || meta.value("kind", "") != "asr") {
    throw DataError(path.string() + ": not an ASR checkpoint");
  }
  if (meta.value("version", 0) != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version");
  }
  Checkpoint c;
  c.config = ModelConfig::from_json(meta["config"].dump());
  c.vocab = Vocab::from_tokens(meta["vocab"].get<std::vector<std::string>>());
  c.adapt_json = meta["adapt"].dump();
  c.epoch = meta.value("epoch", 0);
  c.train_loss = meta.value("train_loss", 0.0);
  c.dev_loss = meta.value("dev_loss", 0.0);
  c.params = std::move(f.params);
  return c;
}

}  // namespace spkadapt
