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

#include "spkadapt/speaker_embed.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "spkadapt/corpus.h"
#include "spkadapt/frontend.h"
#include "spkadapt/layers.h"
#include "spkadapt/losses.h"
#include "spkadapt/optim.h"
#include "spkadapt/param_io.h"

namespace spkadapt {
namespace {

using nlohmann::json;

void init_embedder(ParamStore& p, const EmbedderConfig& cfg, int n_speakers) {
  Rng rng = make_rng(cfg.seed, "embedder-init");
  const int h = cfg.hidden;
  if (cfg.flavor == "ff") {
    int in = kFeatureDim;
    for (int i = 0; i < cfg.ff_layers; ++i) {
      init_linear(p, "frame." + std::to_string(i), h, in, rng);
      in = h;
    }
  } else {
    init_linear(p, "frame.0", h, kFeatureDim, rng);
    init_attention(p, "attn.self", h, rng);
    init_layer_norm(p, "attn.norm1", h);
    init_feed_forward(p, "attn.ffn", h, 2 * h, rng);
    init_layer_norm(p, "attn.norm2", h);
  }
  init_linear(p, "embed", kEmbeddingDim, 2 * h, rng);
  init_linear(p, "classifier", n_speakers, kEmbeddingDim, rng);
}

// Returns the 1 x 512 embedding tap.
Var embed_forward(Graph& g, const ParamStore& p, const EmbedderConfig& cfg, const Matrix& x) {
  Var h = g.constant(x);
  if (cfg.flavor == "ff") {
    for (int i = 0; i < cfg.ff_layers; ++i) {
      h = relu(linear_layer(g, p, "frame." + std::to_string(i), h));
    }
  } else {
    h = relu(linear_layer(g, p, "frame.0", h));
    Var a = multi_head_attention(g, p, "attn.self", h, h, cfg.heads, nullptr, 0.0);
    h = layer_norm_layer(g, p, "attn.norm1", add(h, a));
    h = layer_norm_layer(g, p, "attn.norm2", add(h, feed_forward(g, p, "attn.ffn", h, 0.0)));
  }
  return linear_layer(g, p, "embed", mean_std_pool(h, 1e-8));
}

Var classifier_logits(Graph& g, const ParamStore& p, Var emb) {
  return linear_layer(g, p, "classifier", relu(emb));
}

Matrix crop(const Matrix& x, int frames, Rng& rng) {
  if (frames <= 0 || x.rows() <= frames) return x;
  const int start = std::uniform_int_distribution<int>(0, x.rows() - frames)(rng);
  return x.row_slice(start, frames);
}

}  // namespace

std::string to_string(EmbeddingScope s) {
  return s == EmbeddingScope::kSpeaker ? "speaker" : "utterance";
}

EmbeddingScope parse_scope(const std::string& s) {
  if (s == "speaker") return EmbeddingScope::kSpeaker;
  if (s == "utterance") return EmbeddingScope::kUtterance;
  throw UsageError("unknown embedding scope '" + s + "' (expected speaker|utterance)");
}

void SpeakerEmbedding::validate() const {
  if (vector.size() != static_cast<std::size_t>(kEmbeddingDim)) {
    throw DataError("embedding " + id + " has dimension " + std::to_string(vector.size()) +
                    ", expected 512");
  }
  for (double v : vector) {
    if (!std::isfinite(v)) throw DataError("embedding " + id + " is not finite");
  }
}

void EmbedderConfig::validate() const {
  if (flavor != "ff" && flavor != "attn") {
    throw UsageError("embedder flavor must be ff or attn, got '" + flavor + "'");
  }
  if (hidden < 1 || ff_layers < 1 || heads < 1 || hidden % heads != 0 || epochs < 0 ||
      batch < 1 || lr <= 0.0) {
    throw UsageError("invalid embedder config");
  }
}

std::string EmbedderConfig::to_json() const {
  return json{{"flavor", flavor}, {"hidden", hidden}, {"ff_layers", ff_layers},
              {"heads", heads},   {"epochs", epochs}, {"batch", batch},
              {"crop_frames", crop_frames}, {"lr", lr}, {"seed", seed}}
      .dump();
}

EmbedderConfig EmbedderConfig::from_json(const std::string& text) {
  EmbedderConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("embedder config: ") + e.what());
  }
  c.flavor = j.value("flavor", c.flavor);
  c.hidden = j.value("hidden", c.hidden);
  c.ff_layers = j.value("ff_layers", c.ff_layers);
  c.heads = j.value("heads", c.heads);
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.crop_frames = j.value("crop_frames", c.crop_frames);
  c.lr = j.value("lr", c.lr);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

void EmbedderModel::save(const std::filesystem::path& path) const {
  json meta{{"kind", "embedder"},
            {"config", json::parse(config.to_json())},
            {"speakers", speakers},
            {"train_accuracy", train_accuracy}};
  save_params(path, meta.dump(), params);
}

EmbedderModel EmbedderModel::load(const std::filesystem::path& path) {
  ParamFile f = load_params(path);
  json meta = json::parse(f.metadata_json, nullptr, false);
  if (meta.is_discarded() || meta.value("kind", "") != "embedder") {
    throw DataError(path.string() + ": not an embedder model");
  }
  EmbedderModel m;
  m.config = EmbedderConfig::from_json(meta["config"].dump());
  m.speakers = meta["speakers"].get<std::vector<std::string>>();
  m.train_accuracy = meta.value("train_accuracy", 0.0);
  m.params = std::move(f.params);
  return m;
}

EmbedderModel train_embedder(const std::vector<Matrix>& features,
                             const std::vector<std::string>& speaker_ids,
                             const EmbedderConfig& cfg) {
  cfg.validate();
  if (features.size() != speaker_ids.size()) throw UsageError("features/speakers size mismatch");
  EmbedderModel model;
  model.config = cfg;
  model.speakers = speaker_ids;
  std::sort(model.speakers.begin(), model.speakers.end());
  model.speakers.erase(std::unique(model.speakers.begin(), model.speakers.end()),
                       model.speakers.end());
  if (model.speakers.size() < 2) {
    throw DataError("embedder training needs at least 2 speakers, got " +
                    std::to_string(model.speakers.size()));
  }
  std::vector<int> labels;
  for (const auto& s : speaker_ids) {
    labels.push_back(static_cast<int>(
        std::lower_bound(model.speakers.begin(), model.speakers.end(), s) -
        model.speakers.begin()));
  }
  for (const auto& f : features) {
    if (f.rows() == 0 || f.cols() != kFeatureDim) throw DataError("bad embedder input features");
  }
  init_embedder(model.params, cfg, static_cast<int>(model.speakers.size()));

  Adam adam;
  std::vector<int> order(features.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = make_rng(cfg.seed, "embedder-shuffle", std::to_string(epoch));
    std::shuffle(order.begin(), order.end(), shuffle);
    for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
      const std::size_t e = std::min(order.size(), b + cfg.batch);
      Gradients grads;
      for (std::size_t i = b; i < e; ++i) {
        const int u = order[i];
        Rng rng = make_rng(cfg.seed, "embedder-crop",
                           std::to_string(epoch) + "/" + std::to_string(u));
        Graph g(true, &rng);
        Var emb = embed_forward(g, model.params, cfg, crop(features[u], cfg.crop_frames, rng));
        Var loss = attention_ce_loss(classifier_logits(g, model.params, emb), {labels[u]}, 0.0);
        g.backward(loss);
        g.accumulate_param_grads(grads, 1.0 / static_cast<double>(e - b));
      }
      clip_grad_norm(grads, 5.0);
      adam.step(model.params, grads, cfg.lr);
    }
  }
  int correct = 0;
  for (std::size_t u = 0; u < features.size(); ++u) {
    correct += classify_speaker(model, features[u]) == labels[u];
  }
  model.train_accuracy = static_cast<double>(correct) / static_cast<double>(features.size());
  return model;
}

EmbedderModel train_embedder(const Manifest& manifest, const FeatureArchive& features,
                             const EmbedderConfig& cfg) {
  std::vector<Matrix> feats;
  std::vector<std::string> spk;
  for (const auto& r : manifest.records) {
    feats.push_back(features.get(r.utt_id));
    spk.push_back(r.speaker_id);
  }
  return train_embedder(feats, spk, cfg);
}

SpeakerEmbedding extract_utterance_embedding(const EmbedderModel& model, const Matrix& features,
                                             const std::string& utt_id,
                                             const std::string& speaker) {
  if (features.rows() == 0) throw DataError("empty feature matrix for " + utt_id);
  if (features.cols() != kFeatureDim) throw DataError("feature dimension mismatch for " + utt_id);
  Graph g;
  Var emb = embed_forward(g, model.params, model.config, features);
  SpeakerEmbedding out;
  out.vector = emb.value().storage();
  out.scope = EmbeddingScope::kUtterance;
  out.id = utt_id;
  out.speaker = speaker;
  return out;
}

int classify_speaker(const EmbedderModel& model, const Matrix& features) {
  Graph g;
  Var logits = classifier_logits(g, model.params, embed_forward(g, model.params, model.config, features));
  const auto row = logits.value().row(0);
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

SpeakerEmbedding speaker_embedding(const std::vector<SpeakerEmbedding>& utterances) {
  if (utterances.empty()) throw DataError("speaker embedding needs at least one utterance");
  SpeakerEmbedding out;
  out.scope = EmbeddingScope::kSpeaker;
  out.id = out.speaker = utterances[0].speaker;
  out.vector.assign(kEmbeddingDim, 0.0);
  for (const auto& u : utterances) {
    if (u.speaker != out.speaker) {
      throw DataError("speaker embedding mixes speakers " + out.speaker + " and " + u.speaker);
    }
    u.validate();
    for (int d = 0; d < kEmbeddingDim; ++d) out.vector[d] += u.vector[d];
  }
  for (double& v : out.vector) v /= static_cast<double>(utterances.size());
  return out;
}

EmbeddingStore::EmbeddingStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  std::ifstream idx(dir_ / "index.txt");
  std::string line;
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, scope, speaker, record;
    if (!std::getline(ss, id, '\t') || !std::getline(ss, scope, '\t') ||
        !std::getline(ss, speaker, '\t') || !std::getline(ss, record)) {
      throw DataError((dir_ / "index.txt").string() + ": malformed line '" + line + "'");
    }
    const long r = std::stol(record);
    index_[{id, parse_scope(scope)}] = {speaker, r};
    records_ = std::max(records_, r + 1);
  }
  const auto bin = dir_ / "vectors.bin";
  if (std::filesystem::exists(bin)) {
    const auto bytes = std::filesystem::file_size(bin);
    records_ = std::max<long>(records_, static_cast<long>(bytes / (kEmbeddingDim * sizeof(double))));
  }
}

void EmbeddingStore::put(const SpeakerEmbedding& e) {
  e.validate();
  if (e.id.empty() || e.id.find_first_of("\t\n") != std::string::npos) {
    throw DataError("embedding id must be non-empty without tabs or newlines");
  }
  {
    std::ofstream bin(dir_ / "vectors.bin", std::ios::binary | std::ios::app);
    bin.write(reinterpret_cast<const char*>(e.vector.data()),
              static_cast<std::streamsize>(kEmbeddingDim * sizeof(double)));
    if (!bin) throw DataError("cannot append to " + (dir_ / "vectors.bin").string());
  }
  std::ofstream idx(dir_ / "index.txt", std::ios::app);
  idx << e.id << '\t' << to_string(e.scope) << '\t' << e.speaker << '\t' << records_ << '\n';
  if (!idx) throw DataError("cannot append to " + (dir_ / "index.txt").string());
  index_[{e.id, e.scope}] = {e.speaker, records_};
  ++records_;
}

std::optional<SpeakerEmbedding> EmbeddingStore::get(const std::string& id,
                                                    EmbeddingScope scope) const {
  auto it = index_.find({id, scope});
  if (it == index_.end()) return std::nullopt;
  std::ifstream bin(dir_ / "vectors.bin", std::ios::binary);
  bin.seekg(static_cast<std::streamoff>(it->second.record) * kEmbeddingDim * sizeof(double));
  SpeakerEmbedding e;
  e.vector.resize(kEmbeddingDim);
  bin.read(reinterpret_cast<char*>(e.vector.data()),
           static_cast<std::streamsize>(kEmbeddingDim * sizeof(double)));
  if (!bin) throw DataError((dir_ / "vectors.bin").string() + ": truncated record for " + id);
  e.scope = scope;
  e.id = id;
  e.speaker = it->second.speaker;
  return e;
}

SpeakerEmbedding EmbeddingStore::at(const std::string& id, EmbeddingScope scope) const {
  auto e = get(id, scope);
  if (!e) throw DataError("embedding not found: " + id + " (" + to_string(scope) + ")");
  return *e;
}

std::vector<std::string> EmbeddingStore::ids(EmbeddingScope scope) const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : index_) {
    if (key.second == scope) out.push_back(key.first);
  }
  return out;
}

}  // namespace spkadapt
