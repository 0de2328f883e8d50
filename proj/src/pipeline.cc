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

#include "spkadapt/pipeline.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spkadapt/kernels.h"
#include "spkadapt/tokenizer.h"

extern char** environ;

namespace spkadapt {

namespace fs = std::filesystem;
using nlohmann::json;

CmvnMode parse_cmvn_mode(const std::string& s) {
  if (s == "global") return CmvnMode::kGlobal;
  if (s == "utterance") return CmvnMode::kUtterance;
  throw UsageError("invalid cmvn mode '" + s + "' (valid: global, utterance)");
}

std::string to_string(CmvnMode m) { return m == CmvnMode::kGlobal ? "global" : "utterance"; }

PitchMode parse_pitch_mode(const std::string& s) {
  if (s == "nccf") return PitchMode::kNccf;
  if (s == "zeros") return PitchMode::kZeros;
  throw UsageError("invalid pitch mode '" + s + "' (valid: nccf, zeros)");
}

std::string to_string(PitchMode m) { return m == PitchMode::kNccf ? "nccf" : "zeros"; }

ScoreUnit parse_score_unit(const std::string& s) {
  if (s == "word") return ScoreUnit::kWord;
  if (s == "char") return ScoreUnit::kChar;
  throw UsageError("invalid score unit '" + s + "' (valid: word, char)");
}

std::string to_string(ScoreUnit u) { return u == ScoreUnit::kWord ? "word" : "char"; }

const std::vector<std::string>& all_systems() {
  static const std::vector<std::string> names = {"baseline", "x_add", "s_add", "x_cat", "s_cat"};
  return names;
}

SystemSpec parse_system(const std::string& name) {
  if (name == "baseline") return {name, AdaptMode::kNone, ""};
  if (name.size() == 5 && (name[0] == 'x' || name[0] == 's') && name[1] == '_') {
    const std::string mode = name.substr(2);
    if (mode == "add" || mode == "cat") return {name, parse_adapt_mode(mode), name.substr(0, 1)};
  }
  throw UsageError("invalid system '" + name + "' (valid: baseline, x_add, s_add, x_cat, s_cat)");
}

// --- config ------------------------------------------------------------------

RunConfig::RunConfig() {
  x_embedder.flavor = "ff";
  s_embedder.flavor = "attn";
  train.epochs = 40;
  train.warmup_steps = 300;
  train.lr_factor = 0.3;
  train.batch_size = 4;
  train.adapt.norm_axis = NormAxis::kT;
}

void RunConfig::validate() const {
  corpus.validate();
  if (dev_per_speaker < 1 || dev_per_speaker >= corpus.utterances_per_speaker) {
    throw UsageError("dev_per_speaker must be in [1, utterances_per_speaker)");
  }
  if (threads < 0) throw UsageError("threads must be >= 0");
  if (x_embedder.flavor != "ff" || s_embedder.flavor != "attn") {
    throw UsageError("embedder.x must use flavor ff and embedder.s flavor attn");
  }
  train.validate();
  decode.validate();
  if (systems.empty()) throw UsageError("no systems selected");
  for (const auto& s : systems) parse_system(s);
  if (checkpoint != "avg" && checkpoint != "last") {
    throw UsageError("invalid checkpoint '" + checkpoint + "' (valid: avg, last)");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw UsageError("score edges must increase");
  }
}

namespace {

json without_seed(const std::string& text) {
  json j = json::parse(text);
  j.erase("seed");
  return j;
}

json config_tree(const RunConfig& c) {
  json j;
  j["root"] = c.root.string();
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["corpus"] = json::parse(corpus_spec_to_json(c.corpus));
  j["dev_per_speaker"] = c.dev_per_speaker;
  j["features"] = {{"cmvn", to_string(c.cmvn)}, {"pitch", to_string(c.pitch)}};
  j["embedder"] = {{"x", without_seed(c.x_embedder.to_json())},
                   {"s", without_seed(c.s_embedder.to_json())}};
  j["model"] = json::parse(c.model.to_json());
  j["train"] = without_seed(c.train.to_json());
  j["decode"] = json::parse(c.decode.to_json());
  j["score"] = {{"edges", c.edges}, {"unit", to_string(c.unit)}};
  j["systems"] = c.systems;
  j["checkpoint"] = c.checkpoint;
  return j;
}

// Keys a config file may hold beyond the ones always written.
const std::set<std::string>& optional_keys() {
  static const std::set<std::string> keys = {"model.preset", "corpus.speaker_colors"};
  return keys;
}

void check_keys(const json& user, const json& schema, const std::string& prefix) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (optional_keys().count(path)) continue;
    if (!schema.contains(it.key())) throw UsageError("unknown config key '" + path + "'");
    if (it.value().is_object() && schema[it.key()].is_object()) {
      check_keys(it.value(), schema[it.key()], path);
    }
  }
}

json merged(json base, const json& user) {
  for (auto it = user.begin(); it != user.end(); ++it) base[it.key()] = it.value();
  return base;
}

}  // namespace

std::string RunConfig::to_json() const { return config_tree(*this).dump(2) + "\n"; }

RunConfig RunConfig::from_json(const std::string& text) {
  json user = json::parse(text, nullptr, false);
  if (user.is_discarded() || !user.is_object()) throw UsageError("run config is not a JSON object");
  const RunConfig d;
  const json schema = config_tree(d);
  check_keys(user, schema, "");
  RunConfig c;
  try {
    c.root = user.value("root", d.root.string());
    c.seed = user.value("seed", d.seed);
    c.threads = user.value("threads", d.threads);
    if (user.contains("corpus")) {
      c.corpus = corpus_spec_from_json(merged(schema["corpus"], user["corpus"]).dump());
    }
    c.dev_per_speaker = user.value("dev_per_speaker", d.dev_per_speaker);
    if (user.contains("features")) {
      const json& f = user["features"];
      c.cmvn = parse_cmvn_mode(f.value("cmvn", to_string(d.cmvn)));
      c.pitch = parse_pitch_mode(f.value("pitch", to_string(d.pitch)));
    }
    if (user.contains("embedder")) {
      const json& e = user["embedder"];
      if (e.contains("x")) c.x_embedder = EmbedderConfig::from_json(merged(schema["embedder"]["x"], e["x"]).dump());
      if (e.contains("s")) c.s_embedder = EmbedderConfig::from_json(merged(schema["embedder"]["s"], e["s"]).dump());
    }
    if (user.contains("model")) {
      const json& m = user["model"];
      json base = m.contains("preset")
                      ? json::parse(ModelConfig::preset(m["preset"].get<std::string>()).to_json())
                      : schema["model"];
      json um = m;
      um.erase("preset");
      c.model = ModelConfig::from_json(merged(base, um).dump());
    }
    if (user.contains("train")) {
      json t = merged(schema["train"], user["train"]);
      if (user["train"].contains("adapt")) t["adapt"] = merged(schema["train"]["adapt"], user["train"]["adapt"]);
      if (user["train"].contains("specaug")) {
        t["specaug"] = merged(schema["train"]["specaug"], user["train"]["specaug"]);
      }
      c.train = TrainConfig::from_json(t.dump());
    }
    if (user.contains("decode")) c.decode = DecodeConfig::from_json(merged(schema["decode"], user["decode"]).dump());
    if (user.contains("score")) {
      const json& s = user["score"];
      c.edges = s.value("edges", d.edges);
      c.unit = parse_score_unit(s.value("unit", to_string(d.unit)));
    }
    c.systems = user.value("systems", d.systems);
    c.checkpoint = user.value("checkpoint", d.checkpoint);
  } catch (const json::exception& e) {
    throw UsageError(std::string("run config: ") + e.what());
  }
  c.train.seed = c.seed;
  c.x_embedder.seed = c.seed;
  c.s_embedder.seed = c.seed;
  c.validate();
  return c;
}

std::string apply_overrides(const std::string& config_json,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
  json j = json::parse(config_json, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw UsageError("run config is not a JSON object");
  const json schema = config_tree(RunConfig());
  for (const auto& [key, value] : overrides) {
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
    if (parts.empty()) throw UsageError("empty config key");
    const json* sch = &schema;
    json* node = &j;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (!sch->is_object() || !sch->contains(parts[i])) throw UsageError("unknown config key '" + key + "'");
      sch = &(*sch)[parts[i]];
      if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object()) (*node)[parts[i]] = json::object();
      node = &(*node)[parts[i]];
    }
    const std::string& leaf = parts.back();
    const bool optional = optional_keys().count(key) > 0;
    if (!optional && (!sch->is_object() || !sch->contains(leaf))) {
      throw UsageError("unknown config key '" + key + "'");
    }
    const json kind = optional ? json() : (*sch)[leaf];
    json v;
    if (kind.is_string()) {
      v = value;
    } else if (kind.is_array() && (value.empty() || value.front() != '[')) {
      v = json::array();
      std::stringstream items(value);
      for (std::string item; std::getline(items, item, ',');) {
        json e = json::parse(item, nullptr, false);
        v.push_back(e.is_discarded() ? json(item) : e);
      }
    } else {
      v = json::parse(value, nullptr, false);
      if (v.is_discarded()) v = value;
    }
    (*node)[leaf] = v;
  }
  return j.dump(2);
}

std::vector<std::pair<std::string, std::string>> env_overrides() {
  static const std::string prefix = "SPKADAPT_";
  std::vector<std::pair<std::string, std::string>> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv = *e;
    if (kv.rfind(prefix, 0) != 0) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    std::string name = kv.substr(prefix.size(), eq - prefix.size());
    std::string key;
    for (std::size_t i = 0; i < name.size(); ++i) {
      if (name.compare(i, 2, "__") == 0) {
        key += '.';
        ++i;
      } else {
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(name[i])));
      }
    }
    out.emplace_back(key, kv.substr(eq + 1));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --- stages ------------------------------------------------------------------

CorpusSplit generate_split_corpus(const CorpusSpec& spec, int dev_per_speaker, const fs::path& dir) {
  if (dev_per_speaker < 0 || dev_per_speaker >= spec.utterances_per_speaker) {
    throw UsageError("dev utterances per speaker must be in [0, utterances_per_speaker)");
  }
  CorpusSplit s;
  s.all = generate_corpus(spec, dir);
  auto [train_set, dev_set] = holdout_per_speaker(s.all, dev_per_speaker);
  s.train = std::move(train_set);
  s.dev = std::move(dev_set);
  save_manifest(s.all, dir / "manifest.tsv");
  save_manifest(s.train, dir / "train.tsv");
  save_manifest(s.dev, dir / "dev.tsv");
  std::ofstream(dir / "spec.json") << corpus_spec_to_json(spec) << "\n";
  return s;
}

void extract_feature_archive(const Manifest& m, PitchMode pitch, const fs::path& dir) {
  FeatureArchive::write(dir, extract_manifest_features(m, pitch));
}

CmvnStats accumulate_cmvn(const Manifest& m, const FeatureArchive& raw) {
  CmvnStats st;
  for (const auto& r : m.records) st.accumulate(raw.get(r.utt_id));
  return st;
}

void normalize_feature_archive(const FeatureArchive& raw, const CmvnStats* global, const fs::path& dir) {
  std::vector<std::pair<std::string, Matrix>> items;
  for (const auto& k : raw.keys()) {
    Matrix m = raw.get(k);
    items.emplace_back(k, global ? global->apply(m) : apply_utterance_cmvn(m));
  }
  FeatureArchive::write(dir, items);
}

void extract_embeddings(const EmbedderModel& model, const Manifest& m, const FeatureArchive& feats,
                        EmbeddingScope scope, EmbeddingStore& store) {
  const int n = static_cast<int>(m.records.size());
  std::vector<SpeakerEmbedding> utt(n);
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const auto& r = m.records[i];
    try {
      utt[i] = extract_utterance_embedding(model, feats.get(r.utt_id), r.utt_id, r.speaker_id);
    } catch (const std::exception& e) {
      errors[i] = r.utt_id + ": " + e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw DataError(e);
  }
  if (scope == EmbeddingScope::kUtterance) {
    for (const auto& e : utt) store.put(e);
    return;
  }
  std::map<std::string, std::vector<SpeakerEmbedding>> by_speaker;
  for (auto& e : utt) by_speaker[e.speaker].push_back(std::move(e));
  for (const auto& [spk, list] : by_speaker) store.put(speaker_embedding(list));
}

TrainResult train_system(const Manifest& train_set, const Manifest& dev_set, const FeatureArchive& feats,
                         const EmbeddingStore* store, ModelConfig model, const TrainConfig& cfg,
                         const fs::path& out_dir, const TrainHooks& hooks) {
  std::vector<std::string> transcripts;
  for (const auto& r : train_set.records) transcripts.push_back(r.transcript);
  const Vocab vocab = Vocab::characters(transcripts);
  model.vocab_size = vocab.size();
  model.input_dim = cfg.adapt.input_dim();
  const bool adapt = cfg.adapt.mode != AdaptMode::kNone;
  if (adapt && !store) throw DataError("adaptation needs an embedding store");

  std::vector<Matrix> mats;
  std::vector<SpeakerEmbedding> embs;
  mats.reserve(train_set.records.size() + dev_set.records.size());
  embs.reserve(mats.capacity());
  auto build = [&](const Manifest& m, bool training) {
    std::vector<TrainExample> out;
    for (const auto& r : m.records) {
      mats.push_back(feats.get(r.utt_id));
      TrainExample ex;
      ex.utt_id = r.utt_id;
      ex.features = &mats.back();
      ex.target = vocab.encode(r.transcript);
      if (adapt) {
        embs.push_back(training ? store->at(r.speaker_id, EmbeddingScope::kSpeaker)
                                : store->at(r.utt_id, EmbeddingScope::kUtterance));
        ex.embedding = &embs.back();
      }
      out.push_back(std::move(ex));
    }
    return out;
  };
  const auto tr = build(train_set, true);
  const auto dv = build(dev_set, false);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    vocab.save(out_dir / "vocab.txt");
  }
  return train(tr, dv, model, cfg, vocab, out_dir, nullptr, hooks);
}

std::vector<Hypothesis> decode_manifest(const Checkpoint& ckpt, const Manifest& m, const FeatureArchive& feats,
                                        const EmbeddingStore* store, const DecodeConfig& cfg) {
  cfg.validate();
  const AdaptConfig adapt = adapt_config_from_json(ckpt.adapt_json);
  const bool adapted = adapt.mode != AdaptMode::kNone;
  if (adapted && !store) throw DataError("adapted checkpoint needs an embedding store");
  const int n = static_cast<int>(m.records.size());
  std::vector<Hypothesis> out(n);
  std::vector<std::string> errors(n);
  std::vector<int> numeric(n, 0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const auto& r = m.records[i];
    try {
      std::optional<SpeakerEmbedding> emb;
      if (adapted) emb = store->at(r.utt_id, EmbeddingScope::kUtterance);
      const Matrix input = adapt_frontend(feats.get(r.utt_id), emb ? &*emb : nullptr, adapt, SpecAugPolicy{},
                                          ckpt.params, nullptr, false);
      out[i] = beam_search(ckpt.params, ckpt.config, ckpt.vocab, input, cfg);
      out[i].utt_id = r.utt_id;
      out[i].duration_s = r.duration_s;
    } catch (const NumericError& e) {
      errors[i] = r.utt_id + ": " + e.what();
      numeric[i] = 1;
    } catch (const std::exception& e) {
      errors[i] = r.utt_id + ": " + e.what();
    }
  }
  for (int i = 0; i < n; ++i) {
    if (errors[i].empty()) continue;
    if (numeric[i]) throw NumericError(errors[i]);
    throw DataError(errors[i]);
  }
  return out;
}

SystemHyps load_system_hyps(const std::string& name, const fs::path& hyps_file) {
  SystemHyps s;
  s.name = name;
  for (auto& h : read_hypotheses(hyps_file)) s.text[h.utt_id] = std::move(h.text);
  return s;
}

// --- experiment ---------------------------------------------------------------

namespace {

std::string hash_hex(const std::vector<std::string>& parts) {
  std::string joined;
  for (const auto& p : parts) {
    joined += p;
    joined += '\x1f';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(stable_hash(joined)));
  return buf;
}

bool stage_current(const fs::path& dir, const std::string& hash) {
  std::ifstream in(dir / ".stage");
  std::string h;
  return in && std::getline(in, h) && h == hash;
}

void mark_stage(const fs::path& dir, const std::string& hash) {
  std::ofstream(dir / ".stage") << hash << "\n";
}

// Clears a stale stage directory so append-only outputs start empty.
void reset_stage(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
}

template <class F>
void run_stage(const std::string& name, F&& body) {
  try {
    body();
  } catch (const UsageError& e) {
    throw UsageError("stage " + name + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError("stage " + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw DataError("stage " + name + ": " + e.what());
  }
}

}  // namespace

ScoreReport run_experiment(const RunConfig& cfg, const std::function<void(const std::string&)>& log) {
  cfg.validate();
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  if (cfg.threads > 0) kernels::set_num_threads(cfg.threads);
  const fs::path root = cfg.root;
  fs::create_directories(root);
  std::ofstream(root / "config.json") << cfg.to_json();

  const fs::path corpus_dir = root / "corpus";
  const std::string corpus_hash =
      hash_hex({"corpus", corpus_spec_to_json(cfg.corpus), std::to_string(cfg.dev_per_speaker)});
  CorpusSplit split;
  run_stage("corpus", [&] {
    if (stage_current(corpus_dir, corpus_hash)) {
      say("corpus: up to date");
      split.all = load_manifest(corpus_dir / "manifest.tsv");
      split.train = load_manifest(corpus_dir / "train.tsv");
      split.dev = load_manifest(corpus_dir / "dev.tsv");
      return;
    }
    say("corpus: generating");
    reset_stage(corpus_dir);
    split = generate_split_corpus(cfg.corpus, cfg.dev_per_speaker, corpus_dir);
    mark_stage(corpus_dir, corpus_hash);
  });

  const fs::path feat_dir = root / "features";
  const std::string feat_hash = hash_hex({"features", corpus_hash, to_string(cfg.cmvn), to_string(cfg.pitch)});
  run_stage("features", [&] {
    if (stage_current(feat_dir, feat_hash)) {
      say("features: up to date");
      return;
    }
    say("features: extracting");
    reset_stage(feat_dir);
    extract_feature_archive(split.all, cfg.pitch, feat_dir / "raw");
    const FeatureArchive raw = FeatureArchive::open(feat_dir / "raw");
    if (cfg.cmvn == CmvnMode::kGlobal) {
      const CmvnStats st = accumulate_cmvn(split.train, raw);
      st.save(feat_dir / "cmvn.json");
      normalize_feature_archive(raw, &st, feat_dir / "norm");
    } else {
      normalize_feature_archive(raw, nullptr, feat_dir / "norm");
    }
    mark_stage(feat_dir, feat_hash);
  });
  const FeatureArchive feats = FeatureArchive::open(feat_dir / "norm");

  std::map<std::string, std::string> embed_hash;
  for (const auto& name : cfg.systems) {
    const SystemSpec sys = parse_system(name);
    if (sys.embedder.empty() || embed_hash.count(sys.embedder)) continue;
    const EmbedderConfig& ec = sys.embedder == "x" ? cfg.x_embedder : cfg.s_embedder;
    const fs::path dir = root / "embed" / sys.embedder;
    const std::string h = hash_hex({"embed", feat_hash, ec.to_json()});
    embed_hash[sys.embedder] = h;
    run_stage("embed " + sys.embedder, [&] {
      if (stage_current(dir, h)) {
        say("embed " + sys.embedder + ": up to date");
        return;
      }
      say("embed " + sys.embedder + ": training " + ec.flavor + " extractor");
      reset_stage(dir);
      const EmbedderModel model = train_embedder(split.train, feats, ec);
      model.save(dir / "embedder.bin");
      EmbeddingStore store(dir / "store");
      extract_embeddings(model, split.all, feats, EmbeddingScope::kUtterance, store);
      extract_embeddings(model, split.train, feats, EmbeddingScope::kSpeaker, store);
      mark_stage(dir, h);
    });
  }

  std::vector<SystemHyps> hyps;
  for (const auto& name : cfg.systems) {
    const SystemSpec sys = parse_system(name);
    TrainConfig tc = cfg.train;
    tc.adapt.mode = sys.mode;
    const fs::path dir = root / "exp" / name;
    const std::string eh = sys.embedder.empty() ? "" : embed_hash.at(sys.embedder);
    const std::string train_hash = hash_hex({"train", feat_hash, eh, cfg.model.to_json(), tc.to_json()});
    std::optional<EmbeddingStore> store;
    if (!sys.embedder.empty()) store.emplace(root / "embed" / sys.embedder / "store");
    run_stage("train " + name, [&] {
      if (stage_current(dir, train_hash)) {
        say("train " + name + ": up to date");
        return;
      }
      reset_stage(dir);
      RunConfig echo = cfg;
      echo.systems = {name};
      echo.train.adapt.mode = sys.mode;
      std::ofstream(dir / "config.json") << echo.to_json();
      TrainHooks hooks;
      hooks.on_epoch = [&](const EpochStats& s) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "train %s: epoch %d train %.4f dev %.4f (%.1fs)", name.c_str(), s.epoch,
                      s.train_loss, s.dev_loss, s.wall_s);
        say(buf);
      };
      train_system(split.train, split.dev, feats, store ? &*store : nullptr, cfg.model, tc, dir, hooks);
      mark_stage(dir, train_hash);
    });

    const fs::path ddir = dir / "decode";
    const std::string decode_hash = hash_hex({"decode", train_hash, cfg.decode.to_json(), cfg.checkpoint});
    run_stage("decode " + name, [&] {
      if (stage_current(ddir, decode_hash)) {
        say("decode " + name + ": up to date");
        return;
      }
      say("decode " + name + ": decoding " + std::to_string(split.dev.records.size()) + " utterances");
      reset_stage(ddir);
      const Checkpoint ck = load_checkpoint(dir / ("model." + cfg.checkpoint + ".bin"));
      write_hypotheses(ddir / "hyps.txt", decode_manifest(ck, split.dev, feats, store ? &*store : nullptr, cfg.decode));
      mark_stage(ddir, decode_hash);
    });

    run_stage("score " + name, [&] {
      SystemHyps sh = load_system_hyps(name, ddir / "hyps.txt");
      const ScoreReport r = bucket_report(split.dev, {sh}, cfg.edges, cfg.unit);
      std::ofstream(ddir / "report.txt") << r.table();
      std::ofstream(ddir / "report.csv") << r.csv();
      hyps.push_back(std::move(sh));
    });
  }

  ScoreReport report;
  run_stage("report", [&] {
    report = bucket_report(split.dev, hyps, cfg.edges, cfg.unit);
    fs::create_directories(root / "reports");
    std::ofstream(root / "reports" / "comparison.txt") << report.table();
    std::ofstream(root / "reports" / "comparison.csv") << report.csv();
  });
  return report;
}

}  // namespace spkadapt
