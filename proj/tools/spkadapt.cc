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

// spkadapt: command line front end. Every stage of the pipeline is a
// subcommand; `run` chains them for the experiment matrix.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "spkadapt/kernels.h"
#include "spkadapt/pipeline.h"

namespace fs = std::filesystem;
using namespace spkadapt;

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

struct Globals {
  std::string config;
  std::vector<std::string> sets;
  Overrides flags;  // from config-mirroring flags; applied last
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// defaults < config file < SPKADAPT_* environment < --set < flags
RunConfig resolve(const Globals& g) {
  std::string text = g.config.empty() ? RunConfig().to_json() : read_file(g.config);
  text = apply_overrides(text, env_overrides());
  Overrides sets;
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    sets.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  text = apply_overrides(text, sets);
  text = apply_overrides(text, g.flags);
  RunConfig c = RunConfig::from_json(text);
  kernels::set_num_threads(c.threads);
  return c;
}

// Adds `--name VALUE` that overrides config key `key`.
CLI::Option* mirror(CLI::App* app, Globals& g, const std::string& name, const std::string& key,
                    const std::string& help) {
  return app->add_option_function<std::string>(
      name, [&g, key](const std::string& v) { g.flags.emplace_back(key, v); },
      help + " [config: " + key + "]");
}

std::vector<double> parse_edges(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad bucket edge '" + item + "' in --edges");
    }
  }
  return out;
}

void log_line(const std::string& s) { std::cerr << s << std::endl; }

Manifest must_load(const std::string& p) { return load_manifest(p); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spkadapt: speaker-adaptive transformer ASR toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON run config (see `spkadapt config`)");
  app.add_option("--set", g.sets, "Override a config key, e.g. --set train.epochs=5 (repeatable)");
  mirror(&app, g, "--threads", "threads", "Cap on worker threads (0 = runtime default)");

  // config ---------------------------------------------------------------
  auto* config = app.add_subcommand("config", "Print the resolved run config");

  // corpus ---------------------------------------------------------------
  auto* corpus = app.add_subcommand("corpus", "Synthetic corpus generation and bucketing");
  corpus->require_subcommand(1);
  corpus->fallthrough();
  auto* corpus_gen = corpus->add_subcommand("generate", "Render a synthetic multi-speaker corpus");
  std::string spec_path, out;
  corpus_gen->add_option("--spec", spec_path, "Corpus spec JSON (default: the config's corpus section)");
  corpus_gen->add_option("--out", out, "Output directory")->required();
  mirror(corpus_gen, g, "--dev-per-speaker", "dev_per_speaker", "Held-out utterances per speaker");
  auto* corpus_bucket = corpus->add_subcommand("bucket", "Split a manifest by duration");
  std::string manifest, edges_str = "5,15";
  corpus_bucket->add_option("--manifest", manifest, "Manifest TSV")->required();
  corpus_bucket->add_option("--edges", edges_str, "Bucket edges in seconds")->capture_default_str();
  corpus_bucket->add_option("--out", out, "Write one manifest per bucket here");

  // features -------------------------------------------------------------
  auto* features = app.add_subcommand("features", "Feature extraction and CMVN");
  features->require_subcommand(1);
  features->fallthrough();
  auto* feat_extract = features->add_subcommand("extract", "fbank80 + pitch3 for every utterance");
  feat_extract->add_option("--manifest", manifest, "Manifest TSV")->required();
  feat_extract->add_option("--out", out, "Archive directory")->required();
  mirror(feat_extract, g, "--pitch", "features.pitch", "nccf|zeros");
  auto* feat_cmvn = features->add_subcommand("cmvn", "Normalize an archive");
  std::string train_manifest, feats, stats_out;
  feat_cmvn->add_option("--train-manifest", train_manifest, "Utterances whose stats are pooled (global mode)");
  feat_cmvn->add_option("--feats", feats, "Raw feature archive")->required();
  feat_cmvn->add_option("--out", out, "Normalized archive directory")->required();
  feat_cmvn->add_option("--stats", stats_out, "Also write the global stats JSON here");
  mirror(feat_cmvn, g, "--mode", "features.cmvn", "global|utterance");

  // embed ----------------------------------------------------------------
  auto* embed = app.add_subcommand("embed", "Speaker embedding extractor");
  embed->require_subcommand(1);
  embed->fallthrough();
  auto* embed_train = embed->add_subcommand("train", "Train an extractor on speaker classification");
  std::string flavor = "ff";
  embed_train->add_option("--manifest", manifest, "Training manifest")->required();
  embed_train->add_option("--feats", feats, "Normalized feature archive")->required();
  embed_train->add_option("--flavor", flavor, "ff (x-vector style) | attn (s-vector style)")
      ->check(CLI::IsMember({"ff", "attn"}))
      ->capture_default_str();
  embed_train->add_option("--out", out, "Extractor file")->required();
  mirror(embed_train, g, "--seed", "seed", "Random seed");
  auto* embed_extract = embed->add_subcommand("extract", "Embed utterances or speakers into a store");
  std::string model_path, scope = "utterance", store_dir;
  embed_extract->add_option("--model", model_path, "Extractor file")->required();
  embed_extract->add_option("--manifest", manifest, "Manifest TSV")->required();
  embed_extract->add_option("--feats", feats, "Normalized feature archive")->required();
  embed_extract->add_option("--scope", scope, "speaker (mean over the manifest) | utterance")
      ->check(CLI::IsMember({"speaker", "utterance"}))
      ->capture_default_str();
  embed_extract->add_option("--out", out, "Embedding store directory (appended to)")->required();
  auto* embed_export = embed->add_subcommand("export", "Copy the current record of every key into a fresh store");
  std::string export_scope;
  embed_export->add_option("--store", store_dir, "Source store")->required();
  embed_export->add_option("--out", out, "Destination store (must not exist)")->required();
  embed_export->add_option("--scope", export_scope, "Only this scope")->check(CLI::IsMember({"speaker", "utterance"}));

  // train ----------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Train the ASR model");
  std::string dev_manifest, embeddings;
  train_cmd->add_option("--train-manifest", train_manifest, "Training manifest")->required();
  train_cmd->add_option("--dev-manifest", dev_manifest, "Dev manifest (checkpoint selection)")->required();
  train_cmd->add_option("--feats", feats, "Normalized feature archive")->required();
  train_cmd->add_option("--embeddings", embeddings, "Embedding store (needed when adapting)");
  train_cmd->add_option("--out", out, "Run directory")->required();
  mirror(train_cmd, g, "--adapt", "train.adapt.mode", "none|add|cat");
  mirror(train_cmd, g, "--norm", "train.adapt.norm", "none|B|T|F");
  train_cmd->add_option_function<std::string>(
      "--specaug-joint",
      [&g](const std::string& v) { g.flags.emplace_back("train.adapt.specaug_joint", v == "on" ? "true" : "false"); },
      "Mask the joint feature+embedding matrix: on|off [config: train.adapt.specaug_joint]")
      ->check(CLI::IsMember({"on", "off"}));
  mirror(train_cmd, g, "--specaug", "train.specaug.enabled", "true|false");
  mirror(train_cmd, g, "--epochs", "train.epochs", "Epochs");
  mirror(train_cmd, g, "--warmup", "train.warmup_steps", "Noam warmup steps");
  mirror(train_cmd, g, "--lr-factor", "train.lr_factor", "Noam factor");
  mirror(train_cmd, g, "--batch-size", "train.batch_size", "Utterances per micro-batch");
  mirror(train_cmd, g, "--batch-frames", "train.batch_frames", "Frame cap per micro-batch (0 = none)");
  mirror(train_cmd, g, "--accum-grad", "train.accum_grad", "Micro-batches per update");
  mirror(train_cmd, g, "--average-k", "train.average_k", "Checkpoints averaged");
  mirror(train_cmd, g, "--preset", "model.preset", "desk|nptel");
  mirror(train_cmd, g, "--seed", "seed", "Random seed");

  // decode ---------------------------------------------------------------
  auto* decode_cmd = app.add_subcommand("decode", "Joint CTC/attention beam search");
  std::string checkpoint;
  decode_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  decode_cmd->add_option("--manifest", manifest, "Utterances to decode")->required();
  decode_cmd->add_option("--feats", feats, "Normalized feature archive")->required();
  decode_cmd->add_option("--embeddings", embeddings, "Embedding store (adapted checkpoints)");
  decode_cmd->add_option("--out", out, "Hypothesis file")->required();
  mirror(decode_cmd, g, "--beam", "decode.beam", "Beam width");
  mirror(decode_cmd, g, "--ctc-weight", "decode.ctc_weight", "CTC prefix score weight");
  mirror(decode_cmd, g, "--max-len-ratio", "decode.max_len_ratio", "Max tokens per encoder frame");

  // score ----------------------------------------------------------------
  auto* score_cmd = app.add_subcommand("score", "Pooled WER per duration bucket");
  std::string hyps, system_name = "system";
  score_cmd->add_option("--manifest", manifest, "Reference manifest")->required();
  score_cmd->add_option("--hyps", hyps, "Hypothesis file")->required();
  score_cmd->add_option("--system", system_name, "Row label")->capture_default_str();
  mirror(score_cmd, g, "--edges", "score.edges", "Bucket edges in seconds, e.g. 5,15");
  mirror(score_cmd, g, "--unit", "score.unit", "word|char");
  score_cmd->add_option("--out", out, "Write report.txt and report.csv here");

  // report ---------------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "Comparison table over systems of a run");
  std::string run_dir;
  report_cmd->add_option("--run-dir", run_dir, "Directory written by `run`")->required();
  mirror(report_cmd, g, "--systems", "systems", "Comma list, e.g. baseline,s_cat");
  report_cmd->add_option("--manifest", manifest, "References (default: <run-dir>/corpus/dev.tsv)");
  mirror(report_cmd, g, "--edges", "score.edges", "Bucket edges in seconds");
  mirror(report_cmd, g, "--unit", "score.unit", "word|char");
  report_cmd->add_option("--out", out, "Write comparison.txt and comparison.csv here");

  // run ------------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "Run the experiment matrix end to end (resumable)");
  mirror(run_cmd, g, "--root", "root", "Run directory");
  mirror(run_cmd, g, "--systems", "systems", "Comma list from baseline,x_add,s_add,x_cat,s_cat");
  mirror(run_cmd, g, "--seed", "seed", "Training and embedder seed");
  mirror(run_cmd, g, "--norm", "train.adapt.norm", "none|B|T|F");
  mirror(run_cmd, g, "--epochs", "train.epochs", "Epochs");
  mirror(run_cmd, g, "--beam", "decode.beam", "Beam width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const RunConfig cfg = resolve(g);
    if (*config) {
      std::cout << cfg.to_json();
    } else if (*corpus_gen) {
      CorpusSpec spec = spec_path.empty() ? cfg.corpus : corpus_spec_from_json(read_file(spec_path));
      const CorpusSplit s = generate_split_corpus(spec, cfg.dev_per_speaker, out);
      std::cout << "wrote " << s.all.records.size() << " utterances (" << s.train.records.size() << " train, "
                << s.dev.records.size() << " dev) to " << out << "\n";
    } else if (*corpus_bucket) {
      const auto edges = parse_edges(edges_str);
      const Manifest m = must_load(manifest);
      const auto parts = split_by_duration(m, edges);
      const auto names = bucket_names(edges);
      if (!out.empty()) fs::create_directories(out);
      for (std::size_t i = 0; i < parts.size(); ++i) {
        std::cout << names[i] << "\t" << parts[i].records.size() << "\n";
        if (!out.empty()) save_manifest(parts[i], fs::path(out) / (names[i] + ".tsv"));
      }
    } else if (*feat_extract) {
      const Manifest m = must_load(manifest);
      extract_feature_archive(m, cfg.pitch, out);
      std::cout << "extracted " << m.records.size() << " utterances to " << out << "\n";
    } else if (*feat_cmvn) {
      const FeatureArchive raw = FeatureArchive::open(feats);
      if (cfg.cmvn == CmvnMode::kGlobal) {
        if (train_manifest.empty()) throw UsageError("global CMVN needs --train-manifest");
        const CmvnStats st = accumulate_cmvn(must_load(train_manifest), raw);
        if (!stats_out.empty()) st.save(stats_out);
        normalize_feature_archive(raw, &st, out);
      } else {
        normalize_feature_archive(raw, nullptr, out);
      }
    } else if (*embed_train) {
      EmbedderConfig ec = flavor == "ff" ? cfg.x_embedder : cfg.s_embedder;
      const EmbedderModel model = train_embedder(must_load(manifest), FeatureArchive::open(feats), ec);
      model.save(out);
      std::printf("speakers %zu, training accuracy %.3f\n", model.speakers.size(), model.train_accuracy);
    } else if (*embed_extract) {
      const EmbedderModel model = EmbedderModel::load(model_path);
      EmbeddingStore store(out);
      extract_embeddings(model, must_load(manifest), FeatureArchive::open(feats), parse_scope(scope), store);
      std::cout << "store " << out << " holds " << store.size() << " embeddings\n";
    } else if (*embed_export) {
      if (fs::exists(out)) throw UsageError("export destination " + out + " already exists");
      if (!fs::exists(fs::path(store_dir) / "index.txt")) throw DataError("no embedding store at " + store_dir);
      const EmbeddingStore src(store_dir);
      EmbeddingStore dst(out);
      for (auto sc : {EmbeddingScope::kSpeaker, EmbeddingScope::kUtterance}) {
        if (!export_scope.empty() && parse_scope(export_scope) != sc) continue;
        for (const auto& id : src.ids(sc)) dst.put(src.at(id, sc));
      }
      std::cout << "exported " << dst.size() << " embeddings to " << out << "\n";
    } else if (*train_cmd) {
      std::optional<EmbeddingStore> store;
      if (!embeddings.empty()) store.emplace(embeddings);
      fs::create_directories(out);
      std::ofstream(fs::path(out) / "config.json") << cfg.to_json();
      TrainHooks hooks;
      hooks.on_epoch = [](const EpochStats& s) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "epoch %d train %.4f dev %.4f lr %.3g (%.1fs)", s.epoch, s.train_loss,
                      s.dev_loss, s.lr, s.wall_s);
        log_line(buf);
      };
      train_system(must_load(train_manifest), must_load(dev_manifest), FeatureArchive::open(feats),
                   store ? &*store : nullptr, cfg.model, cfg.train, out, hooks);
    } else if (*decode_cmd) {
      std::optional<EmbeddingStore> store;
      if (!embeddings.empty()) store.emplace(embeddings);
      const Checkpoint ck = load_checkpoint(checkpoint);
      write_hypotheses(out, decode_manifest(ck, must_load(manifest), FeatureArchive::open(feats),
                                            store ? &*store : nullptr, cfg.decode));
    } else if (*score_cmd) {
      const ScoreReport r =
          bucket_report(must_load(manifest), {load_system_hyps(system_name, hyps)}, cfg.edges, cfg.unit);
      std::cout << r.table();
      if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream(fs::path(out) / "report.txt") << r.table();
        std::ofstream(fs::path(out) / "report.csv") << r.csv();
      }
    } else if (*report_cmd) {
      const fs::path rd = run_dir;
      const Manifest refs = must_load(manifest.empty() ? (rd / "corpus" / "dev.tsv").string() : manifest);
      std::vector<SystemHyps> systems;
      for (const auto& s : cfg.systems) {
        parse_system(s);
        systems.push_back(load_system_hyps(s, rd / "exp" / s / "decode" / "hyps.txt"));
      }
      const ScoreReport r = bucket_report(refs, systems, cfg.edges, cfg.unit);
      std::cout << r.table();
      if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream(fs::path(out) / "comparison.txt") << r.table();
        std::ofstream(fs::path(out) / "comparison.csv") << r.csv();
      }
    } else if (*run_cmd) {
      std::cout << run_experiment(cfg, log_line).table();
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
