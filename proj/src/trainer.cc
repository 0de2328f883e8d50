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

#include "spkadapt/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "spkadapt/frontend.h"
#include "spkadapt/optim.h"

namespace spkadapt {
namespace {

using nlohmann::json;

json parse_object(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw UsageError(std::string(what) + " is not a JSON object");
  }
  return j;
}

std::string epoch_key(int epoch, const std::string& utt) {
  return std::to_string(epoch) + "/" + utt;
}

// Best-k pool kept during training so only k parameter sets stay in memory.
struct BestPool {
  int k;
  struct Entry {
    double dev_loss;
    int epoch;
    ParamStore params;
  };
  std::vector<Entry> entries;

  void offer(double dev_loss, int epoch, const ParamStore& p) {
    entries.push_back({dev_loss, epoch, p});
    std::vector<double> losses;
    for (const auto& e : entries) losses.push_back(e.dev_loss);
    if (static_cast<int>(entries.size()) <= k) return;
    auto keep = select_best(losses, k);
    std::sort(keep.begin(), keep.end());
    std::vector<Entry> next;
    for (int i : keep) next.push_back(std::move(entries[i]));
    entries = std::move(next);
  }
};

}  // namespace

std::string adapt_config_to_json(const AdaptConfig& a) {
  return json{{"mode", to_string(a.mode)},
              {"norm", to_string(a.norm_axis)},
              {"specaug_joint", a.specaug_joint},
              {"epsilon", a.epsilon},
              {"normalize_after_specaug", a.normalize_after_specaug}}
      .dump();
}

AdaptConfig adapt_config_from_json(const std::string& text) {
  json j = parse_object(text, "adapt config");
  AdaptConfig a;
  a.mode = parse_adapt_mode(j.value("mode", to_string(a.mode)));
  a.norm_axis = parse_norm_axis(j.value("norm", to_string(a.norm_axis)));
  a.specaug_joint = j.value("specaug_joint", a.specaug_joint);
  a.epsilon = j.value("epsilon", a.epsilon);
  a.normalize_after_specaug = j.value("normalize_after_specaug", a.normalize_after_specaug);
  return a;
}

std::string specaug_policy_to_json(const SpecAugPolicy& p) {
  return json{{"enabled", p.enabled},
              {"n_freq_masks", p.n_freq_masks},
              {"max_freq_width", p.max_freq_width},
              {"n_time_masks", p.n_time_masks},
              {"max_time_width", p.max_time_width},
              {"max_time_ratio", p.max_time_ratio},
              {"time_warp", p.time_warp},
              {"time_warp_window", p.time_warp_window}}
      .dump();
}

SpecAugPolicy specaug_policy_from_json(const std::string& text) {
  json j = parse_object(text, "specaug policy");
  SpecAugPolicy p;
  p.enabled = j.value("enabled", p.enabled);
  p.n_freq_masks = j.value("n_freq_masks", p.n_freq_masks);
  p.max_freq_width = j.value("max_freq_width", p.max_freq_width);
  p.n_time_masks = j.value("n_time_masks", p.n_time_masks);
  p.max_time_width = j.value("max_time_width", p.max_time_width);
  p.max_time_ratio = j.value("max_time_ratio", p.max_time_ratio);
  p.time_warp = j.value("time_warp", p.time_warp);
  p.time_warp_window = j.value("time_warp_window", p.time_warp_window);
  if (p.n_freq_masks < 0 || p.max_freq_width < 0 || p.n_time_masks < 0 ||
      p.max_time_ratio < 0.0 || p.time_warp_window < 0) {
    throw UsageError("specaug widths and counts must be >= 0");
  }
  return p;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (warmup_steps < 1) throw UsageError("warmup_steps must be >= 1");
  if (lr_factor <= 0.0) throw UsageError("lr_factor must be > 0");
  if (batch_size < 1 || accum_grad < 1 || batch_frames < 0) {
    throw UsageError("batch_size and accum_grad must be >= 1, batch_frames >= 0");
  }
  if (average_k < 1) throw UsageError("average_k must be >= 1");
}

std::string TrainConfig::to_json() const {
  return json{{"epochs", epochs},
              {"warmup_steps", warmup_steps},
              {"lr_factor", lr_factor},
              {"batch_size", batch_size},
              {"batch_frames", batch_frames},
              {"accum_grad", accum_grad},
              {"clip_norm", clip_norm},
              {"seed", seed},
              {"average_k", average_k},
              {"adapt", json::parse(adapt_config_to_json(adapt))},
              {"specaug", json::parse(specaug_policy_to_json(specaug))}}
      .dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  json j = parse_object(text, "train config");
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.lr_factor = j.value("lr_factor", c.lr_factor);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.batch_frames = j.value("batch_frames", c.batch_frames);
  c.accum_grad = j.value("accum_grad", c.accum_grad);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.seed = j.value("seed", c.seed);
  c.average_k = j.value("average_k", c.average_k);
  if (j.contains("adapt")) c.adapt = adapt_config_from_json(j["adapt"].dump());
  if (j.contains("specaug")) c.specaug = specaug_policy_from_json(j["specaug"].dump());
  c.validate();
  return c;
}

std::vector<std::vector<int>> make_batches(const std::vector<TrainExample>& data,
                                           const TrainConfig& cfg, int epoch) {
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(cfg.seed, "shuffle", std::to_string(epoch));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> batches;
  std::vector<int> cur;
  long frames = 0;
  for (int i : order) {
    const long t = data[i].features->rows();
    if (!cur.empty() && (static_cast<int>(cur.size()) >= cfg.batch_size ||
                         (cfg.batch_frames > 0 && frames + t > cfg.batch_frames))) {
      batches.push_back(std::move(cur));
      cur.clear();
      frames = 0;
    }
    cur.push_back(i);
    frames += t;
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  return batches;
}

ParamStore init_params(const ModelConfig& model, const TrainConfig& cfg) {
  ParamStore p;
  Rng rng = make_rng(cfg.seed, "init");
  init_model(p, model, rng);
  if (cfg.adapt.mode != AdaptMode::kNone) init_down_projection(p, rng);
  return p;
}

double accumulate_gradients(const ParamStore& params, const ModelConfig& model,
                            const TrainConfig& cfg, const std::vector<TrainExample>& data,
                            const std::vector<int>& batch, int epoch, int sos_eos, double scale,
                            Gradients& grads) {
  const int n = static_cast<int>(batch.size());
  std::vector<const Matrix*> feats;
  std::vector<const SpeakerEmbedding*> embs;
  std::vector<Rng> aug;
  for (int i : batch) {
    feats.push_back(data[i].features);
    embs.push_back(data[i].embedding);
    aug.push_back(make_rng(cfg.seed, "specaug", epoch_key(epoch, data[i].utt_id)));
  }
  auto prepared = prepare_batch(feats, embs, cfg.adapt, cfg.specaug, &aug, true);

  std::vector<Gradients> per(n);
  std::vector<double> losses(n, 0.0);
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < n; ++b) {
    const TrainExample& ex = data[batch[b]];
    try {
      Rng drop = make_rng(cfg.seed, "dropout", epoch_key(epoch, ex.utt_id));
      Graph g(true, &drop);
      Var x = adapt_input(g, params, prepared[b], cfg.adapt.mode);
      HybridLoss h = hybrid_forward(g, params, model, x, ex.target, sos_eos, 0);
      losses[b] = h.loss.value()(0, 0);
      if (!std::isfinite(losses[b])) continue;
      g.backward(h.loss);
      g.accumulate_param_grads(per[b], scale);
    } catch (const std::exception& e) {
      errors[b] = ex.utt_id + ": " + e.what();
    }
  }
  double total = 0.0;
  for (int b = 0; b < n; ++b) {
    if (!errors[b].empty()) throw DataError(errors[b]);
    if (!std::isfinite(losses[b])) {
      throw NumericError("non-finite loss for utterance " + data[batch[b]].utt_id);
    }
    total += losses[b];
    for (auto& [name, gm] : per[b]) {
      auto it = grads.find(name);
      if (it == grads.end()) {
        grads.emplace(name, std::move(gm));
      } else {
        it->second.add_scaled(gm);
      }
    }
  }
  return total;
}

double evaluate_loss(const ParamStore& params, const ModelConfig& model, const TrainConfig& cfg,
                     const std::vector<TrainExample>& data, int sos_eos) {
  if (data.empty()) return 0.0;
  std::vector<const Matrix*> feats;
  std::vector<const SpeakerEmbedding*> embs;
  for (const auto& ex : data) {
    feats.push_back(ex.features);
    embs.push_back(ex.embedding);
  }
  auto prepared = prepare_batch(feats, embs, cfg.adapt, cfg.specaug, nullptr, false);
  const int n = static_cast<int>(data.size());
  std::vector<double> losses(n);
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      Graph g;
      Var x = adapt_input(g, params, prepared[i], cfg.adapt.mode);
      losses[i] = hybrid_forward(g, params, model, x, data[i].target, sos_eos, 0).loss.value()(0, 0);
    } catch (const std::exception& e) {
      errors[i] = data[i].utt_id + ": " + e.what();
    }
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw DataError(errors[i]);
    total += losses[i];
  }
  if (!std::isfinite(total)) throw NumericError("non-finite dev loss");
  return total / n;
}

TrainResult train(const std::vector<TrainExample>& train_set, const std::vector<TrainExample>& dev_set,
                  const ModelConfig& model, const TrainConfig& cfg, const Vocab& vocab,
                  const std::filesystem::path& out_dir, const ParamStore* init,
                  const TrainHooks& hooks) {
  cfg.validate();
  model.validate();
  if (model.input_dim != cfg.adapt.input_dim()) {
    throw UsageError("model input_dim " + std::to_string(model.input_dim) +
                     " does not match adapt mode " + to_string(cfg.adapt.mode));
  }
  if (model.vocab_size != vocab.size()) throw UsageError("model vocab_size does not match vocabulary");
  if (train_set.empty()) throw DataError("empty training set");
  if (cfg.adapt.mode != AdaptMode::kNone) {
    for (const auto& ex : train_set) {
      if (!ex.embedding) throw DataError("no speaker embedding for " + ex.utt_id);
      check_scope(*ex.embedding, true);
    }
    for (const auto& ex : dev_set) {
      if (!ex.embedding) throw DataError("no speaker embedding for " + ex.utt_id);
      check_scope(*ex.embedding, false);
    }
  }
  for (const auto* set : {&train_set, &dev_set}) {
    for (const auto& ex : *set) {
      for (int t : ex.target) {
        if (t == vocab.blank() || t < 0 || t >= vocab.sos_eos()) {
          throw DataError("target of " + ex.utt_id + " contains a reserved token id");
        }
      }
    }
  }

  TrainResult res;
  res.last = init ? *init : init_params(model, cfg);
  Adam adam;
  BestPool pool{cfg.average_k, {}};
  const int sos = vocab.sos_eos();

  std::ofstream log;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir / "checkpoints");
    log.open(out_dir / "train_log.csv");
    log << "# best-k metric: dev hybrid loss (ctc_weight=" << model.ctc_weight
        << "), k=" << cfg.average_k << "\n";
    log << "epoch,train_loss,dev_loss,lr,wall_s\n";
  }
  const auto adapt_json = adapt_config_to_json(cfg.adapt);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batches = make_batches(train_set, cfg, epoch);
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t b = 0; b < batches.size(); b += cfg.accum_grad) {
      const std::size_t e = std::min(batches.size(), b + cfg.accum_grad);
      std::size_t count = 0;
      for (std::size_t i = b; i < e; ++i) count += batches[i].size();
      Gradients grads;
      double step_loss = 0.0;
      for (std::size_t i = b; i < e; ++i) {
        try {
          step_loss += accumulate_gradients(res.last, model, cfg, train_set, batches[i], epoch, sos,
                                            1.0 / static_cast<double>(count), grads);
        } catch (const NumericError& err) {
          throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(i) +
                             ": " + err.what());
        }
      }
      const double norm = clip_grad_norm(grads, cfg.clip_norm);
      if (!std::isfinite(norm)) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(b) +
                           ": non-finite gradient");
      }
      ++res.steps;
      lr = noam_lr(res.steps, model.d_model, cfg.warmup_steps, cfg.lr_factor);
      adam.step(res.last, grads, lr);
      loss_sum += step_loss;
      if (hooks.on_step) hooks.on_step(res.steps, step_loss / static_cast<double>(count));
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(train_set.size());
    st.dev_loss = dev_set.empty() ? st.train_loss : evaluate_loss(res.last, model, cfg, dev_set, sos);
    st.lr = lr;
    st.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back(st);
    pool.offer(st.dev_loss, epoch, res.last);
    if (!out_dir.empty()) {
      log << st.epoch << ',' << std::setprecision(10) << st.train_loss << ',' << st.dev_loss << ','
          << st.lr << ',' << std::setprecision(4) << st.wall_s << '\n';
      log.flush();
      std::ostringstream name;
      name << "epoch_" << std::setw(3) << std::setfill('0') << epoch << ".bin";
      save_checkpoint(out_dir / "checkpoints" / name.str(),
                      {model, vocab, res.last, adapt_json, epoch, st.train_loss, st.dev_loss});
    }
    if (hooks.on_epoch) hooks.on_epoch(st);
  }

  if (pool.entries.empty()) {
    res.averaged = res.last;
  } else {
    std::vector<const ParamStore*> best;
    for (const auto& e : pool.entries) best.push_back(&e.params);
    res.averaged = average_params(best);
  }
  if (!out_dir.empty()) {
    const EpochStats last = res.log.empty() ? EpochStats{} : res.log.back();
    save_checkpoint(out_dir / "model.last.bin",
                    {model, vocab, res.last, adapt_json, last.epoch, last.train_loss, last.dev_loss});
    save_checkpoint(out_dir / "model.avg.bin",
                    {model, vocab, res.averaged, adapt_json, last.epoch, last.train_loss, last.dev_loss});
  }
  return res;
}

ParamStore average_params(const std::vector<const ParamStore*>& stores) {
  if (stores.empty()) throw DataError("nothing to average");
  // running mean: identical inputs come back unchanged, bit for bit
  ParamStore out = *stores[0];
  for (std::size_t i = 1; i < stores.size(); ++i) {
    if (stores[i]->size() != out.size()) throw DataError("checkpoints have different parameter sets");
    const double inv = 1.0 / static_cast<double>(i + 1);
    for (auto& [name, m] : out) {
      auto it = stores[i]->find(name);
      if (it == stores[i]->end() || !it->second.same_shape(m)) {
        throw DataError("checkpoint parameter mismatch at " + name);
      }
      const double* x = it->second.data();
      double* y = m.data();
      for (std::size_t j = 0; j < m.size(); ++j) y[j] += (x[j] - y[j]) * inv;
    }
  }
  return out;
}

std::vector<int> select_best(const std::vector<double>& dev_losses, int k) {
  if (k < 1) throw UsageError("k must be >= 1");
  if (static_cast<int>(dev_losses.size()) < k) {
    throw DataError("need at least " + std::to_string(k) + " checkpoints, have " +
                    std::to_string(dev_losses.size()));
  }
  std::vector<int> idx(dev_losses.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (dev_losses[a] != dev_losses[b]) return dev_losses[a] < dev_losses[b];
    return a > b;
  });
  idx.resize(k);
  return idx;
}

ParamStore average_checkpoints(const std::vector<Checkpoint>& ckpts, int k) {
  std::vector<double> losses;
  for (const auto& c : ckpts) losses.push_back(c.dev_loss);
  std::vector<const ParamStore*> chosen;
  for (int i : select_best(losses, k)) chosen.push_back(&ckpts[i].params);
  return average_params(chosen);
}

}  // namespace spkadapt
