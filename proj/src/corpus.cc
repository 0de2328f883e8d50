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

#include "spkadapt/corpus.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "spkadapt/common.h"

namespace spkadapt {

using nlohmann::json;

std::vector<std::string> Manifest::speakers() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.speaker_id).second) out.push_back(r.speaker_id);
  }
  return out;
}

const UtteranceRecord* Manifest::find(const std::string& utt_id) const {
  for (const auto& r : records) {
    if (r.utt_id == utt_id) return &r;
  }
  return nullptr;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write manifest " + path.string());
  char dur[32];
  for (const auto& r : m.records) {
    std::snprintf(dur, sizeof(dur), "%.6f", r.duration_s);
    os << r.utt_id << '\t' << r.speaker_id << '\t' << r.audio_path << '\t' << dur
       << '\t' << r.transcript << '\n';
  }
  if (!os) throw DataError("short write to manifest " + path.string());
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::set<std::string> ids;
  bool have_rate = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (int i = 0; i < 4; ++i) {
      const auto tab = line.find('\t', start);
      if (tab == std::string::npos) break;
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    fields.push_back(line.substr(start));
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    if (fields.size() != 5) throw DataError(where + "expected 5 tab-separated fields");
    UtteranceRecord r{fields[0], fields[1], fields[2], 0.0, fields[4]};
    double listed = 0.0;
    try {
      std::size_t used = 0;
      listed = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError(where + "bad duration '" + fields[3] + "'");
    }
    if (r.utt_id.empty()) throw DataError(where + "empty utt_id");
    if (r.transcript.empty()) throw DataError(where + "empty transcript for " + r.utt_id);
    if (!ids.insert(r.utt_id).second) throw DataError(where + "duplicate utt_id " + r.utt_id);
    const auto audio = m.base_dir / r.audio_path;
    if (!std::filesystem::exists(audio)) {
      throw DataError(where + "audio for utterance " + r.utt_id + " not found: " +
                      audio.string());
    }
    const WavInfo info = probe_wav(audio);
    if (!have_rate) {
      m.sample_rate = info.sample_rate;
      have_rate = true;
    } else if (info.sample_rate != m.sample_rate) {
      throw DataError(where + "sample rate of " + r.utt_id + " differs from manifest");
    }
    r.duration_s = static_cast<double>(info.sample_count) / info.sample_rate;
    if (std::abs(r.duration_s - listed) > 1e-3) {
      throw DataError(where + "duration of " + r.utt_id + " is " +
                      std::to_string(r.duration_s) + " s in audio, " + fields[3] +
                      " s in manifest");
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

namespace {

std::string edge_str(double e) {
  std::ostringstream os;
  os << e;
  return os.str();
}

void check_edges(const std::vector<double>& edges) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i]) || (i > 0 && edges[i] <= edges[i - 1])) {
      throw UsageError("bucket edges must be finite and strictly increasing");
    }
  }
}

}  // namespace

std::vector<std::string> bucket_names(const std::vector<double>& edges) {
  check_edges(edges);
  std::vector<std::string> out;
  if (edges.empty()) return {"all"};
  out.push_back("less_" + edge_str(edges.front()));
  for (std::size_t i = 1; i < edges.size(); ++i) {
    out.push_back(edge_str(edges[i - 1]) + "_" + edge_str(edges[i]));
  }
  out.push_back(edge_str(edges.back()) + "_above");
  return out;
}

int bucket_index(double duration, const std::vector<double>& edges) {
  int i = 0;
  while (i < static_cast<int>(edges.size()) && duration >= edges[i]) ++i;
  return i;
}

std::vector<Manifest> split_by_duration(const Manifest& m, const std::vector<double>& edges) {
  check_edges(edges);
  std::vector<Manifest> out(edges.size() + 1);
  for (auto& b : out) {
    b.sample_rate = m.sample_rate;
    b.base_dir = m.base_dir;
  }
  for (const auto& r : m.records) out[bucket_index(r.duration_s, edges)].records.push_back(r);
  return out;
}

std::pair<Manifest, Manifest> holdout_per_speaker(const Manifest& m, int per_speaker) {
  std::unordered_map<std::string, int> total, seen;
  for (const auto& r : m.records) ++total[r.speaker_id];
  Manifest train{{}, m.sample_rate, m.base_dir};
  Manifest held{{}, m.sample_rate, m.base_dir};
  for (const auto& r : m.records) {
    const int k = seen[r.speaker_id]++;
    (k >= total[r.speaker_id] - per_speaker ? held : train).records.push_back(r);
  }
  return {train, held};
}

// ---------------------------------------------------------------------------

void CorpusSpec::validate() const {
  if (n_speakers < 2) throw UsageError("corpus spec: n_speakers must be >= 2");
  if (utterances_per_speaker < 1) throw UsageError("corpus spec: utterances_per_speaker must be >= 1");
  double total = 0.0;
  for (const auto& b : duration_distribution) {
    if (b.bucket != "less_5" && b.bucket != "5_15" && b.bucket != "15_above") {
      throw UsageError("corpus spec: unknown duration bucket '" + b.bucket + "'");
    }
    if (b.probability < 0.0) throw UsageError("corpus spec: negative bucket probability");
    total += b.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw UsageError("corpus spec: bucket probabilities must sum to 1");
  }
  if (!(min_duration_s > 0.0 && min_duration_s < 5.0 && max_duration_s > 15.0)) {
    throw UsageError("corpus spec: need 0 < min_duration_s < 5 and max_duration_s > 15");
  }
  if (grammar.empty()) throw UsageError("corpus spec: empty grammar");
  for (const auto& slot : grammar) {
    if (slot.empty()) throw UsageError("corpus spec: empty grammar slot");
    for (const auto& w : slot) {
      if (w.empty()) throw UsageError("corpus spec: empty word");
      for (char c : w) {
        if (c < 'a' || c > 'z') throw UsageError("corpus spec: words must be lowercase a-z");
      }
    }
  }
  if (!speaker_colors.empty() && static_cast<int>(speaker_colors.size()) != n_speakers) {
    throw UsageError("corpus spec: speaker_colors must list every speaker");
  }
  for (const auto& c : speaker_colors) {
    if (c.formant_scale <= 0.0 || c.f0_hz <= 0.0 || std::abs(c.tilt) >= 1.0 ||
        c.resonance_width_hz <= 0.0) {
      throw UsageError("corpus spec: invalid speaker colour");
    }
  }
  if (sample_rate != 16000) throw UsageError("corpus spec: only 16 kHz is supported");
}

CorpusSpec corpus_spec_from_json(const std::string& text) {
  CorpusSpec s;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("corpus spec: ") + e.what());
  }
  try {
    s.n_speakers = j.value("n_speakers", s.n_speakers);
    s.utterances_per_speaker = j.value("utterances_per_speaker", s.utterances_per_speaker);
    if (j.contains("duration_distribution")) {
      s.duration_distribution.clear();
      for (const auto& b : j["duration_distribution"]) {
        s.duration_distribution.push_back({b.at("bucket").get<std::string>(),
                                           b.at("probability").get<double>()});
      }
    }
    s.min_duration_s = j.value("min_duration_s", s.min_duration_s);
    s.max_duration_s = j.value("max_duration_s", s.max_duration_s);
    if (j.contains("grammar")) s.grammar = j["grammar"].get<std::vector<std::vector<std::string>>>();
    if (j.contains("speaker_colors")) {
      for (const auto& c : j["speaker_colors"]) {
        SpeakerColor col;
        col.formant_scale = c.value("formant_scale", col.formant_scale);
        col.resonance_hz = c.value("resonance_hz", col.resonance_hz);
        col.resonance_width_hz = c.value("resonance_width_hz", col.resonance_width_hz);
        col.resonance_gain = c.value("resonance_gain", col.resonance_gain);
        col.tilt = c.value("tilt", col.tilt);
        col.f0_hz = c.value("f0_hz", col.f0_hz);
        s.speaker_colors.push_back(col);
      }
    }
    s.color_strength = j.value("color_strength", s.color_strength);
    s.sample_rate = j.value("sample_rate", s.sample_rate);
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw UsageError(std::string("corpus spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string corpus_spec_to_json(const CorpusSpec& s) {
  json j;
  j["n_speakers"] = s.n_speakers;
  j["utterances_per_speaker"] = s.utterances_per_speaker;
  j["duration_distribution"] = json::array();
  for (const auto& b : s.duration_distribution) {
    j["duration_distribution"].push_back({{"bucket", b.bucket}, {"probability", b.probability}});
  }
  j["min_duration_s"] = s.min_duration_s;
  j["max_duration_s"] = s.max_duration_s;
  j["grammar"] = s.grammar;
  if (!s.speaker_colors.empty()) {
    j["speaker_colors"] = json::array();
    for (const auto& c : s.speaker_colors) {
      j["speaker_colors"].push_back({{"formant_scale", c.formant_scale},
                                     {"resonance_hz", c.resonance_hz},
                                     {"resonance_width_hz", c.resonance_width_hz},
                                     {"resonance_gain", c.resonance_gain},
                                     {"tilt", c.tilt},
                                     {"f0_hz", c.f0_hz}});
    }
  }
  j["color_strength"] = s.color_strength;
  j["sample_rate"] = s.sample_rate;
  j["seed"] = s.seed;
  return j.dump(2);
}

namespace {

std::string speaker_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%02d", i);
  return buf;
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Spectral template of one acoustic unit.
struct TokenTemplate {
  double formants[3];
  double voicing;  // 1 = fully harmonic source, 0 = noise
  double duration_s;
};

TokenTemplate token_template(char c) {
  switch (c) {
    case 'a': return {{730, 1090, 2440}, 1.0, 0.13};
    case 'e': return {{530, 1840, 2480}, 1.0, 0.13};
    case 'i': return {{270, 2290, 3010}, 1.0, 0.13};
    case 'o': return {{570, 840, 2410}, 1.0, 0.13};
    case 'u': return {{300, 870, 2240}, 1.0, 0.13};
    case 'y': return {{400, 2000, 2700}, 1.0, 0.12};
    default: break;
  }
  const int j = c - 'a';
  static const std::string unvoiced = "cfhkpstx";
  const bool voiceless = unvoiced.find(c) != std::string::npos;
  return {{250.0 + 45.0 * (j % 5), 950.0 + 110.0 * j, 2600.0 + 160.0 * (j % 7)},
          voiceless ? 0.15 : 0.7,
          0.09};
}

// Two-pole resonator (Klatt style), coefficients swapped per segment while the
// state carries over.
struct Resonator {
  double a = 0, b = 0, c = 0, y1 = 0, y2 = 0;
  void tune(double freq, double bw, double rate) {
    const double r = std::exp(-std::numbers::pi * bw / rate);
    c = -r * r;
    b = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / rate);
    a = 1.0 - b - c;
  }
  double step(double x) {
    const double y = a * x + b * y1 + c * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

}  // namespace

SpeakerColor speaker_color(const CorpusSpec& spec, int index) {
  if (!spec.speaker_colors.empty()) return spec.speaker_colors.at(index);
  Rng rng = make_rng(spec.seed, "speaker", speaker_name(index));
  const double s = spec.color_strength;
  SpeakerColor c;
  c.formant_scale = 1.0 + s * uniform(rng, -0.2, 0.2);
  c.resonance_hz = uniform(rng, 600.0, 3500.0);
  c.resonance_width_hz = uniform(rng, 80.0, 300.0);
  c.resonance_gain = s * uniform(rng, 0.2, 1.5);
  c.tilt = std::clamp(s * uniform(rng, -0.5, 0.8), -0.95, 0.95);
  c.f0_hz = uniform(rng, 90.0, 240.0);
  return c;
}

long UtterancePlan::total_samples() const {
  long n = 0;
  for (const auto& s : segments) n += s.second;
  return n;
}

UtterancePlan plan_utterance(const CorpusSpec& spec, const std::string& utt_id,
                             double target_duration_s) {
  Rng rng = make_rng(spec.seed, "plan", utt_id);
  const double rate = spec.sample_rate;
  const long target = std::lround(target_duration_s * rate);
  const int lead = static_cast<int>(0.1 * rate);
  const int gap = static_cast<int>(0.06 * rate);

  UtterancePlan plan;
  plan.segments.emplace_back('\0', lead);
  long used = lead;
  std::size_t slot = 0;
  bool first = true;
  while (true) {
    const auto& words = spec.grammar[slot % spec.grammar.size()];
    const std::string& word =
        words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
    std::vector<std::pair<char, int>> segs;
    long len = 0;
    if (!first) {
      segs.emplace_back(' ', gap);
      len += gap;
    }
    for (char c : word) {
      const int n = static_cast<int>(token_template(c).duration_s * uniform(rng, 0.85, 1.15) * rate);
      segs.emplace_back(c, n);
      len += n;
    }
    // Always keep at least one word; stop before overrunning the tail.
    if (!first && used + len + lead > target) break;
    plan.segments.insert(plan.segments.end(), segs.begin(), segs.end());
    if (!first) plan.transcript += ' ';
    plan.transcript += word;
    used += len;
    first = false;
    ++slot;
  }
  if (used < target) {
    plan.segments.emplace_back('\0', static_cast<int>(target - used));
  } else if (used > target) {
    // One word did not fit: shorten the lead-in silence, never the tokens.
    const long excess = std::min<long>(used - target, lead);
    plan.segments.front().second -= static_cast<int>(excess);
  }
  return plan;
}

std::vector<double> render_utterance(const CorpusSpec& spec, const SpeakerColor& color,
                                     const std::string& utt_id, const UtterancePlan& plan) {
  Rng rng = make_rng(spec.seed, "render", utt_id);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double rate = spec.sample_rate;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(plan.total_samples()));

  Resonator formant[3];
  Resonator speaker_res;
  speaker_res.tune(color.resonance_hz, color.resonance_width_hz, rate);
  const double bandwidth[3] = {80.0, 120.0, 170.0};
  const double gains[3] = {1.0, 0.6, 0.35};
  const double f0_phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double f0_shift = uniform(rng, 0.95, 1.05);
  double phase = 0.0;
  double tilt_state = 0.0;
  long n = 0;

  for (const auto& [token, len] : plan.segments) {
    const bool silent = token == '\0' || token == ' ';
    TokenTemplate tpl{};
    if (!silent) {
      tpl = token_template(token);
      for (int k = 0; k < 3; ++k) {
        const double f = std::min(tpl.formants[k] * color.formant_scale, 0.45 * rate);
        formant[k].tune(f, bandwidth[k] * color.formant_scale, rate);
      }
    }
    const int ramp = std::min(len / 2, static_cast<int>(0.008 * rate));
    for (int i = 0; i < len; ++i, ++n) {
      double x = 0.0;
      if (silent) {
        x = 1e-4 * gauss(rng);
      } else {
        const double t = n / rate;
        const double f0 = color.f0_hz * f0_shift *
                          (1.0 + 0.04 * std::sin(2.0 * std::numbers::pi * 0.7 * t + f0_phase));
        phase += f0 / rate;
        phase -= std::floor(phase);
        const double source = tpl.voicing * (2.0 * phase - 1.0) +
                              (1.0 - tpl.voicing) * 0.6 * gauss(rng);
        for (int k = 0; k < 3; ++k) x += gains[k] * formant[k].step(source);
        x += color.resonance_gain * speaker_res.step(source);
        double env = 1.0;
        if (i < ramp) env = static_cast<double>(i) / ramp;
        if (len - 1 - i < ramp) env = std::min(env, static_cast<double>(len - 1 - i) / ramp);
        x *= env;
      }
      tilt_state = x + color.tilt * tilt_state;
      out.push_back(tilt_state * (1.0 - std::abs(color.tilt)));
    }
  }
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    const double g = 0.5 / peak;
    for (double& v : out) v *= g;
  }
  return out;
}

Manifest generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) throw DataError("cannot create " + (out_dir / "wav").string() + ": " + ec.message());

  const int total = spec.n_speakers * spec.utterances_per_speaker;
  Manifest m;
  m.sample_rate = spec.sample_rate;
  m.base_dir = out_dir;
  m.records.resize(static_cast<std::size_t>(total));

  std::vector<SpeakerColor> colors;
  for (int s = 0; s < spec.n_speakers; ++s) colors.push_back(speaker_color(spec, s));

  std::vector<std::string> errors(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(dynamic)
  for (int idx = 0; idx < total; ++idx) {
    const int spk = idx / spec.utterances_per_speaker;
    const int k = idx % spec.utterances_per_speaker;
    char id[32];
    std::snprintf(id, sizeof(id), "%s-%04d", speaker_name(spk).c_str(), k);
    const std::string utt_id = id;
    try {
      Rng rng = make_rng(spec.seed, "duration", utt_id);
      double u = uniform(rng, 0.0, 1.0);
      std::string bucket = spec.duration_distribution.back().bucket;
      for (const auto& b : spec.duration_distribution) {
        if (u < b.probability) {
          bucket = b.bucket;
          break;
        }
        u -= b.probability;
      }
      double lo = spec.min_duration_s, hi = 5.0;
      if (bucket == "5_15") {
        lo = 5.0;
        hi = 15.0;
      } else if (bucket == "15_above") {
        lo = 15.0;
        hi = spec.max_duration_s;
      }
      // Whole samples keep the duration on the intended side of each edge.
      double target = uniform(rng, lo, hi);
      target = std::clamp(std::round(target * spec.sample_rate) / spec.sample_rate, lo,
                          std::nextafter(hi, lo));
      const UtterancePlan plan = plan_utterance(spec, utt_id, target);
      const auto audio = render_utterance(spec, colors[spk], utt_id, plan);
      const std::string rel = "wav/" + utt_id + ".wav";
      write_wav(out_dir / rel, audio, spec.sample_rate);
      m.records[idx] = {utt_id, speaker_name(spk), rel,
                        static_cast<double>(audio.size()) / spec.sample_rate, plan.transcript};
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw DataError(e);
  }
  save_manifest(m, out_dir / "manifest.tsv");
  return m;
}

}  // namespace spkadapt
