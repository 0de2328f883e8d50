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

#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "spkadapt/corpus.h"
#include "spkadapt/wav.h"
#include "test_util.h"

using namespace spkadapt;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Long-term average magnitude spectrum over 512-sample blocks, by direct DFT.
std::vector<double> average_spectrum(const std::vector<double>& x) {
  const int n = 512, bins = 64;  // every 4th bin up to Nyquist
  std::vector<double> acc(bins, 0.0);
  int blocks = 0;
  for (std::size_t s = 0; s + n <= x.size(); s += n, ++blocks) {
    for (int b = 0; b < bins; ++b) {
      const int k = 4 * b;
      double re = 0.0, im = 0.0;
      for (int i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * k * i / n;
        re += x[s + i] * std::cos(a);
        im -= x[s + i] * std::sin(a);
      }
      acc[b] += std::hypot(re, im);
    }
  }
  for (double& v : acc) v /= blocks;
  return acc;
}

Manifest manifest_with_durations(const std::vector<double>& d) {
  Manifest m;
  for (std::size_t i = 0; i < d.size(); ++i) {
    m.records.push_back({"u" + std::to_string(i), "s", "x.wav", d[i], "a"});
  }
  return m;
}

}  // namespace

TEST_CASE("generation is deterministic") {
  TempDir a("corpus_a"), b("corpus_b");
  CorpusSpec spec;
  spec.n_speakers = 2;
  spec.utterances_per_speaker = 3;
  spec.seed = 7;
  Manifest ma = generate_corpus(spec, a.path());
  Manifest mb = generate_corpus(spec, b.path());
  CHECK(ma.records == mb.records);
  CHECK(slurp(a / "manifest.tsv") == slurp(b / "manifest.tsv"));
  for (const auto& r : ma.records) {
    CHECK(slurp(ma.audio_file(r)) == slurp(mb.audio_file(r)));
    CHECK(!r.transcript.empty());
  }
  CHECK(ma.records.size() == 6);
  CHECK(ma.speakers().size() == 2);
}

TEST_CASE("bucket fractions follow the distribution") {
  TempDir dir("corpus_mix");
  CorpusSpec spec;
  spec.n_speakers = 8;
  spec.utterances_per_speaker = 50;
  spec.duration_distribution = {{"less_5", 0.25}, {"5_15", 0.70}, {"15_above", 0.05}};
  spec.seed = 3;
  Manifest m = generate_corpus(spec, dir.path());
  REQUIRE(m.records.size() == 400);
  auto buckets = split_by_duration(m, {5.0, 15.0});
  REQUIRE(buckets.size() == 3);
  CHECK(buckets[0].records.size() + buckets[1].records.size() + buckets[2].records.size() == 400);
  CHECK(std::abs(buckets[0].records.size() / 400.0 - 0.25) <= 0.05);
  CHECK(std::abs(buckets[1].records.size() / 400.0 - 0.70) <= 0.05);
  CHECK(std::abs(buckets[2].records.size() / 400.0 - 0.05) <= 0.05);

  Manifest loaded = load_manifest(dir / "manifest.tsv");
  CHECK(loaded.records == m.records);
}

TEST_CASE("distinct speaker colours give distinct average spectra") {
  CorpusSpec spec;
  spec.n_speakers = 2;
  spec.speaker_colors = {SpeakerColor{}, SpeakerColor{1.15, 2500.0, 300.0, 0.8, 0.3, 180.0}};
  std::vector<std::vector<double>> audio(2);
  for (int s = 0; s < 2; ++s) {
    for (int u = 0; audio[s].size() < 10 * 16000; ++u) {
      const std::string id = "spk" + std::to_string(s) + "-" + std::to_string(u);
      auto plan = plan_utterance(spec, id, 4.0);
      auto x = render_utterance(spec, speaker_color(spec, s), id, plan);
      audio[s].insert(audio[s].end(), x.begin(), x.end());
    }
  }
  auto a = average_spectrum(audio[0]);
  auto b = average_spectrum(audio[1]);
  double dist = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dist += (a[i] - b[i]) * (a[i] - b[i]);
    scale += a[i] * a[i];
  }
  CHECK(dist > 0.0);
  CHECK(std::sqrt(dist / scale) > 0.1);
}

TEST_CASE("plans are exact in length and match their transcripts") {
  CorpusSpec spec;
  for (double d : {1.0, 3.3, 7.25}) {
    auto plan = plan_utterance(spec, "spk00-0001", d);
    CHECK(plan.total_samples() == std::lround(d * 16000));
    std::string rendered;
    for (const auto& [c, n] : plan.segments) {
      if (c != '\0') rendered += c;
    }
    CHECK(rendered == plan.transcript);
    CHECK(!plan.transcript.empty());
  }
}

TEST_CASE("manifest loading") {
  TempDir dir("manifest");
  std::filesystem::create_directories(dir / "wav");
  write_wav(dir / "wav/a.wav", std::vector<double>(16000, 0.1), 16000);
  write_wav(dir / "wav/b.wav", std::vector<double>(8000, 0.1), 16000);
  Manifest m;
  m.sample_rate = 16000;
  m.records = {{"a", "s1", "wav/a.wav", 1.0, "bob sees a dot"},
               {"b", "s2", "wav/b.wav", 0.5, "kate eats the cake"}};
  save_manifest(m, dir / "m.tsv");
  Manifest back = load_manifest(dir / "m.tsv");
  CHECK(back.records == m.records);

  {
    std::ofstream bad(dir / "missing.tsv");
    bad << "a\ts1\twav/a.wav\t1.0\tbob\n" << "gone\ts1\twav/none.wav\t1.0\tbob\n";
  }
  try {
    load_manifest(dir / "missing.tsv");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("gone") != std::string::npos);
  }

  { std::ofstream empty(dir / "empty.tsv"); }
  CHECK(load_manifest(dir / "empty.tsv").records.empty());

  {
    std::ofstream bad(dir / "short.tsv");
    bad << "a\ts1\twav/a.wav\t1.0\tbob\n" << "b\ts2\twav/b.wav\n";
  }
  try {
    load_manifest(dir / "short.tsv");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }

  {
    std::ofstream bad(dir / "dur.tsv");
    bad << "a\ts1\twav/a.wav\t1.01\tbob\n";
  }
  CHECK_THROWS_AS(load_manifest(dir / "dur.tsv"), DataError);
}

TEST_CASE("bucket boundaries are left-closed") {
  auto b = split_by_duration(manifest_with_durations({3.0, 5.0, 14.9, 15.0}), {5.0, 15.0});
  REQUIRE(b.size() == 3);
  REQUIRE(b[0].records.size() == 1);
  CHECK(b[0].records[0].duration_s == 3.0);
  REQUIRE(b[1].records.size() == 2);
  CHECK(b[1].records[0].duration_s == 5.0);
  CHECK(b[1].records[1].duration_s == 14.9);
  REQUIRE(b[2].records.size() == 1);
  CHECK(b[2].records[0].duration_s == 15.0);

  for (const auto& e : split_by_duration(Manifest{}, {5.0, 15.0})) CHECK(e.records.empty());
  CHECK_THROWS_AS(split_by_duration(Manifest{}, {5.0, 5.0}), UsageError);
  CHECK_THROWS_AS(split_by_duration(Manifest{}, {15.0, 5.0}), UsageError);
  CHECK(bucket_names({5.0, 15.0}) == std::vector<std::string>{"less_5", "5_15", "15_above"});
  CHECK(bucket_names({5.0}) == std::vector<std::string>{"less_5", "5_above"});
}

TEST_CASE("partition holds for random durations and edges") {
  Rng rng(9);
  std::uniform_real_distribution<double> u(0.1, 30.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> d(50);
    for (double& v : d) v = u(rng);
    std::vector<double> edges = {u(rng), u(rng), u(rng)};
    std::sort(edges.begin(), edges.end());
    auto b = split_by_duration(manifest_with_durations(d), edges);
    std::size_t total = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      total += b[i].records.size();
      for (const auto& r : b[i].records) {
        if (i > 0) CHECK(r.duration_s >= edges[i - 1]);
        if (i < edges.size()) CHECK(r.duration_s < edges[i]);
      }
    }
    CHECK(total == 50);
  }
}

TEST_CASE("spec validation") {
  CorpusSpec spec;
  spec.n_speakers = 1;
  CHECK_THROWS_AS(spec.validate(), UsageError);
  spec.n_speakers = 2;
  spec.duration_distribution = {{"less_5", 0.5}, {"5_15", 0.4}, {"15_above", 0.0}};
  CHECK_THROWS_AS(spec.validate(), UsageError);
  CorpusSpec def;
  CorpusSpec back = corpus_spec_from_json(corpus_spec_to_json(def));
  CHECK(back.n_speakers == def.n_speakers);
  CHECK(back.grammar == def.grammar);
}
