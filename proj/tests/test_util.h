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

#ifndef SPKADAPT_TESTS_TEST_UTIL_H_
#define SPKADAPT_TESTS_TEST_UTIL_H_

#include <unistd.h>

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "spkadapt/corpus.h"
#include "spkadapt/frontend.h"

// Fresh scratch directory, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("spkadapt_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

// 8 speakers x 10 short utterances with globally CMVN'd features, built
// once per test binary.
struct SmallCorpus {
  std::unique_ptr<TempDir> dir;
  spkadapt::Manifest manifest;
  std::map<std::string, spkadapt::Matrix> features;
  spkadapt::CmvnStats cmvn;
};

inline const SmallCorpus& small_corpus() {
  static const SmallCorpus corpus = [] {
    SmallCorpus c;
    c.dir = std::make_unique<TempDir>("small_corpus");
    spkadapt::CorpusSpec spec;
    spec.n_speakers = 8;
    spec.utterances_per_speaker = 10;
    spec.min_duration_s = 2.0;
    spec.seed = 5;
    c.manifest = spkadapt::generate_corpus(spec, c.dir->path());
    auto raw = spkadapt::extract_manifest_features(c.manifest);
    for (const auto& [id, m] : raw) c.cmvn.accumulate(m);
    for (const auto& [id, m] : raw) c.features[id] = c.cmvn.apply(m);
    return c;
  }();
  return corpus;
}

#endif  // SPKADAPT_TESTS_TEST_UTIL_H_
