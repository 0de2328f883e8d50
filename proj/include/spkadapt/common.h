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

#ifndef SPKADAPT_COMMON_H_
#define SPKADAPT_COMMON_H_

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spkadapt {

// Error taxonomy; the CLI maps each class onto its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad flags, bad config values, invalid enum strings.  Exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.  Exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf during training or scoring.  Exit code 4.
class NumericError : public Error {
 public:
  using Error::Error;
};

using Rng = std::mt19937_64;

/// Stable 64-bit hash of a string (FNV-1a followed by a splitmix finalizer).
std::uint64_t stable_hash(std::string_view s);

/// Seed for an independent named stream, e.g.
/// derive_seed(seed, "synth", utt_id).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                          std::string_view key = {});

inline Rng make_rng(std::uint64_t seed, std::string_view purpose,
                    std::string_view key = {}) {
  return Rng(derive_seed(seed, purpose, key));
}

/// Warnings go through one sink so tests and the CLI can capture them.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);  // nullptr restores stderr
void warn(const std::string& message);

}  // namespace spkadapt

#endif  // SPKADAPT_COMMON_H_
