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

#ifndef SPKADAPT_SCORE_H_
#define SPKADAPT_SCORE_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spkadapt/corpus.h"

namespace spkadapt {

enum class ScoreUnit { kWord, kChar };

/// Word tokens are whitespace separated; char tokens are every character,
/// spaces included.
std::vector<std::string> score_tokens(std::string_view text, ScoreUnit unit);

struct ErrorCounts {
  long sub = 0;
  long del = 0;
  long ins = 0;
  long ref = 0;
  long errors() const { return sub + del + ins; }
  /// Percent; NaN when ref == 0.
  double rate() const;
  ErrorCounts& operator+=(const ErrorCounts& o);
};

/// Minimum edit alignment. Among equal-cost alignments substitutions are
/// preferred, then deletions. DataError on an empty reference.
ErrorCounts align(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);
double wer(std::string_view ref, std::string_view hyp, ScoreUnit unit = ScoreUnit::kWord);

struct SystemHyps {
  std::string name;
  std::map<std::string, std::string> text;  // utt_id -> hypothesis
};

struct ScoreReport {
  ScoreUnit unit = ScoreUnit::kWord;
  std::vector<double> edges;
  std::vector<std::string> buckets;  // duration buckets, then "overall"
  std::vector<std::string> systems;
  std::vector<std::vector<ErrorCounts>> counts;  // [system][bucket]

  const ErrorCounts& at(const std::string& system, const std::string& bucket) const;
  /// Fixed-width table, one row per system, rates to two decimals.
  std::string table() const;
  /// system,bucket,wer,S,D,I,Nref (the rate column is labelled cer in char mode).
  std::string csv() const;
};

/// Pooled error rate per duration bucket: errors and reference lengths are
/// summed over a bucket's utterances before dividing. Buckets come from the
/// reference durations. DataError if a system lacks a hypothesis for any
/// reference utterance.
ScoreReport bucket_report(const Manifest& refs, const std::vector<SystemHyps>& systems,
                          const std::vector<double>& edges, ScoreUnit unit);

}  // namespace spkadapt

#endif  // SPKADAPT_SCORE_H_
