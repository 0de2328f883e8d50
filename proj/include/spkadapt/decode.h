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

#ifndef SPKADAPT_DECODE_H_
#define SPKADAPT_DECODE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "spkadapt/model.h"

namespace spkadapt {

struct DecodeConfig {
  int beam = 8;
  double ctc_weight = 0.3;
  double max_len_ratio = 1.0;  // max output tokens per subsampled frame
  int min_len = 1;

  void validate() const;  // UsageError
  std::string to_json() const;
  static DecodeConfig from_json(const std::string& text);
};

struct Hypothesis {
  std::string utt_id;
  std::vector<int> ids;  // without sos/eos
  std::string text;
  double score = 0.0;  // (1-w) * attention log-prob + w * CTC prefix log-prob
  double duration_s = 0.0;
};

/// CTC prefix probabilities of one hypothesis, log domain, per frame.
struct CtcPrefixState {
  std::vector<double> r_nonblank;  // paths ending in the prefix's last label
  std::vector<double> r_blank;     // paths ending in blank
  double prefix_score = 0.0;       // log P(prefix is a prefix of the labelling)
  int last = -1;
};

/// Prefix scoring over fixed CTC log-probabilities (T x V).
class CtcPrefixScorer {
 public:
  CtcPrefixScorer(const Matrix& log_probs, int blank, int eos);
  CtcPrefixState initial() const;
  /// State after appending `token`; for eos the score is the full-sequence
  /// log-probability of the prefix.
  CtcPrefixState extend(const CtcPrefixState& s, int token) const;

 private:
  const Matrix& lp_;
  int blank_;
  int eos_;
};

/// Beam search over decoder steps with joint attention/CTC scoring. The
/// output has at most max(1, floor(max_len_ratio * T'')) tokens. beam = 1 is
/// greedy. DataError on empty input.
Hypothesis beam_search(const ParamStore& params, const ModelConfig& model, const Vocab& vocab,
                       const Matrix& model_input, const DecodeConfig& cfg);

/// `utt_id \t score \t text` per line.
void write_hypotheses(const std::filesystem::path& path, const std::vector<Hypothesis>& hyps);
std::vector<Hypothesis> read_hypotheses(const std::filesystem::path& path);

}  // namespace spkadapt

#endif  // SPKADAPT_DECODE_H_
