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

#ifndef SPKADAPT_TOKENIZER_H_
#define SPKADAPT_TOKENIZER_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace spkadapt {

/// Token inventory. Id 0 is the CTC blank, 1 is <unk>, the last id is the
/// shared <sos/eos>. Character inventories spell space as <space>; an
/// inventory containing "▁"-prefixed pieces is treated as BPE and encodes
/// by greedy longest match per word.
class Vocab {
 public:
  static constexpr const char* kBlank = "<blank>";
  static constexpr const char* kUnk = "<unk>";
  static constexpr const char* kSpace = "<space>";
  static constexpr const char* kSosEos = "<sos/eos>";
  static constexpr const char* kWordMark = "▁";

  Vocab() = default;
  /// Specials plus every character of the transcripts, in byte order.
  static Vocab characters(const std::vector<std::string>& transcripts);
  /// Specials are added around `pieces` when missing.
  static Vocab from_tokens(std::vector<std::string> pieces);
  /// One token per line; line number = id. DataError on a bad file.
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  int blank() const { return 0; }
  int unk() const { return 1; }
  int sos_eos() const { return size() - 1; }
  bool is_bpe() const { return bpe_; }
  const std::string& token(int id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  int id(const std::string& token) const;  // unk when absent

  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& ids) const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  void index();
  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
  bool bpe_ = false;
  std::size_t max_piece_ = 1;
};

/// Whitespace-separated words.
std::vector<std::string> split_words(const std::string& text);

}  // namespace spkadapt

#endif  // SPKADAPT_TOKENIZER_H_
