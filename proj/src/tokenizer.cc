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

#include "spkadapt/tokenizer.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "spkadapt/common.h"

namespace spkadapt {

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream ss(text);
  std::vector<std::string> out;
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

Vocab Vocab::characters(const std::vector<std::string>& transcripts) {
  std::set<char> chars;
  for (const auto& t : transcripts) chars.insert(t.begin(), t.end());
  std::vector<std::string> pieces;
  for (char c : chars) pieces.push_back(c == ' ' ? kSpace : std::string(1, c));
  return from_tokens(std::move(pieces));
}

Vocab Vocab::from_tokens(std::vector<std::string> pieces) {
  Vocab v;
  v.tokens_ = {kBlank, kUnk};
  for (auto& p : pieces) {
    if (p == kBlank || p == kUnk || p == kSosEos) continue;
    if (std::find(v.tokens_.begin(), v.tokens_.end(), p) != v.tokens_.end()) {
      throw DataError("duplicate token '" + p + "'");
    }
    v.tokens_.push_back(std::move(p));
  }
  v.tokens_.push_back(kSosEos);
  v.index();
  return v;
}

void Vocab::index() {
  ids_.clear();
  bpe_ = false;
  max_piece_ = 1;
  for (int i = 0; i < size(); ++i) {
    ids_[tokens_[i]] = i;
    if (tokens_[i].rfind(kWordMark, 0) == 0) bpe_ = true;
    max_piece_ = std::max(max_piece_, tokens_[i].size());
  }
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  std::vector<std::string> t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    // Accept "token" or "token<ws>id" lines.
    t.push_back(line.substr(0, line.find_first_of(" \t")));
  }
  if (t.size() < 3 || t.front() != kBlank || t[1] != kUnk || t.back() != kSosEos) {
    throw DataError(path.string() + ": vocabulary must start with <blank>, <unk> and end with <sos/eos>");
  }
  Vocab v;
  v.tokens_ = std::move(t);
  v.index();
  if (v.ids_.size() != v.tokens_.size()) throw DataError(path.string() + ": duplicate tokens");
  return v;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw DataError("cannot write " + path.string());
}

int Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? unk() : it->second;
}

std::vector<int> Vocab::encode(const std::string& text) const {
  std::vector<int> out;
  if (!bpe_) {
    for (char c : text) out.push_back(c == ' ' ? id(kSpace) : id(std::string(1, c)));
    return out;
  }
  for (const auto& w : split_words(text)) {
    const std::string s = std::string(kWordMark) + w;
    std::size_t pos = 0;
    while (pos < s.size()) {
      std::size_t len = std::min(max_piece_, s.size() - pos);
      for (; len > 0; --len) {
        if (ids_.count(s.substr(pos, len))) break;
      }
      if (len == 0) {
        out.push_back(unk());
        ++pos;
      } else {
        out.push_back(ids_.at(s.substr(pos, len)));
        pos += len;
      }
    }
  }
  return out;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int i : ids) {
    if (i == blank() || i == sos_eos() || i < 0 || i >= size()) continue;
    const std::string& t = tokens_[i];
    out += t == kSpace ? " " : t;
  }
  if (!bpe_) return out;
  std::string words;
  const std::string mark = kWordMark;
  for (std::size_t p = 0; p < out.size();) {
    if (out.compare(p, mark.size(), mark) == 0) {
      if (!words.empty()) words += ' ';
      p += mark.size();
    } else {
      words += out[p++];
    }
  }
  return words;
}

}  // namespace spkadapt
