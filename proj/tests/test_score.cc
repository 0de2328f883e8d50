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

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "doctest.h"
#include "spkadapt/score.h"
#include "test_util.h"

using namespace spkadapt;

namespace {

// Plain recursive edit distance with memoization.
int edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::pair<std::size_t, std::size_t>, int> memo;
  std::function<int(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> int {
    if (i == 0) return static_cast<int>(j);
    if (j == 0) return static_cast<int>(i);
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    int v = std::min(d(i - 1, j) + 1, d(i, j - 1) + 1);
    v = std::min(v, d(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1));
    return memo[key] = v;
  };
  return d(a.size(), b.size());
}

Manifest golden_refs() {
  Manifest m;
  m.records = {{"u1", "s1", "u1.wav", 3.0, "a b c d"},
               {"u2", "s1", "u2.wav", 4.0, "e f"},
               {"u3", "s2", "u3.wav", 8.0, "a b c d e f g h"},
               {"u4", "s2", "u4.wav", 20.0, "x y"}};
  return m;
}

std::vector<SystemHyps> golden_systems() {
  return {{"sysA", {{"u1", "a b c d"}, {"u2", "e"}, {"u3", "a b c d e f g h"}, {"u4", "x y z w"}}},
          {"sysB", {{"u1", "a x c d"}, {"u2", "e f g"}, {"u3", "b c d e f g h"}, {"u4", ""}}}};
}

}  // namespace

TEST_CASE("wer anchors") {
  CHECK(wer("a b c", "a b c") == 0.0);
  CHECK(wer("a b c", "a x c") == doctest::Approx(100.0 / 3.0));
  CHECK(wer("a", "b c") == doctest::Approx(200.0));
  CHECK(wer("a b", "") == doctest::Approx(100.0));
  CHECK_THROWS_AS(wer("", "a"), DataError);
  CHECK_THROWS_AS(wer("   ", "a"), DataError);
  CHECK(wer("ab", "ac", ScoreUnit::kChar) == doctest::Approx(50.0));
  CHECK(score_tokens("a  b", ScoreUnit::kChar).size() == 4);

  const ErrorCounts c = align({"a", "b", "c", "d"}, {"a", "x", "c", "d", "e"});
  CHECK(c.sub == 1);
  CHECK(c.del == 0);
  CHECK(c.ins == 1);
}

TEST_CASE("wer against an independent edit distance") {
  Rng rng(77);
  std::uniform_int_distribution<int> len(1, 12), hlen(0, 14), word(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> ref(len(rng)), hyp(hlen(rng));
    for (auto& w : ref) w = std::string(1, static_cast<char>('a' + word(rng)));
    for (auto& w : hyp) w = std::string(1, static_cast<char>('a' + word(rng)));
    const ErrorCounts c = align(ref, hyp);
    CHECK(c.errors() == edit_distance(ref, hyp));
    CHECK(c.ref == static_cast<long>(ref.size()));
    CHECK(c.del - c.ins == static_cast<long>(ref.size()) - static_cast<long>(hyp.size()));
    CHECK(c.sub >= 0);
  }
}

TEST_CASE("bucket report pools counts") {
  const ScoreReport r = bucket_report(golden_refs(), golden_systems(), {5.0, 15.0}, ScoreUnit::kWord);
  CHECK(r.buckets == std::vector<std::string>{"less_5", "5_15", "15_above", "overall"});
  // pooled 1/6, not the per-utterance mean 25%
  CHECK(r.at("sysA", "less_5").rate() == doctest::Approx(100.0 / 6.0));
  CHECK(r.at("sysA", "5_15").rate() == 0.0);
  CHECK(r.at("sysA", "15_above").rate() == doctest::Approx(100.0));
  CHECK(r.at("sysA", "overall").rate() == doctest::Approx(18.75));
  CHECK(r.at("sysB", "less_5").rate() == doctest::Approx(100.0 / 3.0));
  CHECK(r.at("sysB", "5_15").rate() == doctest::Approx(12.5));
  CHECK(r.at("sysB", "overall").rate() == doctest::Approx(31.25));
  CHECK(r.at("sysB", "overall").del == 3);
  CHECK(r.at("sysB", "overall").ins == 1);
  CHECK(r.at("sysB", "overall").sub == 1);

  std::ifstream golden(std::string(SPKADAPT_GOLDEN_DIR) + "/bucket_report.txt");
  REQUIRE(golden.good());
  std::stringstream want;
  want << golden.rdbuf();
  CHECK(r.table() + "\n" + r.csv() == want.str());

  auto missing = golden_systems();
  missing[1].text.erase("u3");
  CHECK_THROWS_AS(bucket_report(golden_refs(), missing, {5.0, 15.0}, ScoreUnit::kWord), DataError);
}

TEST_CASE("empty buckets and character mode") {
  const ScoreReport r = bucket_report(golden_refs(), golden_systems(), {1.0}, ScoreUnit::kChar);
  CHECK(r.csv().rfind("system,bucket,cer,S,D,I,Nref\n", 0) == 0);
  CHECK(r.csv().find("sysA,less_1,n/a,0,0,0,0") != std::string::npos);
  CHECK(r.table().rfind("CER", 0) == 0);
  // "e f" -> "e": one deleted character and one deleted space
  CHECK(r.at("sysA", "1_above").del >= 2);
}
