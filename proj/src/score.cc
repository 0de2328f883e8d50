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

#include "spkadapt/score.h"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "spkadapt/common.h"

namespace spkadapt {

std::vector<std::string> score_tokens(std::string_view text, ScoreUnit unit) {
  std::vector<std::string> out;
  if (unit == ScoreUnit::kChar) {
    for (char c : text) out.emplace_back(1, c);
    return out;
  }
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

double ErrorCounts::rate() const {
  if (ref == 0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * static_cast<double>(errors()) / static_cast<double>(ref);
}

ErrorCounts& ErrorCounts::operator+=(const ErrorCounts& o) {
  sub += o.sub;
  del += o.del;
  ins += o.ins;
  ref += o.ref;
  return *this;
}

ErrorCounts align(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  if (ref.empty()) throw DataError("empty reference");
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int diag = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i][j] = std::min({diag, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }
  ErrorCounts c;
  c.ref = static_cast<long>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++c.sub;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++c.del;
      --i;
    } else {
      ++c.ins;
      --j;
    }
  }
  return c;
}

double wer(std::string_view ref, std::string_view hyp, ScoreUnit unit) {
  return align(score_tokens(ref, unit), score_tokens(hyp, unit)).rate();
}

const ErrorCounts& ScoreReport::at(const std::string& system, const std::string& bucket) const {
  for (std::size_t s = 0; s < systems.size(); ++s) {
    if (systems[s] != system) continue;
    for (std::size_t b = 0; b < buckets.size(); ++b) {
      if (buckets[b] == bucket) return counts[s][b];
    }
  }
  throw UsageError("no report entry for " + system + "/" + bucket);
}

namespace {

std::string fmt_rate(double r, int decimals) {
  if (std::isnan(r)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, r);
  return buf;
}

}  // namespace

std::string ScoreReport::table() const {
  std::size_t name_w = 6;
  for (const auto& s : systems) name_w = std::max(name_w, s.size());
  std::ostringstream out;
  out << (unit == ScoreUnit::kChar ? "CER" : "WER") << " (%), pooled: 100 * (S + D + I) / Nref per bucket\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_w), "system");
  out << buf;
  for (const auto& b : buckets) {
    std::snprintf(buf, sizeof buf, " %10s", b.c_str());
    out << buf;
  }
  out << '\n';
  for (std::size_t s = 0; s < systems.size(); ++s) {
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_w), systems[s].c_str());
    out << buf;
    for (std::size_t b = 0; b < buckets.size(); ++b) {
      std::snprintf(buf, sizeof buf, " %10s", fmt_rate(counts[s][b].rate(), 2).c_str());
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string ScoreReport::csv() const {
  std::ostringstream out;
  out << "system,bucket," << (unit == ScoreUnit::kChar ? "cer" : "wer") << ",S,D,I,Nref\n";
  for (std::size_t s = 0; s < systems.size(); ++s) {
    for (std::size_t b = 0; b < buckets.size(); ++b) {
      const auto& c = counts[s][b];
      out << systems[s] << ',' << buckets[b] << ',' << fmt_rate(c.rate(), 4) << ',' << c.sub << ','
          << c.del << ',' << c.ins << ',' << c.ref << '\n';
    }
  }
  return out.str();
}

ScoreReport bucket_report(const Manifest& refs, const std::vector<SystemHyps>& systems,
                          const std::vector<double>& edges, ScoreUnit unit) {
  ScoreReport r;
  r.unit = unit;
  r.edges = edges;
  r.buckets = bucket_names(edges);
  const std::size_t overall = r.buckets.size();
  r.buckets.push_back("overall");
  for (const auto& sys : systems) {
    r.systems.push_back(sys.name);
    std::vector<ErrorCounts> row(r.buckets.size());
    for (const auto& rec : refs.records) {
      auto it = sys.text.find(rec.utt_id);
      if (it == sys.text.end()) {
        throw DataError("system " + sys.name + " has no hypothesis for " + rec.utt_id);
      }
      const ErrorCounts c = align(score_tokens(rec.transcript, unit), score_tokens(it->second, unit));
      row[bucket_index(rec.duration_s, edges)] += c;
      row[overall] += c;
    }
    r.counts.push_back(std::move(row));
  }
  return r;
}

}  // namespace spkadapt
