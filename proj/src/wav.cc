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

#include "spkadapt/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "spkadapt/common.h"

namespace spkadapt {
namespace {

void put_u32(std::ofstream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ofstream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

struct Parsed {
  int sample_rate = 0;
  std::size_t data_offset = 0;
  std::size_t data_bytes = 0;
};

Parsed parse_header(const std::vector<unsigned char>& buf,
                    const std::filesystem::path& path) {
  auto fail = [&](const char* why) {
    throw DataError(path.string() + ": " + why);
  };
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    fail("not a RIFF/WAVE file");
  }
  Parsed out;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::uint32_t len = get_u32(&buf[pos + 4]);
    const std::size_t body = pos + 8;
    if (std::memcmp(&buf[pos], "fmt ", 4) == 0) {
      if (len < 16 || body + 16 > buf.size()) fail("truncated fmt chunk");
      const std::uint16_t format = get_u16(&buf[body]);
      const std::uint16_t channels = get_u16(&buf[body + 2]);
      const std::uint16_t bits = get_u16(&buf[body + 14]);
      if (format != 1 || channels != 1 || bits != 16) {
        fail("only mono 16-bit PCM is supported");
      }
      out.sample_rate = static_cast<int>(get_u32(&buf[body + 4]));
      have_fmt = true;
    } else if (std::memcmp(&buf[pos], "data", 4) == 0) {
      if (!have_fmt) fail("data chunk before fmt chunk");
      out.data_offset = body;
      out.data_bytes = std::min<std::size_t>(len, buf.size() - body);
      return out;
    }
    pos = body + len + (len & 1);
  }
  fail("no data chunk");
  return out;
}

std::vector<unsigned char> slurp(const std::filesystem::path& path, std::size_t limit) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open audio file " + path.string());
  std::vector<unsigned char> buf;
  char tmp[1 << 14];
  while (buf.size() < limit && is.read(tmp, sizeof(tmp)).gcount() > 0) {
    buf.insert(buf.end(), tmp, tmp + is.gcount());
  }
  return buf;
}

}  // namespace

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  put_u32(os, 16);
  put_u16(os, 1);
  put_u16(os, 1);
  put_u32(os, static_cast<std::uint32_t>(sample_rate));
  put_u32(os, static_cast<std::uint32_t>(sample_rate * 2));
  put_u16(os, 2);
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, data_bytes);
  std::vector<unsigned char> pcm(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double v = std::clamp(samples[i], -1.0, 32767.0 / 32768.0);
    const auto q = static_cast<std::int16_t>(std::lround(v * 32768.0));
    pcm[2 * i] = static_cast<unsigned char>(q & 0xff);
    pcm[2 * i + 1] = static_cast<unsigned char>((q >> 8) & 0xff);
  }
  os.write(reinterpret_cast<const char*>(pcm.data()), static_cast<std::streamsize>(pcm.size()));
  if (!os) throw DataError("short write to " + path.string());
}

Audio read_wav(const std::filesystem::path& path) {
  const auto buf = slurp(path, static_cast<std::size_t>(-1));
  const Parsed p = parse_header(buf, path);
  Audio audio;
  audio.sample_rate = p.sample_rate;
  const std::size_t n = p.data_bytes / 2;
  audio.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto q = static_cast<std::int16_t>(get_u16(&buf[p.data_offset + 2 * i]));
    audio.samples[i] = q / 32768.0;
  }
  return audio;
}

WavInfo probe_wav(const std::filesystem::path& path) {
  // Headers written by common tools fit comfortably in the first few KiB.
  const auto buf = slurp(path, 1 << 16);
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  const auto file_size = static_cast<std::size_t>(is.tellg());
  Parsed p = parse_header(buf, path);
  std::uint32_t declared = get_u32(&buf[p.data_offset - 4]);
  const std::size_t bytes = std::min<std::size_t>(declared, file_size - p.data_offset);
  return {static_cast<long>(bytes / 2), p.sample_rate};
}

}  // namespace spkadapt
