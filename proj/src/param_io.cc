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

#include "spkadapt/param_io.h"

#include <cstdint>
#include <fstream>

namespace spkadapt {

void save_params(const std::filesystem::path& path, const std::string& metadata_json,
                 const ParamStore& params) {
  if (metadata_json.find('\n') != std::string::npos) {
    throw UsageError("parameter metadata must be a single line");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << kParamMagic << '\n' << metadata_json << '\n';
    for (const auto& [name, m] : params) {
      const auto len = static_cast<std::uint32_t>(name.size());
      const std::int32_t rows = m.rows(), cols = m.cols();
      out.write(reinterpret_cast<const char*>(&len), sizeof len);
      out.write(name.data(), len);
      out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
      out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
      out.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
    if (!out) throw DataError("short write to " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

ParamFile load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  std::getline(in, magic);
  if (magic != kParamMagic) throw DataError(path.string() + ": not a parameter file");
  ParamFile f;
  std::getline(in, f.metadata_json);
  while (true) {
    std::uint32_t len = 0;
    if (!in.read(reinterpret_cast<char*>(&len), sizeof len)) break;
    std::string name(len, '\0');
    std::int32_t rows = 0, cols = 0;
    in.read(name.data(), len);
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (!in || rows < 0 || cols < 0) throw DataError(path.string() + ": truncated record");
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw DataError(path.string() + ": truncated data for " + name);
    f.params.emplace(std::move(name), std::move(m));
  }
  return f;
}

}  // namespace spkadapt
