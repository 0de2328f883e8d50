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

// Binary parameter files: a magic line, one line of JSON metadata, then
// records of (u32 name length, name, i32 rows, i32 cols, float64 data).

#ifndef SPKADAPT_PARAM_IO_H_
#define SPKADAPT_PARAM_IO_H_

#include <filesystem>
#include <string>

#include "spkadapt/graph.h"

namespace spkadapt {

inline constexpr const char* kParamMagic = "SPKADAPT-PARAMS v1";

void save_params(const std::filesystem::path& path, const std::string& metadata_json,
                 const ParamStore& params);

struct ParamFile {
  std::string metadata_json;
  ParamStore params;
};
/// DataError on a missing file, wrong magic or truncated records.
ParamFile load_params(const std::filesystem::path& path);

}  // namespace spkadapt

#endif  // SPKADAPT_PARAM_IO_H_
