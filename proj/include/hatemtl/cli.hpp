// Copyright 2026 The hatemtl Authors
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hatemtl/data.hpp"
#include "hatemtl/evalharness.hpp"
#include "hatemtl/train.hpp"
#include "json.hpp"

namespace hatemtl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Contents of the JSON file passed with --config. Relative paths are
/// resolved against the file's directory.
struct RunConfig {
  std::vector<std::filesystem::path> manifests;
  train::TrainConfig train;
  eval::ExperimentOptions experiment;
  eval::CurveOptions curve;
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 0;

  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& file);
  nlohmann::json to_json() const;
};

/// Hash git would give the file as a blob: sha1("blob <size>\0" + bytes).
std::string git_blob_sha1(const std::filesystem::path& file);

/// Entry point behind the executable; returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hatemtl::cli
