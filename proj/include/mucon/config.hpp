// Copyright 2026 The MuCon Authors
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

// Run configuration: built-in defaults, overridden by an INI file section,
// overridden by command-line flags.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mucon/bench.hpp"
#include "mucon/model.hpp"
#include "mucon/synth.hpp"

namespace mucon {

class RunConfig {
 public:
  /// Starts from the built-in defaults of `section`.
  explicit RunConfig(std::string section);

  const std::string& section() const { return section_; }
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Overrides from the matching section of an INI file. Unknown keys are
  /// rejected with ContractError.
  void merge_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  /// INI text with a single section holding every resolved key.
  std::string snapshot() const;
  void write_snapshot(const std::filesystem::path& dir) const;

 private:
  std::string section_;
  std::map<std::string, std::string> values_;
};

inline constexpr std::string_view kSnapshotFileName = "resolved_config.ini";

/// Section names with their default key/value pairs.
const std::map<std::string, std::map<std::string, std::string>>& default_settings();

SynthConfig synth_config_from(const RunConfig& rc);
TrainConfig train_config_from(const RunConfig& rc);
ModelConfig model_config_from(const RunConfig& rc, const Dataset& dataset);
BenchConfig bench_config_from(const RunConfig& rc);

}  // namespace mucon
