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

// Dataset files: a JSON-lines manifest plus one binary blob per video.
//
// Manifest (one JSON object per line):
//   line 1   {"format":"mucon-dataset","version":1,"num_classes":N,"feature_dim":D,"videos":V}
//   line 2.. {"id":"...","features":"features/<id>.bin","frames":T,
//             "transcript":[...],"labels":[...]}        ("labels" is optional)
//
// Feature blob: uint32 T, uint32 D, then T*D float32 row-major, all little-endian.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mucon/core.hpp"

namespace mucon {

inline constexpr std::string_view kManifestFormat = "mucon-dataset";
inline constexpr int kManifestVersion = 1;
inline constexpr std::string_view kManifestFileName = "manifest.jsonl";

/// Writes to a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

std::string encode_feature_blob(const FeatureSequence& features);
FeatureSequence decode_feature_blob(std::string_view bytes);

void write_feature_blob(const std::filesystem::path& path, const FeatureSequence& features);
FeatureSequence read_feature_blob(const std::filesystem::path& path);

/// Writes `dir/manifest.jsonl` and `dir/features/*.bin`. Returns the manifest path.
std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Accepts either the manifest path or the directory containing it.
/// Throws DataError naming the offending record index.
Dataset load_dataset(const std::filesystem::path& manifest_or_dir);

std::string read_file(const std::filesystem::path& path);

// Little-endian helpers shared with the checkpoint format.
void put_u32(std::string& out, std::uint32_t v);
void put_f32(std::string& out, float v);
void put_f64(std::string& out, double v);

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32();
  float f32();
  double f64();
  std::string_view take(std::size_t n);
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace mucon
