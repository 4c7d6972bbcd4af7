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

#include "mucon/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace mucon {

namespace fs = std::filesystem;
using nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

static void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::string_view ByteReader::take(std::size_t n) {
  if (remaining() < n) throw DataError("unexpected end of binary data");
  auto out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint32_t ByteReader::u32() {
  auto b = take(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

double ByteReader::f64() {
  auto b = take(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
  return std::bit_cast<double>(v);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(rng() % 1000000007ULL);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw DataError("write failed for " + path.string());
    }
  }
  fs::rename(tmp, path);
}

std::string encode_feature_blob(const FeatureSequence& features) {
  std::string out;
  const auto& m = features.frames();
  out.reserve(8 + 4 * static_cast<std::size_t>(m.size()));
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f32(out, static_cast<float>(m(r, c)));
  }
  return out;
}

FeatureSequence decode_feature_blob(std::string_view bytes) {
  ByteReader in(bytes);
  const auto rows = in.u32();
  const auto cols = in.u32();
  if (rows == 0 || cols == 0) throw DataError("feature blob header has zero extent");
  if (in.remaining() != 4ULL * rows * cols) throw DataError("feature blob size does not match header");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = in.f32();
  }
  return FeatureSequence(std::move(m));
}

void write_feature_blob(const fs::path& path, const FeatureSequence& features) {
  atomic_write(path, encode_feature_blob(features));
}

FeatureSequence read_feature_blob(const fs::path& path) { return decode_feature_blob(read_file(path)); }

fs::path save_dataset(const Dataset& dataset, const fs::path& dir) {
  fs::create_directories(dir / "features");
  std::string manifest;
  json header = {{"format", kManifestFormat},
                 {"version", kManifestVersion},
                 {"num_classes", dataset.num_classes},
                 {"feature_dim", dataset.feature_dim},
                 {"videos", dataset.videos.size()}};
  manifest += header.dump() + "\n";
  for (const auto& v : dataset.videos) {
    const std::string rel = "features/" + v.id + ".bin";
    write_feature_blob(dir / rel, v.features);
    json rec = {{"id", v.id},
                {"features", rel},
                {"frames", v.features.frame_count()},
                {"transcript", v.transcript.actions}};
    if (v.labels) rec["labels"] = v.labels->labels;
    manifest += rec.dump() + "\n";
  }
  const fs::path path = dir / kManifestFileName;
  atomic_write(path, manifest);
  return path;
}

Dataset load_dataset(const fs::path& manifest_or_dir) {
  fs::path manifest = manifest_or_dir;
  if (fs::is_directory(manifest)) manifest /= kManifestFileName;
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open dataset manifest " + manifest.string());
  const fs::path base = manifest.parent_path();

  Dataset ds;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty manifest " + manifest.string());
  try {
    const json header = json::parse(line);
    if (header.at("format").get<std::string>() != kManifestFormat) throw DataError("not a dataset manifest");
    if (header.at("version").get<int>() != kManifestVersion) throw DataError("unsupported manifest version");
    ds.num_classes = header.at("num_classes").get<int>();
    ds.feature_dim = header.at("feature_dim").get<int>();
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest header: ") + e.what());
  }

  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      Video v;
      v.id = rec.at("id").get<std::string>();
      v.features = read_feature_blob(base / rec.at("features").get<std::string>());
      if (rec.contains("frames") && rec.at("frames").get<int>() != v.features.frame_count()) {
        throw DataError("frame count does not match blob");
      }
      v.transcript.actions = rec.at("transcript").get<std::vector<ActionId>>();
      if (rec.contains("labels")) v.labels = FrameLabeling{rec.at("labels").get<std::vector<ActionId>>()};
      ds.videos.push_back(std::move(v));
    } catch (const json::exception& e) {
      throw DataError("record " + std::to_string(index) + ": " + e.what());
    } catch (const Error& e) {
      throw DataError("record " + std::to_string(index) + ": " + e.what());
    }
    ++index;
  }
  return ds;
}

}  // namespace mucon
