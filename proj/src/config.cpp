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

#include "mucon/config.hpp"

#include <charconv>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mucon/io.hpp"

namespace mucon {

const std::map<std::string, std::map<std::string, std::string>>& default_settings() {
  static const std::map<std::string, std::map<std::string, std::string>> defaults = {
      {"synth",
       {{"seed", "0"},
        {"num_classes", "6"},
        {"feature_dim", "16"},
        {"num_videos", "60"},
        {"min_actions", "3"},
        {"max_actions", "6"},
        {"min_length", "10"},
        {"max_length", "30"},
        {"noise_sigma", "0.5"},
        {"allow_repeats", "false"},
        {"holdout_fraction", "0"}}},
      {"train",
       {{"seed", "0"},
        {"epochs", "150"},
        {"learning_rate", "0.03"},
        {"weight_decay", "0.005"},
        {"alpha", "0.1"},
        {"reg_width", "2"},
        {"clip_norm", "5"},
        {"hidden", "16"},
        {"max_segments", "0"},
        {"kernel_width", "5"},
        {"position_sharpness", "4"},
        {"boundary_temperature", "5"},
        {"boundary_window", "5"}}},
      {"infer", {{"seed", "0"}, {"mode", "mucon-full"}, {"threads", "1"}, {"dump_masks", "false"}}},
      {"eval", {{"seed", "0"}, {"excluded_classes", ""}}},
      {"bench",
       {{"seed", "0"},
        {"counts", "1,10,50,100"},
        {"repetitions", "5"},
        {"parallel", "false"},
        {"threads", "0"},
        {"max_videos", "0"}}},
  };
  return defaults;
}

RunConfig::RunConfig(std::string section) : section_(std::move(section)) {
  const auto& all = default_settings();
  const auto it = all.find(section_);
  if (it == all.end()) throw ContractError("unknown config section '" + section_ + "'");
  values_ = it->second;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!values_.contains(key)) throw ContractError("unknown key '" + key + "' in section [" + section_ + "]");
  values_[key] = value;
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(read_file(path));
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ContractError("config " + path.string() + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  for (const auto& [name, section] : tree) {
    if (!default_settings().contains(name)) {
      throw ContractError("config " + path.string() + ": unknown section [" + name + "]");
    }
    if (name != section_) continue;
    for (const auto& [key, value] : section) set(key, value.data());
  }
}

std::string RunConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ContractError("missing config key '" + key + "'");
  return it->second;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ContractError("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

}  // namespace

int RunConfig::get_int(const std::string& key) const { return parse_number<int>(key, get_string(key)); }

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  return parse_number<std::uint64_t>(key, get_string(key));
}

double RunConfig::get_double(const std::string& key) const { return parse_number<double>(key, get_string(key)); }

bool RunConfig::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ContractError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  std::istringstream in(get_string(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    if (b == std::string::npos) continue;
    out.push_back(parse_number<int>(key, item.substr(b, item.find_last_not_of(' ') - b + 1)));
  }
  return out;
}

std::string RunConfig::snapshot() const {
  std::string out = "[" + section_ + "]\n";
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

void RunConfig::write_snapshot(const std::filesystem::path& dir) const {
  atomic_write(dir / kSnapshotFileName, snapshot());
}

SynthConfig synth_config_from(const RunConfig& rc) {
  SynthConfig c;
  c.seed = rc.get_u64("seed");
  c.num_classes = rc.get_int("num_classes");
  c.feature_dim = rc.get_int("feature_dim");
  c.num_videos = rc.get_int("num_videos");
  c.min_actions = rc.get_int("min_actions");
  c.max_actions = rc.get_int("max_actions");
  c.min_length = rc.get_int("min_length");
  c.max_length = rc.get_int("max_length");
  c.noise_sigma = rc.get_double("noise_sigma");
  c.allow_repeats = rc.get_bool("allow_repeats");
  return c;
}

TrainConfig train_config_from(const RunConfig& rc) {
  TrainConfig c;
  c.seed = rc.get_u64("seed");
  c.epochs = rc.get_int("epochs");
  c.learning_rate = rc.get_double("learning_rate");
  c.weight_decay = rc.get_double("weight_decay");
  c.alpha = rc.get_double("alpha");
  c.reg_width = rc.get_double("reg_width");
  c.clip_norm = rc.get_double("clip_norm");
  return c;
}

ModelConfig model_config_from(const RunConfig& rc, const Dataset& dataset) {
  ModelConfig base;
  base.hidden = rc.get_int("hidden");
  base.kernel_width = rc.get_int("kernel_width");
  base.position_sharpness = rc.get_double("position_sharpness");
  base.boundary_temperature = rc.get_double("boundary_temperature");
  base.boundary_window = rc.get_int("boundary_window");
  ModelConfig c = model_config_for(dataset, base);
  if (const int cap = rc.get_int("max_segments"); cap > 0) c.max_segments = cap;
  c.validate();
  return c;
}

BenchConfig bench_config_from(const RunConfig& rc) {
  BenchConfig c;
  c.counts = rc.get_int_list("counts");
  c.repetitions = rc.get_int("repetitions");
  c.parallel = rc.get_bool("parallel");
  c.threads = rc.get_int("threads");
  c.max_videos = rc.get_int("max_videos");
  c.validate();
  return c;
}

}  // namespace mucon
