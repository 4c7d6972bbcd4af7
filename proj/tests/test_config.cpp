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

#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <gtest/gtest.h>

#include "mucon/config.hpp"
#include "mucon/io.hpp"
#include "test_util.hpp"

namespace mucon {
namespace {

TEST(Config, ReferenceFileMatchesBuiltInDefaults) {
  boost::property_tree::ptree tree;
  boost::property_tree::ini_parser::read_ini(MUCON_SOURCE_DIR "/config/defaults.ini", tree);
  const auto& defaults = default_settings();
  EXPECT_EQ(tree.size(), defaults.size());
  for (const auto& [section, keys] : defaults) {
    const auto& node = tree.get_child(section);
    EXPECT_EQ(node.size(), keys.size()) << section;
    for (const auto& [k, v] : keys) EXPECT_EQ(node.get<std::string>(k), v) << section << "." << k;
  }
}

TEST(Config, DefaultsMapToLibraryDefaults) {
  const SynthConfig s = synth_config_from(RunConfig("synth"));
  const SynthConfig ref;
  EXPECT_EQ(s.num_classes, ref.num_classes);
  EXPECT_EQ(s.num_videos, ref.num_videos);
  EXPECT_EQ(s.max_length, ref.max_length);
  EXPECT_EQ(s.noise_sigma, ref.noise_sigma);
  const TrainConfig t = train_config_from(RunConfig("train"));
  const TrainConfig tref;
  EXPECT_EQ(t.learning_rate, tref.learning_rate);
  EXPECT_EQ(t.epochs, tref.epochs);
  EXPECT_EQ(t.alpha, 0.1);
  EXPECT_EQ(t.reg_width, 2.0);
  EXPECT_EQ(bench_config_from(RunConfig("bench")).counts, (std::vector<int>{1, 10, 50, 100}));
}

TEST(Config, FileOverridesDefaultsAndSetOverridesFile) {
  const auto dir = test::scratch_dir("config_merge");
  atomic_write(dir / "c.ini", "[train]\nepochs = 7\nlearning_rate = 0.5\n[synth]\nnum_videos = 3\n");
  RunConfig rc("train");
  rc.merge_file(dir / "c.ini");
  EXPECT_EQ(rc.get_int("epochs"), 7);
  EXPECT_EQ(rc.get_double("learning_rate"), 0.5);
  rc.set("epochs", "9");
  EXPECT_EQ(rc.get_int("epochs"), 9);
  EXPECT_EQ(rc.get_double("weight_decay"), 0.005);
}

TEST(Config, RejectsUnknownKeysSectionsAndBadValues) {
  const auto dir = test::scratch_dir("config_bad");
  atomic_write(dir / "k.ini", "[train]\nepoch = 7\n");
  atomic_write(dir / "s.ini", "[trian]\nepochs = 7\n");
  RunConfig rc("train");
  EXPECT_THROW(rc.merge_file(dir / "k.ini"), ContractError);
  EXPECT_THROW(rc.merge_file(dir / "s.ini"), ContractError);
  EXPECT_THROW(RunConfig("nope"), ContractError);
  rc.set("epochs", "seven");
  EXPECT_THROW(rc.get_int("epochs"), ContractError);
  rc.set("epochs", "7x");
  EXPECT_THROW(rc.get_int("epochs"), ContractError);
  RunConfig b("bench");
  b.set("parallel", "maybe");
  EXPECT_THROW(b.get_bool("parallel"), ContractError);
  b.set("repetitions", "2");
  EXPECT_THROW(bench_config_from(b), ContractError);
}

TEST(Config, SnapshotRoundTrips) {
  RunConfig rc("bench");
  rc.set("counts", "1, 5,9");
  EXPECT_EQ(rc.get_int_list("counts"), (std::vector<int>{1, 5, 9}));
  const auto dir = test::scratch_dir("config_snap");
  rc.write_snapshot(dir);
  RunConfig back("bench");
  back.merge_file(dir / "resolved_config.ini");
  EXPECT_EQ(back.values(), rc.values());
}

}  // namespace
}  // namespace mucon
