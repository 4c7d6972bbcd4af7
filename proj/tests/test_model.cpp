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

#include <cmath>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "mucon/io.hpp"
#include "mucon/model.hpp"
#include "mucon/synth.hpp"

namespace mucon {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.feature_dim = 4;
  c.hidden = 8;
  c.num_actions = 3;
  c.max_segments = 2;
  return c;
}

TEST(InitParams, GaussianWeightsZeroBiasesDeterministic) {
  ModelConfig c;
  const ModelParams a = init_params(c, 7);
  const ModelParams b = init_params(c, 7);
  EXPECT_EQ(a.flatten(), b.flatten());
  EXPECT_NE(a.flatten(), init_params(c, 8).flatten());
  EXPECT_TRUE(a.embed_bias.isZero());
  EXPECT_TRUE(a.frame_bias.isZero());
  EXPECT_TRUE(a.action_bias.isZero());
  EXPECT_TRUE(a.length_bias.isZero());
  double sum = 0, sq = 0;
  int n = 0;
  for (const auto& m : a.embed) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      sum += m.data()[i];
      sq += m.data()[i] * m.data()[i];
      ++n;
    }
  }
  EXPECT_NEAR(sum / n, 0.0, 0.02);
  EXPECT_NEAR(std::sqrt(sq / n), 0.1, 0.01);
}

TEST(ModelParams, FlattenAssignRoundTrip) {
  const ModelParams p = init_params(small_config(), 1);
  ModelParams q = ModelParams::zeros(small_config());
  q.assign(p.flatten());
  EXPECT_EQ(q.flatten(), p.flatten());
  EXPECT_EQ(p.flatten().size(), p.parameter_count());
  EXPECT_THROW(q.assign(std::vector<double>(3)), ContractError);
}

TEST(Forward, ShapesInTrainAndInferModes) {
  const ModelParams p = init_params(small_config(), 2);
  std::mt19937_64 rng(2);
  const FeatureSequence x(test::random_matrix(15, 4, rng));
  const ForwardOutput tr = forward_train(p, x, 2);
  EXPECT_EQ(tr.frame_logits.scores.rows(), 15);
  EXPECT_EQ(tr.frame_logits.scores.cols(), 3);
  EXPECT_EQ(tr.segments.action_logits.rows(), 3);
  EXPECT_EQ(tr.segments.action_logits.cols(), 4);
  EXPECT_EQ(tr.segments.rel_log_lengths.size(), 3);
  const ForwardOutput inf = forward_infer(p, x);
  EXPECT_GE(inf.segments.segment_count(), 1);
  EXPECT_LE(inf.segments.segment_count(), 2);
  EXPECT_THROW(forward_train(p, x, 3), ContractError);
  EXPECT_THROW(forward_train(p, FeatureSequence(Matrix::Zero(5, 3)), 1), ContractError);
}

TEST(Forward, SingleSegmentCap) {
  ModelConfig c = small_config();
  c.max_segments = 1;
  std::mt19937_64 rng(3);
  for (int s = 0; s < 20; ++s) {
    const ModelParams p = init_params(c, static_cast<std::uint64_t>(s));
    const FeatureSequence x(test::random_matrix(test::uniform_int(rng, 1, 30), 4, rng));
    EXPECT_EQ(forward_infer(p, x).segments.segment_count(), 1);
  }
}

TEST(Backward, FullGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  int instances = 0;
  for (int trial = 0; trial < 6; ++trial) {
    ModelParams p = init_params(small_config(), 100 + static_cast<std::uint64_t>(trial));
    // Larger weights than the init so every path carries signal.
    std::vector<double> v = p.flatten();
    for (double& x : v) x += 0.3 * std::normal_distribution<double>(0.0, 1.0)(rng);
    p.assign(v);
    const FeatureSequence x(test::random_matrix(15, 4, rng));
    const Transcript tr = test::random_transcript(2, 3, rng);
    const test::GradCheck g = test::check_model_gradient(p, x, tr);
    EXPECT_LT(g.max_rel_error, 1e-3) << "trial " << trial;
    EXPECT_GT(g.checked, static_cast<int>(p.parameter_count()) / 2);
    ++instances;
  }
  EXPECT_EQ(instances, 6);
}

TEST(Backward, GradientReachesLengthHeadThroughMasks) {
  // With alpha = 0 and the transcript loss independent of the length head,
  // any length-head gradient must come through mask generation.
  std::mt19937_64 rng(5);
  const ModelParams p = init_params(small_config(), 9);
  const FeatureSequence x(test::random_matrix(15, 4, rng));
  LossWeights w;
  w.alpha = 0.0;
  const ParamLoss pl = loss_and_gradient(p, x, Transcript{{0, 2}}, w);
  EXPECT_GT(pl.grad.length_head.norm(), 0.0);
}

Dataset tiny_dataset(int videos = 6) {
  SynthConfig c;
  c.num_videos = videos;
  c.max_actions = 4;
  c.max_length = 15;
  return generate(c);
}

TEST(Train, ZeroEpochsReturnsInitialParams) {
  const Dataset ds = tiny_dataset();
  TrainConfig tc;
  tc.epochs = 0;
  const ModelParams init = init_params(model_config_for(ds), 5);
  const TrainResult r = train(ds, tc, init);
  EXPECT_EQ(r.params.flatten(), init.flatten());
  EXPECT_TRUE(r.trace.empty());
}

TEST(Train, IdenticalSeedsGiveBitwiseIdenticalTraces) {
  const Dataset ds = tiny_dataset();
  TrainConfig tc;
  tc.epochs = 5;
  tc.seed = 3;
  const TrainResult a = train(ds, tc, model_config_for(ds));
  const TrainResult b = train(ds, tc, model_config_for(ds));
  ASSERT_EQ(a.trace.size(), 5u);
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].total, b.trace[i].total);
    EXPECT_EQ(a.trace[i].mucon, b.trace[i].mucon);
  }
  EXPECT_EQ(a.params.flatten(), b.params.flatten());
  tc.seed = 4;
  EXPECT_NE(train(ds, tc, model_config_for(ds)).trace.back().total, a.trace.back().total);
}

TEST(Train, DivergenceReportsStep) {
  const Dataset ds = tiny_dataset();
  TrainConfig tc;
  tc.epochs = 20;
  tc.learning_rate = 1e4;
  tc.clip_norm = 0.0;
  try {
    train(ds, tc, model_config_for(ds));
    FAIL() << "expected divergence";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos) << e.what();
  }
}

TEST(Train, RejectsBadConfig) {
  const Dataset ds = tiny_dataset();
  TrainConfig tc;
  tc.learning_rate = 0.0;
  EXPECT_THROW(train(ds, tc, model_config_for(ds)), ContractError);
  tc = {};
  tc.epochs = -1;
  EXPECT_THROW(train(ds, tc, model_config_for(ds)), ContractError);
}

TEST(Train, DefaultDatasetReachesQuarterOfUniformTranscriptLoss) {
  SynthConfig sc;
  const Dataset ds = generate(sc);
  TrainConfig tc;
  tc.epochs = 200;
  const TrainResult r = train(ds, tc, model_config_for(ds));
  // Smoothed trace: no 20-epoch block mean rises above the best earlier one
  // by more than 2% of the first block's loss.
  double prev = INFINITY;
  double slack = 0.0;
  for (std::size_t b = 0; b + 20 <= r.trace.size(); b += 20) {
    double mean = 0;
    for (std::size_t i = b; i < b + 20; ++i) mean += r.trace[i].total;
    mean /= 20;
    if (b == 0) slack = 0.02 * mean;
    EXPECT_LE(mean, prev + slack) << "block " << b / 20;
    prev = std::min(prev, mean);
  }
  const double ln_classes = std::log(static_cast<double>(sc.num_classes + 1));
  const LossWeights w;
  for (const auto& v : ds.videos) {
    const ForwardOutput out = forward_train(r.params, v.features, v.transcript.size());
    const double lt = training_loss(out.frame_logits, out.segments, v.transcript, w).transcript;
    EXPECT_LT(lt, ln_classes * (v.transcript.size() + 1) / 4.0) << v.id;
  }
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const ModelParams p = init_params(small_config(), 12);
  const std::string bytes = encode_checkpoint(p);
  EXPECT_EQ(bytes.substr(0, 8), "MUCONCKP");
  const ModelParams q = decode_checkpoint(bytes);
  EXPECT_EQ(q.config, p.config);
  EXPECT_EQ(q.flatten(), p.flatten());
  const auto dir = test::scratch_dir("ckpt");
  save_checkpoint(p, dir / "c.bin");
  EXPECT_EQ(load_checkpoint(dir / "c.bin").flatten(), p.flatten());
}

TEST(Checkpoint, RejectsCorruption) {
  const std::string bytes = encode_checkpoint(init_params(small_config(), 1));
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), DataError);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), DataError);
  EXPECT_THROW(decode_checkpoint(bytes + "extra"), DataError);
}

}  // namespace
}  // namespace mucon
