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

// Reference two-branch network and its SGD trainer.
//
// Shared representation (temporal convolution, zero padded):
//   z_t = tanh(b_e + sum_k W_k^T x_{t + k - K/2})
// Frame branch:
//   y_t = W_f^T z_t + b_f
// Segment branch. A soft boundary count runs along the video,
//   q_t   = softmax(tau * mean_{|d| <= S/2} y_{t+d})      (edge frames replicated)
//   pi_t  = 1/2 |q_t - q_{t-1}|_1,   c_t = sum_{u <= t} pi_u
// and position m attends to frames whose count is close to m:
//   e_m[t]  = -gamma (c_t - m)^2
//   beta_m  = softmax_t(e_m[t] + q_m . z_t / sqrt(H))
//   f_m     = [sum_t beta_m[t] z_t ; logsumexp_t e_m[t]]
//   a_m     = W_a^T f_m + b_a        (N actions + end symbol)
//   l_m     = w_l . f_m + b_l        (relative log length)

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mucon/core.hpp"
#include "mucon/losses.hpp"

namespace mucon {

struct ModelConfig {
  int feature_dim = 16;
  int hidden = 16;
  int num_actions = 6;
  int max_segments = 6;
  int kernel_width = 5;
  double position_sharpness = 4.0;
  double boundary_temperature = 5.0;
  int boundary_window = 5;

  int positions() const { return max_segments + 1; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  ModelConfig config;
  std::vector<Matrix> embed;  // kernel_width blocks of D x H
  Vector embed_bias;          // H
  Matrix frame_head;          // H x N
  Vector frame_bias;          // N
  Matrix segment_queries;     // (M_max + 1) x H
  Matrix action_head;         // (H + 1) x (N + 1)
  Vector action_bias;         // N + 1
  Vector length_head;         // H + 1
  Vector length_bias;         // 1

  static ModelParams zeros(const ModelConfig& config);

  /// Visits every parameter block in a fixed order (the checkpoint order).
  void for_each_block(const std::function<void(std::span<double>)>& fn);
  void for_each_block(const std::function<void(std::span<const double>)>& fn) const;

  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

/// Gaussian(0, 0.1) weights, zero biases.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

struct ForwardOutput {
  FrameLogits frame_logits;
  SegmentPrediction segments;
};

/// Intermediates kept for backpropagation.
struct ForwardTrace {
  Matrix hidden;       // T x H
  FrameLogits frame_logits;
  Matrix sharpened;    // T x N, q_t
  Vector boundary;     // T, pi_0 = 0
  Vector count;        // T, c_t
  Matrix position;     // P x T, e_m[t]
  Matrix attention;    // P x T, beta_m[t]
  Matrix pooled;       // P x (H + 1), f_m
  SegmentPrediction segments;
};

ForwardTrace forward_trace(const ModelParams& params, const FeatureSequence& features, int positions);

/// Teacher-forced count: exactly M + 1 positions.
ForwardOutput forward_train(const ModelParams& params, const FeatureSequence& features,
                            int transcript_length);

/// Emits positions until the end symbol wins or M_max segments were produced.
/// At least one segment is always emitted.
ForwardOutput forward_infer(const ModelParams& params, const FeatureSequence& features);

/// Gradients of a scalar loss with respect to every parameter, given the loss
/// gradients at the outputs of `trace`.
ModelParams backward(const ModelParams& params, const FeatureSequence& features, const ForwardTrace& trace,
                     const Matrix& grad_frame_logits, const Matrix& grad_action_logits,
                     const Vector& grad_rel_log_lengths);

struct ParamLoss {
  TrainingLoss loss;
  ModelParams grad;
};

/// total loss of forward_train and its parameter gradient.
ParamLoss loss_and_gradient(const ModelParams& params, const FeatureSequence& features,
                            const Transcript& transcript, const LossWeights& weights);

struct TrainConfig {
  double learning_rate = 0.03;
  double weight_decay = 0.005;
  int epochs = 150;
  double alpha = kDefaultAlpha;
  double reg_width = kDefaultRegularizerWidth;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double total = 0.0;
  double mucon = 0.0;
  double transcript = 0.0;
  double length = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> trace;
};

/// Dimensions taken from the dataset (D, N and the longest transcript).
ModelConfig model_config_for(const Dataset& dataset, ModelConfig base = {});

/// Plain SGD, one video per step, visiting order reshuffled every epoch.
/// Frame labels are never read.
TrainResult train(const Dataset& dataset, const TrainConfig& config, ModelParams initial);
TrainResult train(const Dataset& dataset, const TrainConfig& config, const ModelConfig& model);

inline constexpr std::string_view kCheckpointMagic = "MUCONCKP";
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(std::string_view bytes);
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace mucon
