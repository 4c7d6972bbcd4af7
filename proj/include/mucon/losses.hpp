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

// Training losses with analytic gradients.
//
//   mutual consistency  L_mu = sum_m CE(softmax(g_m), a_m),
//                       g_m  = sum_t y_t w_m[t] / l'_m
//   transcript          L_t  = sum of CE over M action rows plus one end row
//   length regularizer  L_l  = sum_m relu(l_m - w) + relu(-l_m - w)
//   total               L    = L_mu + L_t + alpha * L_l

#pragma once

#include "mucon/core.hpp"
#include "mucon/maskgen.hpp"

namespace mucon {

inline constexpr double kDefaultAlpha = 0.1;
inline constexpr double kDefaultRegularizerWidth = 2.0;

/// A loss value and its gradients with respect to the model outputs.
/// A gradient block with zero size stands for an all-zero block.
struct LossResult {
  double value = 0.0;
  Matrix grad_frame_logits;    // T x N
  Vector grad_rel_log_lengths; // M
  Matrix grad_action_logits;   // (M + 1) x (N + 1)
};

/// Numerically stable log-softmax of a row.
Vector log_softmax(const Eigen::Ref<const Vector>& logits);
Vector softmax(const Eigen::Ref<const Vector>& logits);

/// Masked window average; the denominator is the predicted length, not sum(w).
Vector segment_average(const FrameLogits& frame_logits, const Eigen::Ref<const Vector>& mask,
                       double abs_length);

LossResult mucon_loss(const FrameLogits& frame_logits, const MaskSet& masks, const Localization& loc,
                      const Transcript& transcript, const Vector& rel_log_lengths,
                      int template_size = kDefaultTemplateSize);

/// `action_logits` holds M + 1 rows: one per transcript action, then the end row.
LossResult transcript_loss(const Matrix& action_logits, const Transcript& transcript);

LossResult length_regularizer(const Vector& rel_log_lengths, double width = kDefaultRegularizerWidth);

LossResult total_loss(const LossResult& mucon, const LossResult& transcript, const LossResult& length,
                      double alpha = kDefaultAlpha);

struct LossWeights {
  double alpha = kDefaultAlpha;
  double reg_width = kDefaultRegularizerWidth;
  int template_size = kDefaultTemplateSize;
};

struct TrainingLoss {
  LossResult total;
  double mucon = 0.0;
  double transcript = 0.0;
  double length = 0.0;
};

/// Full training objective from raw network outputs. `segments` must hold
/// M + 1 positions; the first M relative log lengths drive the masks.
TrainingLoss training_loss(const FrameLogits& frame_logits, const SegmentPrediction& segments,
                           const Transcript& transcript, const LossWeights& weights = {});

}  // namespace mucon
