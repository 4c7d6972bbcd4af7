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

#include "mucon/losses.hpp"

#include <cmath>

namespace mucon {

Vector log_softmax(const Eigen::Ref<const Vector>& logits) {
  const double shift = logits.maxCoeff();
  const double lse = shift + std::log((logits.array() - shift).exp().sum());
  return logits.array() - lse;
}

Vector softmax(const Eigen::Ref<const Vector>& logits) {
  Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Vector segment_average(const FrameLogits& frame_logits, const Eigen::Ref<const Vector>& mask,
                       double abs_length) {
  if (mask.size() != frame_logits.frame_count()) throw ContractError("mask length != T");
  if (!(abs_length > 0.0)) throw ContractError("segment length must be positive");
  return frame_logits.scores.transpose() * mask / abs_length;
}

LossResult mucon_loss(const FrameLogits& frame_logits, const MaskSet& masks, const Localization& loc,
                      const Transcript& transcript, const Vector& rel_log_lengths, int template_size) {
  const int frames = frame_logits.frame_count();
  const int classes = frame_logits.num_actions();
  const int segs = transcript.size();
  if (masks.segment_count() != segs || loc.segment_count() != segs || rel_log_lengths.size() != segs) {
    throw ContractError("mucon_loss: transcript, masks and lengths disagree on M");
  }
  if (masks.frame_count() != frames) throw ContractError("mucon_loss: mask width != T");

  LossResult out;
  out.grad_frame_logits = Matrix::Zero(frames, classes);
  Matrix grad_masks(segs, frames);
  Vector grad_abs = Vector::Zero(segs);

  for (int m = 0; m < segs; ++m) {
    const ActionId target = transcript.actions[static_cast<std::size_t>(m)];
    if (target < 0 || target >= classes) throw ContractError("mucon_loss: action id out of range");
    const double len = loc.abs_lengths[m];
    const Vector mask = masks.masks.row(m).transpose();
    const Vector g = segment_average(frame_logits, mask, len);
    const Vector logp = log_softmax(g);
    out.value -= logp[target];

    Vector dg = logp.array().exp();
    dg[target] -= 1.0;
    // g = Y^T w / l'
    out.grad_frame_logits.noalias() += mask * dg.transpose() / len;
    grad_masks.row(m) = (frame_logits.scores * dg).transpose() / len;
    grad_abs[m] = -dg.dot(g) / len;
  }

  // Two routes to the relative log lengths: through the masks and through
  // the explicit l'_m denominator.
  const auto params = affine_params(loc, frames);
  const MaskJacobian jac = mask_jacobian(params, loc, rel_log_lengths, frames, template_size);
  out.grad_rel_log_lengths = jac.backprop(grad_masks);
  const Vector s = loc.abs_lengths / static_cast<double>(frames);
  const double weighted = grad_abs.dot(loc.abs_lengths);
  for (int k = 0; k < segs; ++k) {
    out.grad_rel_log_lengths[k] += loc.abs_lengths[k] * grad_abs[k] - s[k] * weighted;
  }
  return out;
}

LossResult transcript_loss(const Matrix& action_logits, const Transcript& transcript) {
  const int segs = transcript.size();
  if (action_logits.rows() != segs + 1) {
    throw ContractError("transcript_loss: expected " + std::to_string(segs + 1) + " rows, got " +
                        std::to_string(action_logits.rows()));
  }
  const int end = static_cast<int>(action_logits.cols()) - 1;
  LossResult out;
  out.grad_action_logits = Matrix::Zero(action_logits.rows(), action_logits.cols());
  for (int m = 0; m <= segs; ++m) {
    const int target = m < segs ? transcript.actions[static_cast<std::size_t>(m)] : end;
    if (target < 0 || target > end || (m < segs && target == end)) {
      throw ContractError("transcript_loss: action id out of range");
    }
    const Vector logp = log_softmax(action_logits.row(m).transpose());
    out.value -= logp[target];
    Vector d = logp.array().exp();
    d[target] -= 1.0;
    out.grad_action_logits.row(m) = d.transpose();
  }
  return out;
}

LossResult length_regularizer(const Vector& rel_log_lengths, double width) {
  if (!(width > 0.0)) throw ContractError("regularizer width must be positive");
  LossResult out;
  out.grad_rel_log_lengths = Vector::Zero(rel_log_lengths.size());
  for (Eigen::Index m = 0; m < rel_log_lengths.size(); ++m) {
    const double l = rel_log_lengths[m];
    // relu'(0) = 0
    if (l - width > 0.0) {
      out.value += l - width;
      out.grad_rel_log_lengths[m] += 1.0;
    }
    if (-l - width > 0.0) {
      out.value += -l - width;
      out.grad_rel_log_lengths[m] -= 1.0;
    }
  }
  return out;
}

namespace {

template <typename Block>
void accumulate(Block& into, const Block& part, double weight) {
  if (part.size() == 0) return;
  if (into.size() == 0) {
    into = weight * part;
    return;
  }
  if (into.rows() != part.rows() || into.cols() != part.cols()) {
    throw ContractError("total_loss: incompatible gradient shapes");
  }
  into += weight * part;
}

}  // namespace

LossResult total_loss(const LossResult& mucon, const LossResult& transcript, const LossResult& length,
                      double alpha) {
  LossResult out;
  out.value = mucon.value + transcript.value + alpha * length.value;
  for (const auto& [part, w] : {std::pair<const LossResult&, double>{mucon, 1.0},
                                {transcript, 1.0},
                                {length, alpha}}) {
    accumulate(out.grad_frame_logits, part.grad_frame_logits, w);
    accumulate(out.grad_rel_log_lengths, part.grad_rel_log_lengths, w);
    accumulate(out.grad_action_logits, part.grad_action_logits, w);
  }
  return out;
}

TrainingLoss training_loss(const FrameLogits& frame_logits, const SegmentPrediction& segments,
                           const Transcript& transcript, const LossWeights& weights) {
  const int segs = transcript.size();
  if (segments.segment_count() != segs + 1) {
    throw ContractError("training_loss: segment branch must emit M + 1 positions");
  }
  const int frames = frame_logits.frame_count();
  const Vector rel = segments.rel_log_lengths.head(segs);

  const Localization loc = normalize_lengths(rel, frames);
  const auto params = affine_params(loc, frames);
  const MaskSet masks = sample_masks(params, frames, weights.template_size);

  const LossResult lmu = mucon_loss(frame_logits, masks, loc, transcript, rel, weights.template_size);
  const LossResult lt = transcript_loss(segments.action_logits, transcript);
  const LossResult ll = length_regularizer(rel, weights.reg_width);

  TrainingLoss out;
  out.total = total_loss(lmu, lt, ll, weights.alpha);
  out.mucon = lmu.value;
  out.transcript = lt.value;
  out.length = ll.value;
  // Pad the length gradient to cover the end position.
  Vector g = Vector::Zero(segs + 1);
  g.head(segs) = out.total.grad_rel_log_lengths;
  out.total.grad_rel_log_lengths = std::move(g);
  if (!std::isfinite(out.total.value)) throw NumericError("training loss is not finite");
  return out;
}

}  // namespace mucon
