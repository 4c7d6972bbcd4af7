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

#include "mucon/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mucon/io.hpp"

namespace mucon {

void ModelConfig::validate() const {
  if (feature_dim < 1 || hidden < 1 || num_actions < 1 || max_segments < 1) {
    throw ContractError("model dimensions must be positive");
  }
  if (kernel_width < 1 || kernel_width % 2 == 0) throw ContractError("kernel_width must be odd");
  if (boundary_window < 1 || boundary_window % 2 == 0) throw ContractError("boundary_window must be odd");
  if (!(position_sharpness > 0.0) || !(boundary_temperature > 0.0)) {
    throw ContractError("position_sharpness and boundary_temperature must be positive");
  }
}

ModelParams ModelParams::zeros(const ModelConfig& c) {
  c.validate();
  ModelParams p;
  p.config = c;
  p.embed.assign(static_cast<std::size_t>(c.kernel_width), Matrix::Zero(c.feature_dim, c.hidden));
  p.embed_bias = Vector::Zero(c.hidden);
  p.frame_head = Matrix::Zero(c.hidden, c.num_actions);
  p.frame_bias = Vector::Zero(c.num_actions);
  p.segment_queries = Matrix::Zero(c.positions(), c.hidden);
  p.action_head = Matrix::Zero(c.hidden + 1, c.num_actions + 1);
  p.action_bias = Vector::Zero(c.num_actions + 1);
  p.length_head = Vector::Zero(c.hidden + 1);
  p.length_bias = Vector::Zero(1);
  return p;
}

namespace {

template <typename Dense>
std::span<double> span_of(Dense& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename Dense>
std::span<const double> span_of(const Dense& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

bool is_weight_block(std::size_t index, std::size_t kernel) {
  // Block order: embed[0..K), embed_bias, frame_head, frame_bias, queries,
  // action_head, action_bias, length_head, length_bias.
  if (index < kernel) return true;
  const std::size_t rest = index - kernel;
  return rest == 1 || rest == 3 || rest == 4 || rest == 6;
}

}  // namespace

void ModelParams::for_each_block(const std::function<void(std::span<double>)>& fn) {
  for (auto& w : embed) fn(span_of(w));
  fn(span_of(embed_bias));
  fn(span_of(frame_head));
  fn(span_of(frame_bias));
  fn(span_of(segment_queries));
  fn(span_of(action_head));
  fn(span_of(action_bias));
  fn(span_of(length_head));
  fn(span_of(length_bias));
}

void ModelParams::for_each_block(const std::function<void(std::span<const double>)>& fn) const {
  for (const auto& w : embed) fn(span_of(w));
  fn(span_of(embed_bias));
  fn(span_of(frame_head));
  fn(span_of(frame_bias));
  fn(span_of(segment_queries));
  fn(span_of(action_head));
  fn(span_of(action_bias));
  fn(span_of(length_head));
  fn(span_of(length_bias));
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each_block([&](std::span<const double> b) { n += b.size(); });
  return n;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for_each_block([&](std::span<const double> b) { out.insert(out.end(), b.begin(), b.end()); });
  return out;
}

void ModelParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ContractError("parameter vector has wrong size");
  std::size_t pos = 0;
  for_each_block([&](std::span<double> b) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), b.size(), b.begin());
    pos += b.size();
  });
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.1);
  std::size_t index = 0;
  const auto kernel = static_cast<std::size_t>(config.kernel_width);
  p.for_each_block([&](std::span<double> b) {
    if (is_weight_block(index, kernel)) {
      for (double& v : b) v = normal(rng);
    }
    ++index;
  });
  return p;
}

ForwardTrace forward_trace(const ModelParams& params, const FeatureSequence& features, int positions) {
  const ModelConfig& c = params.config;
  if (features.dim() != c.feature_dim) {
    throw ContractError("feature dimension " + std::to_string(features.dim()) + " != model " +
                        std::to_string(c.feature_dim));
  }
  if (positions < 1 || positions > c.positions()) {
    throw ContractError("requested " + std::to_string(positions) + " positions, model supports " +
                        std::to_string(c.positions()));
  }
  const Matrix& x = features.frames();
  const int frames = features.frame_count();
  const int half = c.kernel_width / 2;

  ForwardTrace tr;
  Matrix pre = params.embed_bias.transpose().replicate(frames, 1);
  for (int k = 0; k < c.kernel_width; ++k) {
    const int offset = k - half;
    const int dst0 = std::max(0, -offset);
    const int dst1 = std::min(frames, frames - offset);
    if (dst1 <= dst0) continue;
    pre.middleRows(dst0, dst1 - dst0).noalias() +=
        x.middleRows(dst0 + offset, dst1 - dst0) * params.embed[static_cast<std::size_t>(k)];
  }
  tr.hidden = pre.array().tanh();
  tr.frame_logits.scores = tr.hidden * params.frame_head;
  tr.frame_logits.scores.rowwise() += params.frame_bias.transpose();

  const Matrix& y = tr.frame_logits.scores;
  const int window = c.boundary_window;
  const int whalf = window / 2;
  tr.sharpened.resize(frames, c.num_actions);
  for (int t = 0; t < frames; ++t) {
    Vector acc = Vector::Zero(c.num_actions);
    for (int d = -whalf; d <= whalf; ++d) acc += y.row(std::clamp(t + d, 0, frames - 1)).transpose();
    tr.sharpened.row(t) = softmax(c.boundary_temperature / window * acc).transpose();
  }
  tr.boundary = Vector::Zero(frames);
  tr.count = Vector::Zero(frames);
  for (int t = 1; t < frames; ++t) {
    tr.boundary[t] = 0.5 * (tr.sharpened.row(t) - tr.sharpened.row(t - 1)).cwiseAbs().sum();
    tr.count[t] = tr.count[t - 1] + tr.boundary[t];
  }

  const double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(c.hidden));
  tr.position.resize(positions, frames);
  tr.attention.resize(positions, frames);
  tr.pooled.resize(positions, c.hidden + 1);
  for (int m = 0; m < positions; ++m) {
    const Vector e = -c.position_sharpness * (tr.count.array() - static_cast<double>(m)).square();
    const Vector s = e + tr.hidden * params.segment_queries.row(m).transpose() * inv_sqrt_h;
    const Vector beta = softmax(s);
    tr.position.row(m) = e.transpose();
    tr.attention.row(m) = beta.transpose();
    tr.pooled.row(m).head(c.hidden) = beta.transpose() * tr.hidden;
    const double shift = e.maxCoeff();
    tr.pooled(m, c.hidden) = shift + std::log((e.array() - shift).exp().sum());
  }
  tr.segments.action_logits = tr.pooled * params.action_head;
  tr.segments.action_logits.rowwise() += params.action_bias.transpose();
  tr.segments.rel_log_lengths = (tr.pooled * params.length_head).array() + params.length_bias[0];
  return tr;
}

ForwardOutput forward_train(const ModelParams& params, const FeatureSequence& features,
                            int transcript_length) {
  if (transcript_length < 1 || transcript_length > params.config.max_segments) {
    throw ContractError("transcript length " + std::to_string(transcript_length) +
                        " outside [1, M_max]");
  }
  ForwardTrace tr = forward_trace(params, features, transcript_length + 1);
  return {std::move(tr.frame_logits), std::move(tr.segments)};
}

ForwardOutput forward_infer(const ModelParams& params, const FeatureSequence& features) {
  ForwardTrace tr = forward_trace(params, features, params.config.positions());
  const int end = params.config.num_actions;
  int emitted = 0;
  for (int m = 0; m < params.config.max_segments; ++m) {
    Eigen::Index best = 0;
    tr.segments.action_logits.row(m).maxCoeff(&best);
    if (m > 0 && best == end) break;
    ++emitted;
  }
  ForwardOutput out;
  out.frame_logits = std::move(tr.frame_logits);
  out.segments.action_logits = tr.segments.action_logits.topRows(emitted);
  out.segments.rel_log_lengths = tr.segments.rel_log_lengths.head(emitted);
  return out;
}

ModelParams backward(const ModelParams& params, const FeatureSequence& features, const ForwardTrace& tr,
                     const Matrix& grad_frame_logits, const Matrix& grad_action_logits,
                     const Vector& grad_rel_log_lengths) {
  const ModelConfig& c = params.config;
  const int frames = features.frame_count();
  const int positions = static_cast<int>(tr.pooled.rows());
  if (grad_action_logits.rows() != positions || grad_rel_log_lengths.size() != positions ||
      grad_frame_logits.rows() != frames) {
    throw ContractError("backward: gradient shapes do not match the trace");
  }
  ModelParams g = ModelParams::zeros(c);

  // Heads.
  Matrix dpooled = grad_action_logits * params.action_head.transpose();
  dpooled.noalias() += grad_rel_log_lengths * params.length_head.transpose();
  g.action_head.noalias() = tr.pooled.transpose() * grad_action_logits;
  g.action_bias = grad_action_logits.colwise().sum().transpose();
  g.length_head.noalias() = tr.pooled.transpose() * grad_rel_log_lengths;
  g.length_bias[0] = grad_rel_log_lengths.sum();

  // Attention pooling.
  const double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(c.hidden));
  Matrix dhidden = Matrix::Zero(frames, c.hidden);
  Vector dcount = Vector::Zero(frames);
  for (int m = 0; m < positions; ++m) {
    const Vector dctx = dpooled.row(m).head(c.hidden).transpose();
    const double dlse = dpooled(m, c.hidden);
    const Vector beta = tr.attention.row(m).transpose();
    const Vector e = tr.position.row(m).transpose();

    Vector de = dlse * softmax(e);
    const Vector dbeta = tr.hidden * dctx;
    dhidden.noalias() += beta * dctx.transpose();
    const Vector ds = beta.array() * (dbeta.array() - beta.dot(dbeta));
    de += ds;
    g.segment_queries.row(m) = (ds.transpose() * tr.hidden) * inv_sqrt_h;
    dhidden.noalias() += ds * params.segment_queries.row(m) * inv_sqrt_h;
    dcount.array() += de.array() * (-2.0 * c.position_sharpness) * (tr.count.array() - static_cast<double>(m));
  }

  // Boundary count.
  Vector dboundary = Vector::Zero(frames);
  double running = 0.0;
  for (int t = frames - 1; t >= 1; --t) {
    running += dcount[t];
    dboundary[t] = running;
  }
  Matrix dsharp = Matrix::Zero(frames, c.num_actions);
  for (int t = 1; t < frames; ++t) {
    if (dboundary[t] == 0.0) continue;
    for (int n = 0; n < c.num_actions; ++n) {
      const double diff = tr.sharpened(t, n) - tr.sharpened(t - 1, n);
      const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      dsharp(t, n) += 0.5 * dboundary[t] * sgn;
      dsharp(t - 1, n) -= 0.5 * dboundary[t] * sgn;
    }
  }
  Matrix dframe = grad_frame_logits;
  const int window = c.boundary_window;
  const int whalf = window / 2;
  const double scale = c.boundary_temperature / window;
  for (int t = 0; t < frames; ++t) {
    const Vector q = tr.sharpened.row(t).transpose();
    const Vector dq = dsharp.row(t).transpose();
    const Vector dacc = scale * (q.array() * (dq.array() - q.dot(dq))).matrix();
    for (int d = -whalf; d <= whalf; ++d) dframe.row(std::clamp(t + d, 0, frames - 1)) += dacc.transpose();
  }

  // Frame head and embedding.
  g.frame_head.noalias() = tr.hidden.transpose() * dframe;
  g.frame_bias = dframe.colwise().sum().transpose();
  dhidden.noalias() += dframe * params.frame_head.transpose();
  const Matrix dpre = dhidden.array() * (1.0 - tr.hidden.array().square());
  g.embed_bias = dpre.colwise().sum().transpose();
  const Matrix& x = features.frames();
  const int half = c.kernel_width / 2;
  for (int k = 0; k < c.kernel_width; ++k) {
    const int offset = k - half;
    const int dst0 = std::max(0, -offset);
    const int dst1 = std::min(frames, frames - offset);
    if (dst1 <= dst0) continue;
    g.embed[static_cast<std::size_t>(k)].noalias() =
        x.middleRows(dst0 + offset, dst1 - dst0).transpose() * dpre.middleRows(dst0, dst1 - dst0);
  }
  return g;
}

ParamLoss loss_and_gradient(const ModelParams& params, const FeatureSequence& features,
                            const Transcript& transcript, const LossWeights& weights) {
  const int segs = transcript.size();
  if (segs < 1 || segs > params.config.max_segments) {
    throw ContractError("transcript length outside [1, M_max]");
  }
  const ForwardTrace tr = forward_trace(params, features, segs + 1);
  ParamLoss out;
  out.loss = training_loss(tr.frame_logits, tr.segments, transcript, weights);
  const LossResult& total = out.loss.total;
  out.grad = backward(params, features, tr, total.grad_frame_logits, total.grad_action_logits,
                      total.grad_rel_log_lengths);
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ContractError("learning_rate must be positive");
  if (!(weight_decay >= 0.0)) throw ContractError("weight_decay must be nonnegative");
  if (epochs < 0) throw ContractError("epochs must be nonnegative");
  if (!(reg_width > 0.0)) throw ContractError("reg_width must be positive");
  if (!(clip_norm >= 0.0)) throw ContractError("clip_norm must be nonnegative");
}

ModelConfig model_config_for(const Dataset& dataset, ModelConfig base) {
  base.feature_dim = dataset.feature_dim;
  base.num_actions = dataset.num_classes;
  int longest = 1;
  for (const auto& v : dataset.videos) longest = std::max(longest, v.transcript.size());
  base.max_segments = longest;
  return base;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config, ModelParams initial) {
  config.validate();
  if (!validate_dataset(dataset).empty()) throw DataError("training dataset failed validation");
  if (dataset.videos.empty()) throw DataError("training dataset is empty");

  TrainResult result;
  result.params = std::move(initial);
  ModelParams& p = result.params;
  const LossWeights weights{config.alpha, config.reg_width, kDefaultTemplateSize};

  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(dataset.videos.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.epoch = epoch;
    for (std::size_t idx : order) {
      const Video& v = dataset.videos[idx];
      ParamLoss pl;
      try {
        pl = loss_and_gradient(p, v.features, v.transcript, weights);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at step " + std::to_string(step) + ": " + e.what());
      }
      if (!std::isfinite(pl.loss.total.value)) {
        throw NumericError("training diverged at step " + std::to_string(step));
      }
      double sq = 0.0;
      pl.grad.for_each_block([&](std::span<const double> b) {
        for (double v2 : b) sq += v2 * v2;
      });
      const double norm = std::sqrt(sq);
      const double clip = (config.clip_norm > 0.0 && norm > config.clip_norm) ? config.clip_norm / norm : 1.0;

      std::vector<std::span<double>> grads;
      pl.grad.for_each_block([&](std::span<double> b) { grads.push_back(b); });
      std::size_t block = 0;
      p.for_each_block([&](std::span<double> w) {
        const auto& gb = grads[block++];
        for (std::size_t i = 0; i < w.size(); ++i) {
          w[i] -= config.learning_rate * (clip * gb[i] + config.weight_decay * w[i]);
        }
      });

      stats.total += pl.loss.total.value;
      stats.mucon += pl.loss.mucon;
      stats.transcript += pl.loss.transcript;
      stats.length += pl.loss.length;
      ++step;
    }
    const double n = static_cast<double>(dataset.videos.size());
    stats.total /= n;
    stats.mucon /= n;
    stats.transcript /= n;
    stats.length /= n;
    result.trace.push_back(stats);
  }
  return result;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config, const ModelConfig& model) {
  return train(dataset, config, init_params(model, config.seed));
}

std::string encode_checkpoint(const ModelParams& params) {
  const ModelConfig& c = params.config;
  std::string out(kCheckpointMagic);
  put_u32(out, kCheckpointVersion);
  for (int v : {c.feature_dim, c.hidden, c.num_actions, c.max_segments, c.kernel_width, c.boundary_window}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  put_f64(out, c.position_sharpness);
  put_f64(out, c.boundary_temperature);
  put_u32(out, static_cast<std::uint32_t>(params.parameter_count()));
  params.for_each_block([&](std::span<const double> b) {
    for (double v : b) put_f64(out, v);
  });
  return out;
}

ModelParams decode_checkpoint(std::string_view bytes) {
  ByteReader in(bytes);
  if (in.take(kCheckpointMagic.size()) != kCheckpointMagic) throw DataError("not a checkpoint file");
  if (in.u32() != kCheckpointVersion) throw DataError("unsupported checkpoint version");
  ModelConfig c;
  c.feature_dim = static_cast<int>(in.u32());
  c.hidden = static_cast<int>(in.u32());
  c.num_actions = static_cast<int>(in.u32());
  c.max_segments = static_cast<int>(in.u32());
  c.kernel_width = static_cast<int>(in.u32());
  c.boundary_window = static_cast<int>(in.u32());
  c.position_sharpness = in.f64();
  c.boundary_temperature = in.f64();
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  ModelParams p = ModelParams::zeros(c);
  if (in.u32() != p.parameter_count()) throw DataError("checkpoint parameter count mismatch");
  p.for_each_block([&](std::span<double> b) {
    for (double& v : b) v = in.f64();
  });
  if (in.remaining() != 0) throw DataError("trailing bytes in checkpoint");
  return p;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  atomic_write(path, encode_checkpoint(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace mucon
