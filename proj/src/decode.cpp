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

#include "mucon/decode.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <thread>

#include "mucon/losses.hpp"

namespace mucon {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_fusion_inputs(const FrameLogits& frame_logits, const Transcript& transcript,
                         const Vector& poisson_means) {
  const int segs = transcript.size();
  if (segs < 1) throw ContractError("transcript is empty");
  if (poisson_means.size() != segs) throw ContractError("one Poisson mean per segment is required");
  for (Eigen::Index m = 0; m < poisson_means.size(); ++m) {
    if (!(poisson_means[m] > 0.0) || !std::isfinite(poisson_means[m])) {
      throw ContractError("Poisson means must be positive and finite");
    }
  }
  for (ActionId a : transcript.actions) {
    if (a < 0 || a >= frame_logits.num_actions()) throw ContractError("transcript action id out of range");
  }
  if (segs > frame_logits.frame_count()) {
    throw InfeasibleError("transcript has " + std::to_string(segs) + " actions but only " +
                          std::to_string(frame_logits.frame_count()) + " frames");
  }
}

Segmentation make_segmentation(const Transcript& transcript, std::span<const int> lengths) {
  Segmentation seg;
  for (std::size_t m = 0; m < lengths.size(); ++m) seg.segments.push_back({transcript.actions[m], lengths[m]});
  return seg;
}

int argmax_row(const Eigen::Ref<const Vector>& row) {
  Eigen::Index best = 0;
  row.maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace

double poisson_log_pmf(int count, double mean) {
  const double mu = std::max(mean, kMinPoissonMean);
  const double k = static_cast<double>(count);
  return k * std::log(mu) - mu - std::lgamma(k + 1.0);
}

Matrix frame_log_probs(const FrameLogits& frame_logits) {
  Matrix out(frame_logits.frame_count(), frame_logits.num_actions());
  for (int t = 0; t < frame_logits.frame_count(); ++t) {
    out.row(t) = log_softmax(frame_logits.scores.row(t).transpose()).transpose();
  }
  return out;
}

double fusion_objective(const FrameLogits& frame_logits, const Transcript& transcript,
                        const Vector& poisson_means, std::span<const int> lengths) {
  if (static_cast<int>(lengths.size()) != transcript.size()) throw ContractError("one length per action");
  const Matrix logp = frame_log_probs(frame_logits);
  double score = 0.0;
  int t = 0;
  for (std::size_t m = 0; m < lengths.size(); ++m) {
    const ActionId a = transcript.actions[m];
    for (int i = 0; i < lengths[m]; ++i, ++t) score += logp(t, a);
    score += poisson_log_pmf(lengths[m], poisson_means[static_cast<Eigen::Index>(m)]);
  }
  if (t != frame_logits.frame_count()) throw ContractError("lengths do not sum to T");
  return score;
}

DecodeResult dp_fuse(const FrameLogits& frame_logits, const Transcript& transcript,
                     const Vector& poisson_means, const DpOptions& options) {
  const auto start = Clock::now();
  check_fusion_inputs(frame_logits, transcript, poisson_means);
  const int frames = frame_logits.frame_count();
  const int segs = transcript.size();
  const int cap = options.max_segment_length > 0 ? options.max_segment_length : frames;

  const Matrix logp = frame_log_probs(frame_logits);
  // prefix(m, t) = sum_{u < t} log p(u, a_m)
  Matrix prefix(segs, frames + 1);
  for (int m = 0; m < segs; ++m) {
    const ActionId a = transcript.actions[static_cast<std::size_t>(m)];
    prefix(m, 0) = 0.0;
    for (int t = 0; t < frames; ++t) prefix(m, t + 1) = prefix(m, t) + logp(t, a);
  }
  Matrix prior(segs, frames + 1);
  for (int m = 0; m < segs; ++m) {
    for (int l = 1; l <= frames; ++l) prior(m, l) = poisson_log_pmf(l, poisson_means[m]);
  }

  // best(m, t): optimal score of segments m.. covering frames t..T-1.
  Matrix best = Matrix::Constant(segs + 1, frames + 1, kNegInf);
  best(segs, frames) = 0.0;
  for (int m = segs - 1; m >= 0; --m) {
    const int after = segs - m - 1;
    for (int t = m; t <= frames - (segs - m); ++t) {
      double top = kNegInf;
      const int longest = std::min(cap, frames - t - after);
      for (int l = 1; l <= longest; ++l) {
        const double tail = best(m + 1, t + l);
        if (tail == kNegInf) continue;
        const double v = prefix(m, t + l) - prefix(m, t) + prior(m, l) + tail;
        top = std::max(top, v);
      }
      best(m, t) = top;
    }
  }
  if (best(0, 0) == kNegInf) throw InfeasibleError("no segmentation satisfies the length cap");

  // Smallest length at each step that can still finish within the tie band.
  const double target = best(0, 0) - kScoreTieTolerance;
  std::vector<int> lengths;
  double acc = 0.0;
  int t = 0;
  for (int m = 0; m < segs; ++m) {
    const int longest = std::min(cap, frames - t - (segs - m - 1));
    for (int l = 1; l <= longest; ++l) {
      const double tail = best(m + 1, t + l);
      if (tail == kNegInf) continue;
      const double v = prefix(m, t + l) - prefix(m, t) + prior(m, l);
      if (acc + v + tail >= target) {
        lengths.push_back(l);
        acc += v;
        t += l;
        break;
      }
    }
  }
  DecodeResult out;
  out.segmentation = make_segmentation(transcript, lengths);
  out.log_score = acc;
  out.decode_seconds = seconds_since(start);
  return out;
}

DecodeResult brute_force_oracle(const FrameLogits& frame_logits, const Transcript& transcript,
                                const Vector& poisson_means) {
  const auto start = Clock::now();
  const int frames = frame_logits.frame_count();
  const int segs = transcript.size();
  if (frames > kOracleMaxFrames || segs > kOracleMaxSegments) {
    throw ContractError("brute_force_oracle refuses T > 16 or M > 4");
  }
  check_fusion_inputs(frame_logits, transcript, poisson_means);

  std::vector<int> lengths(static_cast<std::size_t>(segs), 1);
  // Every composition in lexicographic order.
  std::vector<std::pair<std::vector<int>, double>> scored;
  const auto visit = [&](auto&& self, int m, int remaining) -> void {
    if (m == segs - 1) {
      lengths[static_cast<std::size_t>(m)] = remaining;
      scored.emplace_back(lengths, fusion_objective(frame_logits, transcript, poisson_means, lengths));
      return;
    }
    for (int l = 1; l <= remaining - (segs - m - 1); ++l) {
      lengths[static_cast<std::size_t>(m)] = l;
      self(self, m + 1, remaining - l);
    }
  };
  visit(visit, 0, frames);
  double top = kNegInf;
  for (const auto& c : scored) top = std::max(top, c.second);
  const auto pick = std::find_if(scored.begin(), scored.end(),
                                 [&](const auto& c) { return c.second >= top - kScoreTieTolerance; });

  DecodeResult out;
  out.segmentation = make_segmentation(transcript, pick->first);
  out.log_score = pick->second;
  out.decode_seconds = seconds_since(start);
  return out;
}

std::vector<int> round_lengths(const Vector& abs_lengths, int frames) {
  const auto segs = static_cast<std::size_t>(abs_lengths.size());
  std::vector<int> out(segs);
  std::vector<double> remainder(segs);
  int used = 0;
  for (std::size_t m = 0; m < segs; ++m) {
    const double v = std::max(0.0, abs_lengths[static_cast<Eigen::Index>(m)]);
    out[m] = static_cast<int>(std::floor(v));
    remainder[m] = v - out[m];
    used += out[m];
  }
  std::vector<std::size_t> order(segs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  int deficit = frames - used;
  for (std::size_t i = 0; deficit > 0 && segs > 0; i = (i + 1) % segs, --deficit) ++out[order[i]];
  // Only reachable when the inputs overshoot T through rounding error.
  for (std::size_t i = segs; deficit < 0 && i-- > 0;) {
    const int take = std::min(out[order[i]], -deficit);
    out[order[i]] -= take;
    deficit += take;
  }
  return out;
}

DecodeResult framewise_decode(const FrameLogits& frame_logits) {
  const auto start = Clock::now();
  const Matrix logp = frame_log_probs(frame_logits);
  FrameLabeling labels;
  double score = 0.0;
  for (int t = 0; t < frame_logits.frame_count(); ++t) {
    const int a = argmax_row(logp.row(t).transpose());
    labels.labels.push_back(a);
    score += logp(t, a);
  }
  DecodeResult out;
  out.segmentation = labels_to_segments(labels);
  out.log_score = score;
  out.decode_seconds = seconds_since(start);
  return out;
}

DecodeResult mucon_s_only(const SegmentPrediction& prediction, int frames) {
  const auto start = Clock::now();
  if (prediction.segment_count() < 1) throw ContractError("segment prediction is empty");
  const int n = prediction.num_actions();
  const Localization loc = normalize_lengths(prediction.rel_log_lengths, frames);
  const std::vector<int> lengths = round_lengths(loc.abs_lengths, frames);
  DecodeResult out;
  for (int m = 0; m < prediction.segment_count(); ++m) {
    const Vector logp = log_softmax(prediction.action_logits.row(m).head(n).transpose());
    const int a = argmax_row(logp);
    if (lengths[static_cast<std::size_t>(m)] == 0) continue;
    out.segmentation.segments.push_back({a, lengths[static_cast<std::size_t>(m)]});
    out.log_score += logp[a];
  }
  out.decode_seconds = seconds_since(start);
  return out;
}

DecodeResult average_fuse(const FrameLogits& frame_logits, const SegmentPrediction& prediction,
                          const Localization& loc) {
  const auto start = Clock::now();
  const int frames = frame_logits.frame_count();
  const int n = frame_logits.num_actions();
  if (prediction.segment_count() != loc.segment_count() || prediction.num_actions() != n) {
    throw ContractError("average_fuse: prediction shapes disagree");
  }
  const std::vector<int> spans = round_lengths(loc.abs_lengths, frames);
  FrameLabeling labels;
  double score = 0.0;
  int t = 0;
  for (int m = 0; m < prediction.segment_count(); ++m) {
    const Vector seg = softmax(prediction.action_logits.row(m).head(n).transpose());
    for (int i = 0; i < spans[static_cast<std::size_t>(m)]; ++i, ++t) {
      const Vector p = 0.5 * (softmax(frame_logits.scores.row(t).transpose()) + seg);
      const int a = argmax_row(p);
      labels.labels.push_back(a);
      score += std::log(p[a]);
    }
  }
  DecodeResult out;
  out.segmentation = labels_to_segments(labels);
  out.log_score = score;
  out.decode_seconds = seconds_since(start);
  return out;
}

AlignResult align_all_transcripts(const FrameLogits& frame_logits, std::span<const Transcript> candidates,
                                  LengthPrior prior, int threads) {
  const auto start = Clock::now();
  if (candidates.empty()) throw ContractError("candidate set is empty");
  const int frames = frame_logits.frame_count();

  std::vector<std::optional<DecodeResult>> results(candidates.size());
  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Transcript& c = candidates[i];
      if (c.size() < 1 || c.size() > frames) continue;
      Vector means;
      switch (prior) {
        case LengthPrior::Uniform:
          means = Vector::Constant(c.size(), static_cast<double>(frames) / c.size());
          break;
      }
      results[i] = dp_fuse(frame_logits, c, means);
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || candidates.size() == 1) {
    work(0, candidates.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (candidates.size() + workers - 1) / workers;
    for (std::size_t b = 0; b < candidates.size(); b += chunk) {
      pool.emplace_back(work, b, std::min(candidates.size(), b + chunk));
    }
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i] && (!best || results[i]->log_score > results[*best]->log_score)) best = i;
  }
  if (!best) throw InfeasibleError("every candidate transcript is longer than the video");

  AlignResult out;
  out.best_index = *best;
  out.best = candidates[*best];
  out.result = *results[*best];
  out.result.candidates_evaluated = static_cast<int>(candidates.size());
  out.result.decode_seconds = seconds_since(start);
  return out;
}

}  // namespace mucon
