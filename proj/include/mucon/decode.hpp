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

// Inference decoders.
//
// The fusion objective for a transcript a_1..a_M and integer lengths L:
//
//   score(L) = sum_t log softmax(y_t)[a_{m(t)}] + sum_m log Poisson(L_m; mu_m)
//
// where m(t) is the segment containing frame t. Ties between length vectors
// with equal score are broken towards the lexicographically smallest vector.

#pragma once

#include <cstddef>
#include <vector>

#include "mucon/core.hpp"
#include "mucon/maskgen.hpp"

namespace mucon {

struct DecodeResult {
  Segmentation segmentation;
  double log_score = 0.0;
  double decode_seconds = 0.0;
  int candidates_evaluated = 1;
};

/// Poisson means below this are raised to it.
inline constexpr double kMinPoissonMean = 0.5;

/// log(mean^count e^-mean / count!) with the mean floored at kMinPoissonMean.
double poisson_log_pmf(int count, double mean);

/// T x N log-softmax of frame scores.
Matrix frame_log_probs(const FrameLogits& frame_logits);

/// Recomputes the fusion objective for a fixed length vector.
double fusion_objective(const FrameLogits& frame_logits, const Transcript& transcript,
                        const Vector& poisson_means, std::span<const int> lengths);

struct DpOptions {
  /// Longest admissible segment; 0 means unbounded.
  int max_segment_length = 0;
};

/// Scores closer than this count as tied.
inline constexpr double kScoreTieTolerance = 1e-9;

/// Exact maximizer of the fusion objective, O(M T^2). Among lengths scoring
/// within kScoreTieTolerance of the optimum the lexicographically smallest
/// length vector wins; log_score is the score of the returned lengths.
DecodeResult dp_fuse(const FrameLogits& frame_logits, const Transcript& transcript,
                     const Vector& poisson_means, const DpOptions& options = {});

inline constexpr int kOracleMaxFrames = 16;
inline constexpr int kOracleMaxSegments = 4;

/// Exhaustive search over all compositions of T into M positive parts.
/// Refuses (ContractError) beyond kOracleMaxFrames / kOracleMaxSegments.
/// Same tie rule as dp_fuse.
DecodeResult brute_force_oracle(const FrameLogits& frame_logits, const Transcript& transcript,
                                const Vector& poisson_means);

/// Largest-remainder rounding of real lengths to integers summing to `frames`;
/// equal remainders favour the lower index.
std::vector<int> round_lengths(const Vector& abs_lengths, int frames);

/// Framewise argmax of Y, run-length encoded.
DecodeResult framewise_decode(const FrameLogits& frame_logits);

/// Segment branch alone: argmax action per segment with rounded lengths.
/// Segments that round to zero frames are dropped.
DecodeResult mucon_s_only(const SegmentPrediction& prediction, int frames);

/// Per-frame mean of softmax(Y) and the segment distribution covering the frame.
DecodeResult average_fuse(const FrameLogits& frame_logits, const SegmentPrediction& prediction,
                          const Localization& loc);

enum class LengthPrior {
  /// Every segment of an M-action candidate gets Poisson mean T / M.
  Uniform,
};

struct AlignResult {
  std::size_t best_index = 0;
  Transcript best;
  DecodeResult result;
};

/// Aligns every candidate transcript and keeps the best total score; equal
/// scores keep the lower candidate index. `threads` > 1 splits the candidates
/// across worker threads without changing the result.
AlignResult align_all_transcripts(const FrameLogits& frame_logits, std::span<const Transcript> candidates,
                                  LengthPrior prior = LengthPrior::Uniform, int threads = 1);

}  // namespace mucon
