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

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mucon {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Action ids are dense in [0, N). Id N is the end symbol of the segment branch.
using ActionId = int;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (shapes, ranges, sizes).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Input data could not be read or is malformed.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, degenerate lengths, divergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// No feasible assignment exists (e.g. more segments than frames).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// T x D per-frame features. Validated on construction and immutable afterwards.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  explicit FeatureSequence(Matrix frames);

  const Matrix& frames() const { return frames_; }
  int frame_count() const { return static_cast<int>(frames_.rows()); }
  int dim() const { return static_cast<int>(frames_.cols()); }

 private:
  Matrix frames_;
};

struct Transcript {
  std::vector<ActionId> actions;

  int size() const { return static_cast<int>(actions.size()); }
  bool operator==(const Transcript&) const = default;
};

struct FrameLabeling {
  std::vector<ActionId> labels;

  int size() const { return static_cast<int>(labels.size()); }
  bool operator==(const FrameLabeling&) const = default;
};

struct Segment {
  ActionId action = 0;
  int length = 0;

  bool operator==(const Segment&) const = default;
};

struct Segmentation {
  std::vector<Segment> segments;

  int total_frames() const;
  Transcript transcript() const;
  std::vector<int> lengths() const;
  bool operator==(const Segmentation&) const = default;
};

/// Y branch output: T x N unnormalized class scores.
struct FrameLogits {
  Matrix scores;

  int frame_count() const { return static_cast<int>(scores.rows()); }
  int num_actions() const { return static_cast<int>(scores.cols()); }
};

/// S branch output: per-segment logits over N actions plus the end symbol,
/// and relative log lengths.
struct SegmentPrediction {
  Matrix action_logits;  // M x (N + 1)
  Vector rel_log_lengths;  // M

  int segment_count() const { return static_cast<int>(rel_log_lengths.size()); }
  int num_actions() const { return static_cast<int>(action_logits.cols()) - 1; }
  ActionId end_symbol() const { return num_actions(); }
};

/// M x T soft masks with entries in [0, 1].
struct MaskSet {
  Matrix masks;

  int segment_count() const { return static_cast<int>(masks.rows()); }
  int frame_count() const { return static_cast<int>(masks.cols()); }
};

struct Video {
  std::string id;
  FeatureSequence features;
  Transcript transcript;
  std::optional<FrameLabeling> labels;
};

struct Dataset {
  int num_classes = 0;
  int feature_dim = 0;
  std::vector<Video> videos;
};

struct Violation {
  std::size_t item = 0;
  std::string message;

  bool operator==(const Violation&) const = default;
};

/// Checks every core invariant; an empty result means the dataset is valid.
std::vector<Violation> validate_dataset(const Dataset& dataset);

/// Run-length encoding of a frame labeling.
Segmentation labels_to_segments(const FrameLabeling& labels);

FrameLabeling segments_to_labels(const Segmentation& segmentation);

/// Throws ContractError unless every length is >= 1 and the lengths sum to `frames`.
void check_segmentation(const Segmentation& segmentation, int frames);

/// Distinct transcripts in first-occurrence order.
std::vector<Transcript> distinct_transcripts(const Dataset& dataset);

}  // namespace mucon
