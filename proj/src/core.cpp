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

#include "mucon/core.hpp"

#include <algorithm>
#include <set>

namespace mucon {

FeatureSequence::FeatureSequence(Matrix frames) : frames_(std::move(frames)) {
  if (frames_.rows() < 1 || frames_.cols() < 1) {
    throw ContractError("feature sequence needs T >= 1 and D >= 1");
  }
  if (!frames_.allFinite()) {
    throw NumericError("feature sequence contains non-finite entries");
  }
}

int Segmentation::total_frames() const {
  int total = 0;
  for (const auto& s : segments) total += s.length;
  return total;
}

Transcript Segmentation::transcript() const {
  Transcript t;
  t.actions.reserve(segments.size());
  for (const auto& s : segments) t.actions.push_back(s.action);
  return t;
}

std::vector<int> Segmentation::lengths() const {
  std::vector<int> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(s.length);
  return out;
}

std::vector<Violation> validate_dataset(const Dataset& dataset) {
  std::vector<Violation> report;
  const int n = dataset.num_classes;
  for (std::size_t i = 0; i < dataset.videos.size(); ++i) {
    const Video& v = dataset.videos[i];
    const int frames = v.features.frame_count();
    if (frames < 1) {
      report.push_back({i, "empty feature sequence"});
      continue;
    }
    if (dataset.feature_dim > 0 && v.features.dim() != dataset.feature_dim) {
      report.push_back({i, "feature dimension mismatch"});
    }
    if (v.transcript.actions.empty()) {
      report.push_back({i, "empty transcript"});
    }
    for (ActionId a : v.transcript.actions) {
      if (a < 0 || a >= n) {
        report.push_back({i, "action id out of range"});
        break;
      }
    }
    if (v.labels) {
      if (v.labels->size() != frames) {
        report.push_back({i, "label length != T"});
      }
      for (ActionId a : v.labels->labels) {
        if (a < 0 || a >= n) {
          report.push_back({i, "label id out of range"});
          break;
        }
      }
    }
  }
  return report;
}

Segmentation labels_to_segments(const FrameLabeling& labels) {
  Segmentation seg;
  for (ActionId a : labels.labels) {
    if (!seg.segments.empty() && seg.segments.back().action == a) {
      ++seg.segments.back().length;
    } else {
      seg.segments.push_back({a, 1});
    }
  }
  return seg;
}

FrameLabeling segments_to_labels(const Segmentation& segmentation) {
  FrameLabeling out;
  out.labels.reserve(static_cast<std::size_t>(std::max(0, segmentation.total_frames())));
  for (const auto& s : segmentation.segments) {
    out.labels.insert(out.labels.end(), static_cast<std::size_t>(s.length), s.action);
  }
  return out;
}

void check_segmentation(const Segmentation& segmentation, int frames) {
  for (const auto& s : segmentation.segments) {
    if (s.length < 1) throw ContractError("segment length must be >= 1");
  }
  if (segmentation.total_frames() != frames) {
    throw ContractError("segment lengths sum to " + std::to_string(segmentation.total_frames()) +
                        ", expected " + std::to_string(frames));
  }
}

std::vector<Transcript> distinct_transcripts(const Dataset& dataset) {
  std::vector<Transcript> out;
  std::set<std::vector<ActionId>> seen;
  for (const auto& v : dataset.videos) {
    if (seen.insert(v.transcript.actions).second) out.push_back(v.transcript);
  }
  return out;
}

}  // namespace mucon
