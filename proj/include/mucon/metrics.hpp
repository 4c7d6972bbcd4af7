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

#include <set>
#include <string>
#include <vector>

#include "mucon/core.hpp"

namespace mucon {

/// Fraction of frames with equal labels.
double mof(const FrameLabeling& pred, const FrameLabeling& gt);

/// Intersection over detection. For every ground-truth segment g, the
/// same-label predicted segment with the largest overlap p scores |g & p| / |p|
/// (0 without one); the result is the mean over ground-truth segments.
/// Ground-truth segments whose action is in `excluded` are skipped.
double iod(const Segmentation& pred, const Segmentation& gt, const std::set<ActionId>& excluded = {});

int levenshtein(const Transcript& a, const Transcript& b);

/// 1 - levenshtein / max(|pred|, |gt|).
double matching_score(const Transcript& pred, const Transcript& gt);

struct VideoMetrics {
  std::string id;
  int frames = 0;
  double mof = 0.0;
  double iod = 0.0;
  double matching_score = 0.0;
};

struct EvalReport {
  double mof = 0.0;             // pooled over all frames
  double mean_video_mof = 0.0;  // unweighted mean over videos
  double iod = 0.0;
  double matching_score = 0.0;
  std::vector<VideoMetrics> videos;
};

struct EvalItem {
  std::string id;
  Segmentation prediction;
  Segmentation ground_truth;
};

EvalReport evaluate(const std::vector<EvalItem>& items, const std::set<ActionId>& excluded = {});

/// CSV with header `video_id,frames,mof,iod,matching_score` and a final `ALL` row.
std::string report_csv(const EvalReport& report);

/// Single JSON object with aggregates and a per-video array.
std::string report_json(const EvalReport& report);

}  // namespace mucon
