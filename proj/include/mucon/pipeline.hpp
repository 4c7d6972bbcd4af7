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

// Per-video inference in every decoding mode, plus the prediction record
// format shared by `infer`, `eval` and `bench`.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mucon/core.hpp"
#include "mucon/decode.hpp"
#include "mucon/metrics.hpp"
#include "mucon/model.hpp"

namespace mucon {

enum class InferMode { MuconFull, MuconS, MuconY, Average, AlignAll };

std::string_view to_string(InferMode mode);
InferMode parse_infer_mode(std::string_view name);

/// Transcript read off the segment branch: argmax over real actions per
/// emitted position.
Transcript predicted_transcript(const SegmentPrediction& prediction);

/// Decodes one forward pass. `candidates` is only used by AlignAll.
DecodeResult decode_output(const ForwardOutput& output, InferMode mode,
                           std::span<const Transcript> candidates = {}, int threads = 1);

struct Prediction {
  std::string id;
  InferMode mode = InferMode::MuconFull;
  Segmentation segmentation;
  Transcript transcript;
  double log_score = 0.0;
  double decode_seconds = 0.0;
  int candidates_evaluated = 1;
};

Prediction predict(const ModelParams& params, const Video& video, InferMode mode,
                   std::span<const Transcript> candidates = {}, int threads = 1);

std::vector<Prediction> predict_all(const ModelParams& params, const Dataset& dataset, InferMode mode,
                                    std::span<const Transcript> candidates = {}, int threads = 1);

/// One JSON object per line:
/// {"id","mode","segments":[[action,length],...],"transcript","log_score",
///  "decode_seconds","candidates_evaluated"}.
std::string encode_predictions(const std::vector<Prediction>& predictions);
std::vector<Prediction> decode_predictions(std::string_view text);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

/// Pairs predictions with labelled dataset videos by id. Throws DataError on
/// an empty prediction list, unknown ids, unlabelled videos or length
/// mismatches.
std::vector<EvalItem> pair_with_ground_truth(const std::vector<Prediction>& predictions, const Dataset& dataset);

/// Long-format CSV `video_id,segment,frame,value`.
std::string masks_csv(const std::vector<std::pair<std::string, MaskSet>>& masks);

MaskSet inference_masks(const ForwardOutput& output, int frames);

}  // namespace mucon
