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

#include "mucon/pipeline.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mucon/io.hpp"
#include "mucon/maskgen.hpp"

namespace mucon {

namespace {

constexpr std::pair<InferMode, std::string_view> kModeNames[] = {
    {InferMode::MuconFull, "mucon-full"}, {InferMode::MuconS, "mucon-s"}, {InferMode::MuconY, "mucon-y"},
    {InferMode::Average, "average"},      {InferMode::AlignAll, "align-all"},
};

}  // namespace

std::string_view to_string(InferMode mode) {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) return name;
  }
  return "unknown";
}

InferMode parse_infer_mode(std::string_view name) {
  for (const auto& [m, n] : kModeNames) {
    if (n == name) return m;
  }
  throw ContractError("unknown inference mode '" + std::string(name) + "'");
}

Transcript predicted_transcript(const SegmentPrediction& prediction) {
  Transcript tr;
  const int n = prediction.num_actions();
  for (int m = 0; m < prediction.segment_count(); ++m) {
    Eigen::Index best = 0;
    prediction.action_logits.row(m).head(n).maxCoeff(&best);
    tr.actions.push_back(static_cast<ActionId>(best));
  }
  return tr;
}

DecodeResult decode_output(const ForwardOutput& output, InferMode mode, std::span<const Transcript> candidates,
                           int threads) {
  const int frames = output.frame_logits.frame_count();
  switch (mode) {
    case InferMode::MuconFull: {
      SegmentPrediction pred = output.segments;
      // More predicted segments than frames cannot be aligned; keep the first T.
      if (pred.segment_count() > frames) {
        pred.action_logits = pred.action_logits.topRows(frames).eval();
        pred.rel_log_lengths = pred.rel_log_lengths.head(frames).eval();
      }
      const Localization loc = normalize_lengths(pred.rel_log_lengths, frames);
      return dp_fuse(output.frame_logits, predicted_transcript(pred), loc.abs_lengths);
    }
    case InferMode::MuconS:
      return mucon_s_only(output.segments, frames);
    case InferMode::MuconY:
      return framewise_decode(output.frame_logits);
    case InferMode::Average:
      return average_fuse(output.frame_logits, output.segments,
                          normalize_lengths(output.segments.rel_log_lengths, frames));
    case InferMode::AlignAll:
      return align_all_transcripts(output.frame_logits, candidates, LengthPrior::Uniform, threads).result;
  }
  throw ContractError("unhandled inference mode");
}

Prediction predict(const ModelParams& params, const Video& video, InferMode mode,
                   std::span<const Transcript> candidates, int threads) {
  const ForwardOutput out = forward_infer(params, video.features);
  DecodeResult r = decode_output(out, mode, candidates, threads);
  Prediction p;
  p.id = video.id;
  p.mode = mode;
  p.transcript = r.segmentation.transcript();
  p.segmentation = std::move(r.segmentation);
  p.log_score = r.log_score;
  p.decode_seconds = r.decode_seconds;
  p.candidates_evaluated = r.candidates_evaluated;
  return p;
}

std::vector<Prediction> predict_all(const ModelParams& params, const Dataset& dataset, InferMode mode,
                                    std::span<const Transcript> candidates, int threads) {
  if (dataset.feature_dim != params.config.feature_dim) {
    throw DataError("dataset feature_dim " + std::to_string(dataset.feature_dim) + " does not match checkpoint " +
                    std::to_string(params.config.feature_dim));
  }
  std::vector<Prediction> out;
  out.reserve(dataset.videos.size());
  for (const auto& v : dataset.videos) out.push_back(predict(params, v, mode, candidates, threads));
  return out;
}

std::string encode_predictions(const std::vector<Prediction>& predictions) {
  std::string out;
  for (const auto& p : predictions) {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : p.segmentation.segments) segs.push_back({s.action, s.length});
    nlohmann::json j = {{"id", p.id},
                        {"mode", std::string(to_string(p.mode))},
                        {"segments", segs},
                        {"transcript", p.transcript.actions},
                        {"log_score", p.log_score},
                        {"decode_seconds", p.decode_seconds},
                        {"candidates_evaluated", p.candidates_evaluated}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Prediction> decode_predictions(std::string_view text) {
  std::vector<Prediction> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Prediction p;
      p.id = j.at("id").get<std::string>();
      p.mode = parse_infer_mode(j.at("mode").get<std::string>());
      for (const auto& s : j.at("segments")) {
        p.segmentation.segments.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
      }
      p.transcript.actions = j.at("transcript").get<std::vector<ActionId>>();
      p.log_score = j.value("log_score", 0.0);
      p.decode_seconds = j.value("decode_seconds", 0.0);
      p.candidates_evaluated = j.value("candidates_evaluated", 1);
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("predictions line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ContractError& e) {
      throw DataError("predictions line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  return decode_predictions(read_file(path));
}

std::vector<EvalItem> pair_with_ground_truth(const std::vector<Prediction>& predictions, const Dataset& dataset) {
  if (predictions.empty()) throw DataError("prediction file contains no records");
  std::map<std::string, const Video*> by_id;
  for (const auto& v : dataset.videos) by_id[v.id] = &v;
  std::vector<EvalItem> items;
  for (const auto& p : predictions) {
    const auto it = by_id.find(p.id);
    if (it == by_id.end()) throw DataError("prediction for unknown video '" + p.id + "'");
    const Video& v = *it->second;
    if (!v.labels) throw DataError("video '" + p.id + "' has no frame labels");
    try {
      check_segmentation(p.segmentation, v.features.frame_count());
    } catch (const ContractError& e) {
      throw DataError("prediction for '" + p.id + "': " + e.what());
    }
    items.push_back({p.id, p.segmentation, labels_to_segments(*v.labels)});
  }
  return items;
}

MaskSet inference_masks(const ForwardOutput& output, int frames) {
  const Localization loc = normalize_lengths(output.segments.rel_log_lengths, frames);
  const std::vector<AffineParams> params = affine_params(loc, frames);
  return sample_masks(params, frames);
}

std::string masks_csv(const std::vector<std::pair<std::string, MaskSet>>& masks) {
  std::string out = "video_id,segment,frame,value\n";
  char buf[64];
  for (const auto& [id, set] : masks) {
    for (int m = 0; m < set.segment_count(); ++m) {
      for (int t = 0; t < set.frame_count(); ++t) {
        std::snprintf(buf, sizeof buf, ",%d,%d,%.9g\n", m, t, set.masks(m, t));
        out += id;
        out += buf;
      }
    }
  }
  return out;
}

}  // namespace mucon
