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

#include "mucon/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include <json.hpp>

namespace mucon {

double mof(const FrameLabeling& pred, const FrameLabeling& gt) {
  if (pred.size() != gt.size()) throw ContractError("mof: labelings differ in length");
  if (gt.size() == 0) throw ContractError("mof: empty labeling");
  int correct = 0;
  for (std::size_t t = 0; t < gt.labels.size(); ++t) correct += pred.labels[t] == gt.labels[t];
  return static_cast<double>(correct) / gt.size();
}

double iod(const Segmentation& pred, const Segmentation& gt, const std::set<ActionId>& excluded) {
  if (pred.total_frames() != gt.total_frames()) throw ContractError("iod: segmentations span different T");
  double total = 0.0;
  int counted = 0;
  int g_start = 0;
  for (const auto& g : gt.segments) {
    const int g_end = g_start + g.length;
    if (!excluded.contains(g.action)) {
      int best_overlap = 0;
      int best_length = 1;
      int p_start = 0;
      for (const auto& p : pred.segments) {
        const int p_end = p_start + p.length;
        const int overlap = std::max(0, std::min(g_end, p_end) - std::max(g_start, p_start));
        if (p.action == g.action && overlap > best_overlap) {
          best_overlap = overlap;
          best_length = p.length;
        }
        p_start = p_end;
      }
      total += static_cast<double>(best_overlap) / best_length;
      ++counted;
    }
    g_start = g_end;
  }
  return counted == 0 ? 0.0 : total / counted;
}

int levenshtein(const Transcript& a, const Transcript& b) {
  std::vector<int> row(b.actions.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.actions.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.actions.size(); ++j) {
      const int up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a.actions[i - 1] != b.actions[j - 1] ? 1 : 0)});
      diag = up;
    }
  }
  return row.back();
}

double matching_score(const Transcript& pred, const Transcript& gt) {
  const int longest = std::max(pred.size(), gt.size());
  if (pred.size() == 0 || gt.size() == 0) throw ContractError("matching_score: empty transcript");
  return 1.0 - static_cast<double>(levenshtein(pred, gt)) / longest;
}

EvalReport evaluate(const std::vector<EvalItem>& items, const std::set<ActionId>& excluded) {
  if (items.empty()) throw ContractError("nothing to evaluate");
  EvalReport r;
  long correct = 0;
  long frames = 0;
  for (const auto& item : items) {
    VideoMetrics v;
    v.id = item.id;
    v.frames = item.ground_truth.total_frames();
    const FrameLabeling pl = segments_to_labels(item.prediction);
    const FrameLabeling gl = segments_to_labels(item.ground_truth);
    v.mof = mof(pl, gl);
    v.iod = iod(item.prediction, item.ground_truth, excluded);
    v.matching_score = matching_score(item.prediction.transcript(), item.ground_truth.transcript());
    for (std::size_t t = 0; t < gl.labels.size(); ++t) correct += pl.labels[t] == gl.labels[t];
    frames += v.frames;
    r.mean_video_mof += v.mof;
    r.iod += v.iod;
    r.matching_score += v.matching_score;
    r.videos.push_back(std::move(v));
  }
  const double n = static_cast<double>(items.size());
  r.mof = static_cast<double>(correct) / static_cast<double>(frames);
  r.mean_video_mof /= n;
  r.iod /= n;
  r.matching_score /= n;
  return r;
}

std::string report_csv(const EvalReport& report) {
  std::string out = "video_id,frames,mof,iod,matching_score\n";
  char buf[256];
  for (const auto& v : report.videos) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f,%.6f\n", v.id.c_str(), v.frames, v.mof, v.iod,
                  v.matching_score);
    out += buf;
  }
  int frames = 0;
  for (const auto& v : report.videos) frames += v.frames;
  std::snprintf(buf, sizeof buf, "ALL,%d,%.6f,%.6f,%.6f\n", frames, report.mof, report.iod,
                report.matching_score);
  out += buf;
  return out;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json j = {{"mof", report.mof},
                      {"mean_video_mof", report.mean_video_mof},
                      {"iod", report.iod},
                      {"matching_score", report.matching_score},
                      {"videos", nlohmann::json::array()}};
  for (const auto& v : report.videos) {
    j["videos"].push_back(
        {{"id", v.id}, {"frames", v.frames}, {"mof", v.mof}, {"iod", v.iod}, {"matching_score", v.matching_score}});
  }
  return j.dump(2) + "\n";
}

}  // namespace mucon
