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

// Decode-time benchmark: single-transcript DP fusion against alignment of
// every candidate transcript. Only decoding is timed; the forward pass is
// computed once up front.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "mucon/core.hpp"
#include "mucon/model.hpp"

namespace mucon {

struct BenchConfig {
  std::vector<int> counts{1, 10, 50, 100};
  int repetitions = 5;
  bool parallel = false;
  int threads = 0;     // 0: hardware concurrency, only used when parallel
  int max_videos = 0;  // 0: all videos

  void validate() const;
};

struct BenchRow {
  int candidates = 0;
  int repetition = 0;
  double align_all_seconds = 0.0;   // per video
  double mucon_full_seconds = 0.0;  // per video
};

struct BenchSummary {
  std::vector<int> counts;
  std::vector<double> align_all_median;
  std::vector<double> mucon_full_median;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool parallel = false;
  int threads = 1;
  int videos = 0;
  int repetitions = 0;

  double align_median_at(int count) const;
  double mucon_full_overall_median() const;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  BenchSummary summary;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> values);

/// `pool` must hold at least max(counts) transcripts; align-all at count c
/// uses its first c entries.
BenchReport run_bench(const ModelParams& params, const Dataset& dataset, std::span<const Transcript> pool,
                      const BenchConfig& config);

/// Header `candidates,repetition,align_all_seconds,mucon_full_seconds`, one
/// row per (count, repetition).
std::string bench_csv(const BenchReport& report);
std::string bench_summary_json(const BenchReport& report);

}  // namespace mucon
