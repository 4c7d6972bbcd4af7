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

#include "mucon/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <thread>

#include <json.hpp>

#include "mucon/decode.hpp"
#include "mucon/pipeline.hpp"

namespace mucon {

void BenchConfig::validate() const {
  if (counts.empty()) throw ContractError("bench: no candidate counts");
  for (int c : counts) {
    if (c < 1) throw ContractError("bench: candidate counts must be >= 1");
  }
  if (repetitions < 5) throw ContractError("bench: at least 5 repetitions are required");
  if (threads < 0 || max_videos < 0) throw ContractError("bench: threads and max_videos must be >= 0");
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("fit_line needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ContractError("fit_line: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

double BenchSummary::align_median_at(int count) const {
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == count) return align_all_median[i];
  }
  throw ContractError("bench summary has no count " + std::to_string(count));
}

double BenchSummary::mucon_full_overall_median() const { return median(mucon_full_median); }

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

BenchReport run_bench(const ModelParams& params, const Dataset& dataset, std::span<const Transcript> pool,
                      const BenchConfig& config) {
  config.validate();
  const int needed = *std::max_element(config.counts.begin(), config.counts.end());
  if (static_cast<int>(pool.size()) < needed) {
    throw ContractError("bench: candidate pool has " + std::to_string(pool.size()) + " transcripts, " +
                        std::to_string(needed) + " requested");
  }
  std::size_t videos = dataset.videos.size();
  if (config.max_videos > 0) videos = std::min(videos, static_cast<std::size_t>(config.max_videos));
  if (videos == 0) throw DataError("bench: dataset is empty");

  std::vector<ForwardOutput> outputs;
  for (std::size_t i = 0; i < videos; ++i) outputs.push_back(forward_infer(params, dataset.videos[i].features));

  int threads = 1;
  if (config.parallel) {
    threads = config.threads > 0 ? config.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }

  const auto time_full = [&] {
    const auto start = Clock::now();
    for (const auto& out : outputs) decode_output(out, InferMode::MuconFull);
    return elapsed(start) / static_cast<double>(videos);
  };
  const auto time_align = [&](int count) {
    const auto subset = pool.first(static_cast<std::size_t>(count));
    const auto start = Clock::now();
    for (const auto& out : outputs) align_all_transcripts(out.frame_logits, subset, LengthPrior::Uniform, threads);
    return elapsed(start) / static_cast<double>(videos);
  };

  // Warm-up pass, discarded.
  for (int c : config.counts) {
    time_align(c);
    time_full();
  }

  BenchReport report;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    for (int c : config.counts) {
      BenchRow row;
      row.candidates = c;
      row.repetition = rep;
      row.align_all_seconds = time_align(c);
      row.mucon_full_seconds = time_full();
      report.rows.push_back(row);
    }
  }

  BenchSummary& s = report.summary;
  s.counts = config.counts;
  s.parallel = threads > 1;
  s.threads = threads;
  s.videos = static_cast<int>(videos);
  s.repetitions = config.repetitions;
  std::vector<double> xs;
  for (int c : config.counts) {
    std::vector<double> a, f;
    for (const auto& r : report.rows) {
      if (r.candidates == c) {
        a.push_back(r.align_all_seconds);
        f.push_back(r.mucon_full_seconds);
      }
    }
    s.align_all_median.push_back(median(a));
    s.mucon_full_median.push_back(median(f));
    xs.push_back(c);
  }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() >= 2) {
    const LinearFit fit = fit_line(xs, s.align_all_median);
    s.slope = fit.slope;
    s.intercept = fit.intercept;
    s.r_squared = fit.r_squared;
  }
  return report;
}

std::string bench_csv(const BenchReport& report) {
  std::string out = "candidates,repetition,align_all_seconds,mucon_full_seconds\n";
  char buf[128];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.9e,%.9e\n", r.candidates, r.repetition, r.align_all_seconds,
                  r.mucon_full_seconds);
    out += buf;
  }
  return out;
}

std::string bench_summary_json(const BenchReport& report) {
  const BenchSummary& s = report.summary;
  nlohmann::json j = {{"counts", s.counts},
                      {"align_all_median_seconds", s.align_all_median},
                      {"mucon_full_median_seconds", s.mucon_full_median},
                      {"mucon_full_overall_median_seconds", s.mucon_full_overall_median()},
                      {"fit", {{"slope", s.slope}, {"intercept", s.intercept}, {"r_squared", s.r_squared}}},
                      {"parallel", s.parallel},
                      {"threads", s.threads},
                      {"videos", s.videos},
                      {"repetitions", s.repetitions},
                      {"clock", "steady_clock"}};
  return j.dump(2) + "\n";
}

}  // namespace mucon
