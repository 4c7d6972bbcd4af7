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

#include "mucon/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

namespace mucon {

void SynthConfig::validate() const {
  if (num_classes < 1 || feature_dim < 1 || num_videos < 0) {
    throw ContractError("synth: num_classes, feature_dim must be positive and num_videos nonnegative");
  }
  if (min_actions < 1 || max_actions < min_actions) throw ContractError("synth: invalid action count range");
  if (min_length < 1 || max_length < min_length) throw ContractError("synth: invalid segment length range");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ContractError("synth: noise_sigma must be >= 0");
  if (!allow_repeats && max_actions > 1 && num_classes < 2 && !grammar) {
    throw ContractError("synth: transcripts without repeats need at least two classes");
  }
  if (grammar) {
    for (const auto& [from, next] : *grammar) {
      if (from < 0 || from >= num_classes) throw ContractError("synth: grammar action out of range");
      for (ActionId a : next) {
        if (a < 0 || a >= num_classes) throw ContractError("synth: grammar successor out of range");
      }
    }
  }
}

namespace {

ActionId next_action(const SynthConfig& c, ActionId prev, std::mt19937_64& rng) {
  std::vector<ActionId> options;
  if (c.grammar && c.grammar->contains(prev)) {
    options = c.grammar->at(prev);
  } else {
    options.resize(static_cast<std::size_t>(c.num_classes));
    for (int a = 0; a < c.num_classes; ++a) options[static_cast<std::size_t>(a)] = a;
  }
  if (!c.allow_repeats) std::erase(options, prev);
  if (options.empty()) throw ContractError("synth: grammar leaves no successor for action " + std::to_string(prev));
  std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
  return options[pick(rng)];
}

}  // namespace

Dataset generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  Matrix prototypes(config.num_classes, config.feature_dim);
  for (Eigen::Index i = 0; i < prototypes.size(); ++i) prototypes.data()[i] = unit(rng);

  Dataset ds;
  ds.num_classes = config.num_classes;
  ds.feature_dim = config.feature_dim;
  std::uniform_int_distribution<int> count(config.min_actions, config.max_actions);
  std::uniform_int_distribution<int> length(config.min_length, config.max_length);
  std::uniform_int_distribution<int> first(0, config.num_classes - 1);
  for (int v = 0; v < config.num_videos; ++v) {
    Video video;
    char id[32];
    std::snprintf(id, sizeof id, "video_%04d", v);
    video.id = id;
    const int actions = count(rng);
    video.transcript.actions.push_back(first(rng));
    while (video.transcript.size() < actions) {
      video.transcript.actions.push_back(next_action(config, video.transcript.actions.back(), rng));
    }
    Segmentation seg;
    for (ActionId a : video.transcript.actions) seg.segments.push_back({a, length(rng)});
    FrameLabeling labels = segments_to_labels(seg);
    Matrix x(labels.size(), config.feature_dim);
    for (int t = 0; t < labels.size(); ++t) {
      for (int d = 0; d < config.feature_dim; ++d) {
        const double value = prototypes(labels.labels[static_cast<std::size_t>(t)], d) + config.noise_sigma * unit(rng);
        x(t, d) = static_cast<float>(value);
      }
    }
    video.features = FeatureSequence(std::move(x));
    video.labels = std::move(labels);
    ds.videos.push_back(std::move(video));
  }
  return ds;
}

Split holdout_transcripts(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw SplitError("holdout fraction must lie in [0, 1)");
  Split split;
  split.train.num_classes = split.test.num_classes = dataset.num_classes;
  split.train.feature_dim = split.test.feature_dim = dataset.feature_dim;

  std::vector<Transcript> distinct = distinct_transcripts(dataset);
  const auto n_test = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(distinct.size())));
  if (fraction > 0.0 && (n_test == 0 || n_test >= distinct.size())) {
    throw SplitError("cannot hold out " + std::to_string(fraction) + " of " + std::to_string(distinct.size()) +
                     " distinct transcripts and keep both splits nonempty");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(distinct.begin(), distinct.end(), rng);
  std::set<std::vector<ActionId>> held;
  for (std::size_t i = 0; i < n_test; ++i) held.insert(distinct[i].actions);

  for (const auto& v : dataset.videos) {
    (held.contains(v.transcript.actions) ? split.test : split.train).videos.push_back(v);
  }
  return split;
}

}  // namespace mucon
