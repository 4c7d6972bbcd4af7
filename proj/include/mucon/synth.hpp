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

// Synthetic weakly labelled videos: every action has a Gaussian prototype
// feature vector, frames are prototype plus isotropic noise.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "mucon/core.hpp"

namespace mucon {

class SplitError : public Error {
 public:
  using Error::Error;
};

struct SynthConfig {
  int num_classes = 6;
  int feature_dim = 16;
  int num_videos = 60;
  int min_actions = 3;
  int max_actions = 6;
  int min_length = 10;
  int max_length = 30;
  double noise_sigma = 0.5;
  bool allow_repeats = false;
  /// Allowed successors per action; absent means any action.
  std::optional<std::map<ActionId, std::vector<ActionId>>> grammar;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Features are rounded to float32 so the in-memory dataset equals its
/// on-disk form.
Dataset generate(const SynthConfig& config);

struct Split {
  Dataset train;
  Dataset test;
};

/// Moves round(fraction * #distinct transcripts) transcripts, chosen by a
/// seeded shuffle, and all their videos into the test split.
Split holdout_transcripts(const Dataset& dataset, double fraction, std::uint64_t seed = 0);

}  // namespace mucon
