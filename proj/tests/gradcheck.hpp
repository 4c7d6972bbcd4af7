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

// Central-difference oracle for the full model gradient. A coordinate is
// skipped when its stencil moves any nondifferentiable quantity across its
// kink: bilinear kernel corners, the length hinge, or the |.| inside the
// boundary score. Kink coordinates the stencil does not move are ignored.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mucon/losses.hpp"
#include "mucon/model.hpp"
#include "test_util.hpp"

namespace mucon::test {

inline double model_loss(const ModelParams& p, const FeatureSequence& x, const Transcript& tr,
                         const LossWeights& w) {
  const ForwardOutput out = forward_train(p, x, tr.size());
  return training_loss(out.frame_logits, out.segments, tr, w).total.value;
}

/// Signed distances to every kink; a sign change means a kink was crossed.
inline std::vector<double> kink_coordinates(const ModelParams& p, const FeatureSequence& x, const Transcript& tr,
                                            const LossWeights& w) {
  const ForwardTrace t = forward_trace(p, x, tr.size() + 1);
  const int frames = x.frame_count();
  const Vector rel = t.segments.rel_log_lengths.head(tr.size());
  std::vector<double> out;
  const auto params = affine_params(normalize_lengths(rel, frames), frames);
  const double j = w.template_size;
  for (const auto& a : params) {
    for (int f = 0; f < frames; ++f) {
      const double idx = template_index(a, f, frames, w.template_size);
      for (double k : {-1.0, 0.0, j - 1.0, j}) out.push_back(idx - k);
    }
  }
  for (int m = 0; m < rel.size(); ++m) {
    out.push_back(rel[m] - w.reg_width);
    out.push_back(-rel[m] - w.reg_width);
  }
  for (int f = 1; f < frames; ++f) {
    for (int n = 0; n < t.sharpened.cols(); ++n) out.push_back(t.sharpened(f, n) - t.sharpened(f - 1, n));
  }
  return out;
}

inline bool crosses_kink(const std::vector<double>& lo, const std::vector<double>& mid, const std::vector<double>& hi,
                         double margin = 1e-6) {
  for (std::size_t i = 0; i < mid.size(); ++i) {
    if (std::abs(lo[i] - mid[i]) < kPinnedTolerance && std::abs(hi[i] - mid[i]) < kPinnedTolerance) continue;
    if (std::abs(mid[i]) < margin) return true;
    if ((lo[i] > 0) != (mid[i] > 0) || (hi[i] > 0) != (mid[i] > 0)) return true;
  }
  return false;
}

struct GradCheck {
  double max_rel_error = 0.0;
  int checked = 0;
  int skipped = 0;
};

inline GradCheck check_model_gradient(const ModelParams& params, const FeatureSequence& x, const Transcript& tr,
                                      const LossWeights& w = {}, double h = 1e-5) {
  GradCheck out;
  const ParamLoss pl = loss_and_gradient(params, x, tr, w);
  const std::vector<double> analytic = pl.grad.flatten();
  const std::vector<double> base = params.flatten();
  const std::vector<double> mid = kink_coordinates(params, x, tr, w);
  ModelParams probe = params;
  for (std::size_t i = 0; i < base.size(); ++i) {
    std::vector<double> v = base;
    v[i] = base[i] + h;
    probe.assign(v);
    const double up = model_loss(probe, x, tr, w);
    const auto khi = kink_coordinates(probe, x, tr, w);
    v[i] = base[i] - h;
    probe.assign(v);
    const double down = model_loss(probe, x, tr, w);
    const auto klo = kink_coordinates(probe, x, tr, w);
    if (crosses_kink(klo, mid, khi)) {
      ++out.skipped;
      continue;
    }
    ++out.checked;
    out.max_rel_error = std::max(out.max_rel_error, rel_error(analytic[i], (up - down) / (2 * h)));
  }
  return out;
}

}  // namespace mucon::test
