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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "mucon/maskgen.hpp"
#include "test_util.hpp"

namespace mucon {
namespace {

MaskSet masks_for(const Vector& rel, int frames, int j = kDefaultTemplateSize) {
  const auto params = affine_params(normalize_lengths(rel, frames), frames);
  return sample_masks(params, frames, j);
}

// Direct sum over template cells of an all-ones template, no shortcuts.
double bilinear_reference(double idx, int j_size) {
  double w = 0.0;
  for (int j = 0; j < j_size; ++j) w += std::max(0.0, 1.0 - std::abs(idx - j));
  return std::min(1.0, w);
}

TEST(NormalizeLengths, Examples) {
  Localization a = normalize_lengths(Vector::Zero(3), 300);
  EXPECT_NEAR(a.abs_lengths[0], 100, 1e-9);
  EXPECT_NEAR(a.abs_lengths[2], 100, 1e-9);
  EXPECT_NEAR(a.start_positions[1], 100, 1e-9);
  EXPECT_NEAR(a.start_positions[2], 200, 1e-9);

  Vector r(2);
  r << std::log(2.0), 0.0;
  Localization b = normalize_lengths(r, 300);
  EXPECT_NEAR(b.abs_lengths[0], 200, 1e-9);
  EXPECT_NEAR(b.abs_lengths[1], 100, 1e-9);
  EXPECT_NEAR(b.start_positions[1], 200, 1e-9);

  Localization c = normalize_lengths(Vector::Constant(1, 5.0), 77);
  EXPECT_NEAR(c.abs_lengths[0], 77, 1e-12);
  EXPECT_EQ(c.start_positions[0], 0.0);
}

TEST(NormalizeLengths, NonFiniteIsNumericError) {
  Vector r(2);
  r << 0.0, std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(normalize_lengths(r, 10), NumericError);
}

TEST(NormalizeLengths, SumsToTProperty) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const int m = test::uniform_int(rng, 1, 8);
    const int t = test::uniform_int(rng, 1, 500);
    const Localization loc = normalize_lengths(test::random_vector(m, rng, 3.0), t);
    EXPECT_NEAR(loc.abs_lengths.sum(), t, 1e-6 * t);
    EXPECT_EQ(loc.start_positions[0], 0.0);
    for (int k = 1; k < m; ++k) {
      EXPECT_NEAR(loc.start_positions[k], loc.abs_lengths.head(k).sum(), 1e-9 * t);
    }
  }
}

TEST(AffineParams, Examples) {
  const auto p = [](double len, double start) {
    Localization loc;
    loc.abs_lengths = Vector::Constant(1, len);
    loc.start_positions = Vector::Constant(1, start);
    return affine_params(loc, 100)[0];
  };
  EXPECT_DOUBLE_EQ(p(100, 0).scale, 1.0);
  EXPECT_DOUBLE_EQ(p(100, 0).shift, 0.0);
  EXPECT_DOUBLE_EQ(p(50, 0).scale, 2.0);
  EXPECT_DOUBLE_EQ(p(50, 0).shift, 1.0);
  EXPECT_DOUBLE_EQ(p(50, 50).scale, 2.0);
  EXPECT_DOUBLE_EQ(p(50, 50).shift, -1.0);
}

TEST(AffineParams, DegenerateLengthIsRejected) {
  Localization loc;
  loc.abs_lengths = Vector::Constant(1, 1e-9);
  loc.start_positions = Vector::Zero(1);
  EXPECT_THROW(affine_params(loc, 10), NumericError);
}

TEST(OutputCoordinate, EndpointsAndSingleFrame) {
  EXPECT_DOUBLE_EQ(output_coordinate(0, 10), -1.0);
  EXPECT_DOUBLE_EQ(output_coordinate(9, 10), 1.0);
  EXPECT_DOUBLE_EQ(output_coordinate(0, 1), 0.0);
}

TEST(SampleMasks, FullSegmentIsAllOnes) {
  const MaskSet s = masks_for(Vector::Zero(1), 10);
  EXPECT_TRUE((s.masks.array() == 1.0).all());
  const MaskSet one = masks_for(Vector::Zero(1), 1);
  EXPECT_EQ(one.masks(0, 0), 1.0);
}

TEST(SampleMasks, HalfLengthSegmentMatchesDirectEvaluation) {
  Localization loc;
  loc.abs_lengths = Vector::Constant(1, 50.0);
  loc.start_positions = Vector::Zero(1);
  const auto params = affine_params(loc, 100);
  const MaskSet s = sample_masks(params, 100);
  for (int t = 0; t < 100; ++t) {
    const double idx = template_index(params[0], t, 100, 100);
    EXPECT_NEAR(s.masks(0, t), bilinear_reference(idx, 100), 1e-12) << t;
    if (idx >= 0.0 && idx <= 99.0) {
      EXPECT_EQ(s.masks(0, t), 1.0) << t;
    }
    if (t > 50) {
      EXPECT_EQ(s.masks(0, t), 0.0) << t;
    }
  }
  for (int t = 0; t < 49; ++t) EXPECT_EQ(s.masks(0, t), 1.0);
  for (int t = 1; t < 100; ++t) EXPECT_LE(s.masks(0, t), s.masks(0, t - 1));
}

TEST(SampleMasks, MatchesDirectBilinearSumOnRandomInstances) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = test::uniform_int(rng, 1, 5);
    const int t = test::uniform_int(rng, 1, 60);
    const int j = test::uniform_int(rng, 2, 120);
    const Vector rel = test::random_vector(m, rng);
    const auto params = affine_params(normalize_lengths(rel, t), t);
    const MaskSet s = sample_masks(params, t, j);
    for (int k = 0; k < m; ++k) {
      for (int f = 0; f < t; ++f) {
        EXPECT_NEAR(s.masks(k, f), bilinear_reference(template_index(params[k], f, t, j), j), 1e-12);
      }
    }
  }
}

TEST(SampleTemplate, ExactOnesInsideAndZerosOutside) {
  const Template u = Template::ones(100);
  for (double idx : {0.0, 0.25, 17.5, 98.999, 99.0}) EXPECT_EQ(sample_template(u, idx), 1.0) << idx;
  for (double idx : {-1.0, -1.5, 100.0, 130.0}) EXPECT_EQ(sample_template(u, idx), 0.0) << idx;
  EXPECT_DOUBLE_EQ(sample_template(u, -0.25), 0.75);
  EXPECT_DOUBLE_EQ(sample_template(u, 99.25), 0.75);
}

TEST(SampleTemplate, LeftSlopeAtKinks) {
  const Template u = Template::ones(100);
  // Left-side derivative: rising ramp is (-1, 0], falling ramp is (99, 100].
  EXPECT_EQ(sample_template_slope(u, -0.5), 1.0);
  EXPECT_EQ(sample_template_slope(u, 0.0), 1.0);
  EXPECT_EQ(sample_template_slope(u, -1.0), 0.0);
  EXPECT_EQ(sample_template_slope(u, 50.0), 0.0);
  EXPECT_EQ(sample_template_slope(u, 99.0), 0.0);
  EXPECT_EQ(sample_template_slope(u, 99.5), -1.0);
  EXPECT_EQ(sample_template_slope(u, 100.0), -1.0);
  EXPECT_EQ(sample_template_slope(u, 100.5), 0.0);
}

TEST(SampleMasks, PropertiesOnRandomLengths) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = test::uniform_int(rng, 1, 6);
    const int t = test::uniform_int(rng, 2, 80);
    const Vector rel = test::random_vector(m, rng);
    const auto params = affine_params(normalize_lengths(rel, t), t);
    const MaskSet s = sample_masks(params, t);
    for (int k = 0; k < m; ++k) {
      bool falling = false;
      for (int f = 0; f < t; ++f) {
        const double w = s.masks(k, f);
        ASSERT_GE(w, 0.0);
        ASSERT_LE(w, 1.0);
        const double idx = template_index(params[k], f, t, kDefaultTemplateSize);
        if (idx >= 0.0 && idx <= kDefaultTemplateSize - 1.0) EXPECT_EQ(w, 1.0);
        if (idx <= -1.0 || idx >= kDefaultTemplateSize) EXPECT_EQ(w, 0.0);
        if (f > 0) {
          if (w < s.masks(k, f - 1)) falling = true;
          if (falling) EXPECT_LE(w, s.masks(k, f - 1));
        }
      }
    }
  }
}

Matrix fd_column(const Vector& rel, int frames, int k, double h) {
  Vector hi = rel, lo = rel;
  hi[k] += h;
  lo[k] -= h;
  return (masks_for(hi, frames).masks - masks_for(lo, frames).masks) / (2.0 * h);
}

TEST(MaskJacobian, SaturatedFullSegmentHasZeroGradient) {
  const Vector rel = Vector::Zero(1);
  const Localization loc = normalize_lengths(rel, 20);
  const auto params = affine_params(loc, 20);
  const MaskJacobian jac = mask_jacobian(params, loc, rel, 20);
  for (int t = 1; t < 19; ++t) EXPECT_EQ(jac(0, t, 0), 0.0);
}

TEST(MaskJacobian, RightRampGrowsWithOwnLength) {
  // At exactly equal logits no frame of T = 40 lands on the one-fifth-frame-wide
  // ramp, so the first segment is made slightly longer to put frame 20 on it.
  Vector rel(2);
  rel << 0.0412, 0.0;
  const int frames = 40;
  const Localization loc = normalize_lengths(rel, frames);
  const auto params = affine_params(loc, frames);
  const double idx = template_index(params[0], 20, frames, kDefaultTemplateSize);
  ASSERT_GT(idx, 99.0);
  ASSERT_LT(idx, 100.0);
  const Matrix fd = fd_column(rel, frames, 0, 1e-4);
  EXPECT_GT(fd(0, 20), 0.0);
  const MaskJacobian jac = mask_jacobian(params, loc, rel, frames);
  EXPECT_GT(jac(0, 20, 0), 0.0);
  EXPECT_LT(test::rel_error(jac(0, 20, 0), fd(0, 20)), 1e-4);
}

TEST(MaskJacobian, MatchesFiniteDifferencesAwayFromKinks) {
  std::mt19937_64 rng(23);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int m = trial == 0 ? 3 : test::uniform_int(rng, 1, 4);
    const int frames = trial == 0 ? 25 : test::uniform_int(rng, 5, 40);
    const Vector rel = test::random_vector(m, rng, 0.7);
    const double h = 1e-5;
    if (test::straddles_mask_kink(rel, frames, h)) continue;
    ++checked;
    const Localization loc = normalize_lengths(rel, frames);
    const auto params = affine_params(loc, frames);
    const MaskJacobian jac = mask_jacobian(params, loc, rel, frames);
    double worst = 0.0;
    for (int k = 0; k < m; ++k) {
      const Matrix fd = fd_column(rel, frames, k, h);
      for (int s = 0; s < m; ++s) {
        for (int t = 0; t < frames; ++t) worst = std::max(worst, test::rel_error(jac(s, t, k), fd(s, t)));
      }
    }
    EXPECT_LT(worst, 1e-4) << "trial " << trial;
  }
  EXPECT_GE(checked, 30);
}

TEST(MaskJacobian, BackpropIsContraction) {
  std::mt19937_64 rng(29);
  const Vector rel = test::random_vector(3, rng);
  const Localization loc = normalize_lengths(rel, 30);
  const auto params = affine_params(loc, 30);
  const MaskJacobian jac = mask_jacobian(params, loc, rel, 30);
  const Matrix up = test::random_matrix(3, 30, rng);
  const Vector g = jac.backprop(up);
  for (int k = 0; k < 3; ++k) {
    double expect = 0.0;
    for (int m = 0; m < 3; ++m) {
      for (int t = 0; t < 30; ++t) expect += up(m, t) * jac(m, t, k);
    }
    EXPECT_NEAR(g[k], expect, 1e-12);
  }
}

TEST(KinkDistance, MeasuresToNearestKernelKink) {
  Localization loc;
  loc.abs_lengths = Vector::Constant(1, 50.0);
  loc.start_positions = Vector::Zero(1);
  const auto p = affine_params(loc, 100)[0];
  // idx = 2t for this segment.
  EXPECT_NEAR(kink_distance(p, 10, 100, 100), 20.0, 1e-9);
  EXPECT_NEAR(kink_distance(p, 50, 100, 100), 0.0, 1e-9);
}

}  // namespace
}  // namespace mucon
