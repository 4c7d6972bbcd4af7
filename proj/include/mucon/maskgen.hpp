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

// Differentiable temporal masks.
//
// Each segment m owns an all-ones template U of J cells. The template is
// scaled and shifted by a 1-D affine map onto the video's T frames and read
// back with a bilinear kernel, giving a soft indicator w_m over frames.
//
// Coordinate conventions:
//   output frame t (0-based) -> i_w = 2 t / (T - 1) - 1   (i_w = 0 when T = 1)
//   i_u = scale * i_w + shift
//   template index idx = (i_u + 1) / 2 * (J - 1)
//   w = sum_j U[j] * max(0, 1 - |idx - j|)
//
// At kernel kinks the derivative with respect to idx is the left derivative.

#pragma once

#include <span>
#include <vector>

#include "mucon/core.hpp"

namespace mucon {

inline constexpr int kDefaultTemplateSize = 100;

/// Absolute segment lengths (sum T) and their start frames.
struct Localization {
  Vector abs_lengths;
  Vector start_positions;

  int segment_count() const { return static_cast<int>(abs_lengths.size()); }
};

struct AffineParams {
  double scale = 1.0;  // T / l'
  double shift = 0.0;  // (T - 2 p') / l' - 1
};

struct Template {
  std::vector<double> values;

  static Template ones(int size = kDefaultTemplateSize) {
    return Template{std::vector<double>(static_cast<std::size_t>(size), 1.0)};
  }
  int size() const { return static_cast<int>(values.size()); }
};

/// l'_m = T softmax(l)_m and p'_m = sum_{k<m} l'_k.
Localization normalize_lengths(const Vector& rel_log_lengths, int frames);

/// Throws NumericError when a length is below 1e-8 * T.
std::vector<AffineParams> affine_params(const Localization& loc, int frames);

double output_coordinate(int frame, int frames);

double template_index(const AffineParams& p, int frame, int frames, int template_size);

/// Bilinear read of the template at fractional index `idx`.
double sample_template(const Template& u, double idx);

/// Left derivative of sample_template with respect to idx.
double sample_template_slope(const Template& u, double idx);

MaskSet sample_masks(std::span<const AffineParams> params, int frames,
                     int template_size = kDefaultTemplateSize);

/// Dense d w_m[t] / d l_k, indexed (m, t, k).
class MaskJacobian {
 public:
  MaskJacobian(int segments, int frames)
      : segments_(segments), frames_(frames),
        data_(static_cast<std::size_t>(segments) * static_cast<std::size_t>(frames) *
                  static_cast<std::size_t>(segments),
              0.0) {}

  double operator()(int m, int t, int k) const { return data_[offset(m, t, k)]; }
  double& operator()(int m, int t, int k) { return data_[offset(m, t, k)]; }

  int segment_count() const { return segments_; }
  int frame_count() const { return frames_; }

  /// sum_{m,t} upstream(m, t) * d w_m[t] / d l_k.
  Vector backprop(const Matrix& upstream) const;

 private:
  std::size_t offset(int m, int t, int k) const {
    return (static_cast<std::size_t>(m) * static_cast<std::size_t>(frames_) +
            static_cast<std::size_t>(t)) *
               static_cast<std::size_t>(segments_) +
           static_cast<std::size_t>(k);
  }

  int segments_;
  int frames_;
  std::vector<double> data_;
};

MaskJacobian mask_jacobian(std::span<const AffineParams> params, const Localization& loc,
                           const Vector& rel_log_lengths, int frames,
                           int template_size = kDefaultTemplateSize);

/// Distance in template-index units from the sampling point of (m, t) to the
/// nearest kernel kink that changes the mask (idx in {-1, 0, J-1, J}).
double kink_distance(const AffineParams& p, int frame, int frames, int template_size);

}  // namespace mucon
