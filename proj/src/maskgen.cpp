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

#include "mucon/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mucon {

Localization normalize_lengths(const Vector& rel_log_lengths, int frames) {
  if (rel_log_lengths.size() < 1) throw ContractError("normalize_lengths needs at least one segment");
  if (frames < 1) throw ContractError("normalize_lengths needs T >= 1");
  if (!rel_log_lengths.allFinite()) throw NumericError("relative log lengths are not finite");

  const double shift = rel_log_lengths.maxCoeff();
  Vector e = (rel_log_lengths.array() - shift).exp();
  Localization loc;
  loc.abs_lengths = static_cast<double>(frames) * e / e.sum();
  loc.start_positions.resize(loc.abs_lengths.size());
  double acc = 0.0;
  for (Eigen::Index m = 0; m < loc.abs_lengths.size(); ++m) {
    loc.start_positions[m] = acc;
    acc += loc.abs_lengths[m];
  }
  return loc;
}

std::vector<AffineParams> affine_params(const Localization& loc, int frames) {
  const double t = static_cast<double>(frames);
  std::vector<AffineParams> out;
  out.reserve(static_cast<std::size_t>(loc.segment_count()));
  for (int m = 0; m < loc.segment_count(); ++m) {
    const double len = loc.abs_lengths[m];
    if (!(len >= 1e-8 * t)) {
      throw NumericError("degenerate segment length " + std::to_string(len) + " for segment " +
                         std::to_string(m));
    }
    out.push_back({t / len, (t - 2.0 * loc.start_positions[m]) / len - 1.0});
  }
  return out;
}

double output_coordinate(int frame, int frames) {
  if (frames <= 1) return 0.0;
  return 2.0 * static_cast<double>(frame) / static_cast<double>(frames - 1) - 1.0;
}

double template_index(const AffineParams& p, int frame, int frames, int template_size) {
  const double iu = p.scale * output_coordinate(frame, frames) + p.shift;
  return (iu + 1.0) * 0.5 * static_cast<double>(template_size - 1);
}

double sample_template(const Template& u, double idx) {
  const int j_size = u.size();
  if (!(idx > -1.0 && idx < static_cast<double>(j_size))) return 0.0;
  const double lo = std::floor(idx);
  const int j0 = static_cast<int>(lo);
  const double f = idx - lo;
  const bool has_lo = j0 >= 0;
  const bool has_hi = j0 + 1 < j_size;
  const auto at = [&](int j) { return u.values[static_cast<std::size_t>(j)]; };
  // Interpolated form keeps w exactly 1 between two unit cells.
  double w = 0.0;
  if (has_lo && has_hi) {
    w = at(j0) + f * (at(j0 + 1) - at(j0));
  } else if (has_lo) {
    w = at(j0) * (1.0 - f);
  } else if (has_hi) {
    w = at(j0 + 1) * f;
  }
  return std::clamp(w, 0.0, 1.0);
}

double sample_template_slope(const Template& u, double idx) {
  const int j_size = u.size();
  // idx lies in the half-open cell (j0, j0 + 1].
  const double j0d = std::ceil(idx) - 1.0;
  if (j0d < -2.0 || j0d > static_cast<double>(j_size)) return 0.0;
  const int j0 = static_cast<int>(j0d);
  const double hi = (j0 + 1 >= 0 && j0 + 1 < j_size) ? u.values[static_cast<std::size_t>(j0 + 1)] : 0.0;
  const double lo = (j0 >= 0 && j0 < j_size) ? u.values[static_cast<std::size_t>(j0)] : 0.0;
  return hi - lo;
}

MaskSet sample_masks(std::span<const AffineParams> params, int frames, int template_size) {
  const Template u = Template::ones(template_size);
  MaskSet out;
  out.masks.resize(static_cast<Eigen::Index>(params.size()), frames);
  for (std::size_t m = 0; m < params.size(); ++m) {
    for (int t = 0; t < frames; ++t) {
      out.masks(static_cast<Eigen::Index>(m), t) =
          sample_template(u, template_index(params[m], t, frames, template_size));
    }
  }
  return out;
}

Vector MaskJacobian::backprop(const Matrix& upstream) const {
  Vector out = Vector::Zero(segments_);
  for (int m = 0; m < segments_; ++m) {
    for (int t = 0; t < frames_; ++t) {
      const double g = upstream(m, t);
      if (g == 0.0) continue;
      const double* row = &data_[offset(m, t, 0)];
      for (int k = 0; k < segments_; ++k) out[k] += g * row[k];
    }
  }
  return out;
}

MaskJacobian mask_jacobian(std::span<const AffineParams> params, const Localization& loc,
                           const Vector& rel_log_lengths, int frames, int template_size) {
  const int segs = loc.segment_count();
  if (static_cast<int>(params.size()) != segs || rel_log_lengths.size() != segs) {
    throw ContractError("mask_jacobian: segment counts disagree");
  }
  const Template u = Template::ones(template_size);
  const double t_len = static_cast<double>(frames);
  const double half_j = 0.5 * static_cast<double>(template_size - 1);

  // d l'_i / d l_k = l'_i (delta_ik - s_k), s = softmax(l).
  const Vector s = loc.abs_lengths / t_len;
  Matrix dlen(segs, segs);
  for (int i = 0; i < segs; ++i) {
    for (int k = 0; k < segs; ++k) dlen(i, k) = loc.abs_lengths[i] * ((i == k ? 1.0 : 0.0) - s[k]);
  }
  // d p'_m / d l_k accumulates the rows of dlen before m.
  Matrix dstart = Matrix::Zero(segs, segs);
  for (int m = 1; m < segs; ++m) dstart.row(m) = dstart.row(m - 1) + dlen.row(m - 1);

  MaskJacobian jac(segs, frames);
  for (int m = 0; m < segs; ++m) {
    const double len = loc.abs_lengths[m];
    const double dscale_dlen = -t_len / (len * len);
    const double dshift_dlen = -(t_len - 2.0 * loc.start_positions[m]) / (len * len);
    const double dshift_dstart = -2.0 / len;
    for (int t = 0; t < frames; ++t) {
      const double slope = sample_template_slope(u, template_index(params[m], t, frames, template_size));
      if (slope == 0.0) continue;
      const double iw = output_coordinate(t, frames);
      for (int k = 0; k < segs; ++k) {
        const double dscale = dscale_dlen * dlen(m, k);
        const double dshift = dshift_dlen * dlen(m, k) + dshift_dstart * dstart(m, k);
        jac(m, t, k) = slope * half_j * (iw * dscale + dshift);
      }
    }
  }
  return jac;
}

double kink_distance(const AffineParams& p, int frame, int frames, int template_size) {
  const double idx = template_index(p, frame, frames, template_size);
  const double j = static_cast<double>(template_size);
  double d = std::numeric_limits<double>::infinity();
  for (double k : {-1.0, 0.0, j - 1.0, j}) d = std::min(d, std::abs(idx - k));
  return d;
}

}  // namespace mucon
