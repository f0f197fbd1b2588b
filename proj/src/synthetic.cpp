// Copyright 2026 The ctxai Authors.
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

#include "ctxai/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

namespace ctxai {

using Eigen::Index;

namespace {

struct Ellipse {
  double row, col, semi_r, semi_c;
  bool contains(double r, double c) const {
    const double y = (r - row) / semi_r;
    const double x = (c - col) / semi_c;
    return x * x + y * y <= 1.0;
  }
};

Ellipse body(Index h, Index w) { return {0.5 * h, 0.5 * w, 0.42 * h, 0.46 * w}; }
Ellipse left_lung(Index h, Index w) { return {0.5 * h, 0.28 * w, 0.30 * h, 0.15 * w}; }
Ellipse right_lung(Index h, Index w) { return {0.5 * h, 0.72 * w, 0.30 * h, 0.15 * w}; }

void validate_lesion(const LesionSpec& l, Index h, Index w) {
  if (!(l.radius > 0.0) || !(l.intensity > 0.0 && l.intensity <= 1.0) || !(l.softness > 0.0)) {
    throw ValidationError("lesion needs radius > 0, intensity in (0,1], softness > 0");
  }
  if (l.row - l.radius < 0.0 || l.row + l.radius > static_cast<double>(h - 1) ||
      l.col - l.radius < 0.0 || l.col + l.radius > static_cast<double>(w - 1)) {
    throw ValidationError("lesion at (" + std::to_string(l.row) + ", " + std::to_string(l.col) +
                          ") radius " + std::to_string(l.radius) + " leaves the image");
  }
}

}  // namespace

RowMatrixXd phantom_background(Index h, Index w) {
  const Ellipse b = body(h, w), ll = left_lung(h, w), rl = right_lung(h, w);
  RowMatrixXd px = RowMatrixXd::Zero(h, w);
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      const double y = static_cast<double>(r), x = static_cast<double>(c);
      if (ll.contains(y, x) || rl.contains(y, x)) {
        px(r, c) = kLungIntensity;
      } else if (b.contains(y, x)) {
        px(r, c) = kBodyIntensity;
      }
    }
  }
  return px;
}

ByteMatrix lung_field(Index h, Index w) {
  const Ellipse ll = left_lung(h, w), rl = right_lung(h, w);
  ByteMatrix m(h, w);
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      const double y = static_cast<double>(r), x = static_cast<double>(c);
      m(r, c) = ll.contains(y, x) || rl.contains(y, x);
    }
  }
  return m;
}

SyntheticSlice gen_slice(const std::vector<LesionSpec>& lesions, Index h, Index w,
                         double noise_sigma, std::uint64_t seed) {
  if (h < 8 || w < 8) throw ValidationError("synthetic slices must be at least 8x8");
  if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be nonnegative");
  for (const LesionSpec& l : lesions) validate_lesion(l, h, w);

  RowMatrixXd px = phantom_background(h, w);
  ByteMatrix mask = ByteMatrix::Zero(h, w);
  for (const LesionSpec& l : lesions) {
    const double reach = l.radius + 5.0 * l.softness;
    const Index r0 = std::max<Index>(0, static_cast<Index>(std::floor(l.row - reach)));
    const Index r1 = std::min<Index>(h - 1, static_cast<Index>(std::ceil(l.row + reach)));
    const Index c0 = std::max<Index>(0, static_cast<Index>(std::floor(l.col - reach)));
    const Index c1 = std::min<Index>(w - 1, static_cast<Index>(std::ceil(l.col + reach)));
    for (Index r = r0; r <= r1; ++r) {
      for (Index c = c0; c <= c1; ++c) {
        const double d = std::hypot(static_cast<double>(r) - l.row, static_cast<double>(c) - l.col);
        const double p = 0.5 * std::erfc((d - l.radius) / (l.softness * M_SQRT2));
        px(r, c) = (1.0 - p) * px(r, c) + p * l.intensity;
        if (d <= l.radius) mask(r, c) = 1;
      }
    }
  }
  if (noise_sigma > 0.0) {
    Rng rng(seed);
    for (Index i = 0; i < px.size(); ++i) {
      px.data()[i] = std::clamp(px.data()[i] + noise_sigma * rng.normal(), 0.0, 1.0);
    }
  }
  return {GrayImage(std::move(px)), std::move(mask)};
}

void VolumeSpec::validate() const {
  if (n_slices == 0) throw ValidationError("volume needs at least one slice");
  if (lesion_slices.begin > lesion_slices.end || lesion_slices.end > n_slices) {
    throw ValidationError("lesion slice range must lie within [0, n_slices)");
  }
  if (lesion_slices.size() > 0 && lesions.size() != 1 && lesions.size() != lesion_slices.size()) {
    throw ValidationError("give one lesion list per affected slice or a single shared list");
  }
}

SyntheticVolume gen_volume(const VolumeSpec& spec) {
  spec.validate();
  SyntheticVolume out;
  bool any_lesion = false;
  for (std::size_t i = 0; i < spec.n_slices; ++i) {
    std::vector<LesionSpec> here;
    if (i >= spec.lesion_slices.begin && i < spec.lesion_slices.end && !spec.lesions.empty()) {
      here = spec.lesions.size() == 1 ? spec.lesions.front()
                                      : spec.lesions[i - spec.lesion_slices.begin];
    }
    any_lesion = any_lesion || !here.empty();
    SyntheticSlice s =
        gen_slice(here, spec.height, spec.width, spec.noise_sigma, derive_seed(spec.seed, i));
    out.volume.slices.push_back(std::move(s.image));
    out.masks.push_back(std::move(s.mask));
  }
  out.volume.label = any_lesion ? 1 : 0;
  return out;
}

std::vector<LesionSpec> random_lesions(Rng& rng, Index h, Index w, int count, double min_radius,
                                       double max_radius) {
  const Ellipse lungs[2] = {left_lung(h, w), right_lung(h, w)};
  std::vector<LesionSpec> out;
  for (int n = 0; n < count; ++n) {
    LesionSpec l;
    l.radius = rng.uniform(min_radius, max_radius);
    l.intensity = rng.uniform(0.75, 0.9);
    l.softness = 2.0;
    const Ellipse& lung = lungs[rng.uniform_index(2)];
    // Keep the blurred rim inside the lung so lesions never touch soft tissue.
    const double margin = l.radius + 2.0 * l.softness + 2.0;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw ValidationError("image too small to place a lesion");
      l.row = rng.uniform(lung.row - lung.semi_r, lung.row + lung.semi_r);
      l.col = rng.uniform(lung.col - lung.semi_c, lung.col + lung.semi_c);
      bool inside = true;
      for (int k = 0; k < 16 && inside; ++k) {
        const double a = 2.0 * M_PI * k / 16.0;
        inside = lung.contains(l.row + margin * std::sin(a), l.col + margin * std::cos(a));
      }
      for (const LesionSpec& other : out) {
        if (std::hypot(l.row - other.row, l.col - other.col) <
            l.radius + other.radius + 4.0 * l.softness + 4.0) {
          inside = false;
        }
      }
      if (inside) break;
    }
    out.push_back(l);
  }
  return out;
}

VolumeSpec random_volume_spec(std::uint64_t seed, bool positive, std::size_t n_slices, Index h,
                              Index w, double noise_sigma) {
  if (n_slices == 0) throw ValidationError("volume needs at least one slice");
  Rng rng(seed);
  VolumeSpec spec;
  spec.n_slices = n_slices;
  spec.height = h;
  spec.width = w;
  spec.noise_sigma = noise_sigma;
  spec.seed = derive_seed(seed, 0xC0FFEE);
  if (positive) {
    const std::size_t max_run = std::max<std::size_t>(1, n_slices / 2);
    const std::size_t run = 1 + rng.uniform_index(max_run);
    const std::size_t begin = rng.uniform_index(n_slices - run + 1);
    spec.lesion_slices = {begin, begin + run};
    spec.lesions = {random_lesions(rng, h, w, 1 + static_cast<int>(rng.uniform_index(2)))};
  }
  return spec;
}

std::vector<Centroid> mask_centroids(const ByteMatrix& mask) {
  const Index h = mask.rows(), w = mask.cols();
  ByteMatrix seen = ByteMatrix::Zero(h, w);
  std::vector<Centroid> out;
  std::queue<std::pair<Index, Index>> frontier;
  for (Index r0 = 0; r0 < h; ++r0) {
    for (Index c0 = 0; c0 < w; ++c0) {
      if (!mask(r0, c0) || seen(r0, c0)) continue;
      double sr = 0.0, sc = 0.0;
      Index n = 0;
      seen(r0, c0) = 1;
      frontier.emplace(r0, c0);
      while (!frontier.empty()) {
        const auto [r, c] = frontier.front();
        frontier.pop();
        sr += static_cast<double>(r);
        sc += static_cast<double>(c);
        ++n;
        const Index nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
        for (const auto& q : nbr) {
          if (q[0] >= 0 && q[0] < h && q[1] >= 0 && q[1] < w && mask(q[0], q[1]) && !seen(q[0], q[1])) {
            seen(q[0], q[1]) = 1;
            frontier.emplace(q[0], q[1]);
          }
        }
      }
      out.push_back({sr / static_cast<double>(n), sc / static_cast<double>(n)});
    }
  }
  return out;
}

}  // namespace ctxai
