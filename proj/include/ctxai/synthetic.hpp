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

#ifndef CTXAI_SYNTHETIC_HPP
#define CTXAI_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "ctxai/image.hpp"
#include "ctxai/numerics.hpp"
#include "ctxai/slice_integration.hpp"

namespace ctxai {

// Soft bright disc. The profile is a hard disc blurred by a Gaussian of
// std-dev `softness`, so the half-intensity contour is the circle of `radius`.
struct LesionSpec {
  double row = 0.0;
  double col = 0.0;
  double radius = 10.0;
  double intensity = 0.8;
  double softness = 2.0;
};

struct SyntheticSlice {
  GrayImage image;
  ByteMatrix mask;  // 1 where the lesion profile is at least one half
};

// Intensities of the phantom regions.
inline constexpr double kBodyIntensity = 0.35;
inline constexpr double kLungIntensity = 0.12;

// Dark lung fields inside a soft-tissue ellipse on a black field.
RowMatrixXd phantom_background(Eigen::Index h, Eigen::Index w);
// 1 inside either lung ellipse.
ByteMatrix lung_field(Eigen::Index h, Eigen::Index w);

SyntheticSlice gen_slice(const std::vector<LesionSpec>& lesions, Eigen::Index h, Eigen::Index w,
                         double noise_sigma, std::uint64_t seed);

struct VolumeSpec {
  std::size_t n_slices = 20;
  SliceRange lesion_slices;  // contiguous; empty for a negative patient
  // One lesion list per affected slice, or a single list shared by all.
  std::vector<std::vector<LesionSpec>> lesions;
  double noise_sigma = 0.02;
  std::uint64_t seed = 0;
  Eigen::Index height = 224;
  Eigen::Index width = 224;

  void validate() const;
};

struct SyntheticVolume {
  PatientVolume volume;
  std::vector<ByteMatrix> masks;
};

SyntheticVolume gen_volume(const VolumeSpec& spec);

// Draws `count` lesions lying wholly inside the lung fields.
std::vector<LesionSpec> random_lesions(Rng& rng, Eigen::Index h, Eigen::Index w, int count,
                                       double min_radius = 8.0, double max_radius = 14.0);

// Random patient: positive patients get a contiguous run of 1..n/2 lesion
// slices sharing one lesion set.
VolumeSpec random_volume_spec(std::uint64_t seed, bool positive, std::size_t n_slices,
                              Eigen::Index h = 224, Eigen::Index w = 224,
                              double noise_sigma = 0.02);

struct Centroid {
  double row = 0.0;
  double col = 0.0;
};

// Centroids of the 4-connected components of a binary mask, in raster order
// of each component's first pixel.
std::vector<Centroid> mask_centroids(const ByteMatrix& mask);

}  // namespace ctxai

#endif  // CTXAI_SYNTHETIC_HPP
