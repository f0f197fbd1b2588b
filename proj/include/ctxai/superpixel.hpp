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

#ifndef CTXAI_SUPERPIXEL_HPP
#define CTXAI_SUPERPIXEL_HPP

#include <cstdint>
#include <vector>

#include "ctxai/image.hpp"

namespace ctxai {

// Coalition over superpixels: mask[i] == 1 keeps superpixel i, 0 occludes it.
using Mask = std::vector<std::uint8_t>;

using LabelMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Segment {
  double row = 0.0;
  double col = 0.0;
  double mean_intensity = 0.0;
  Eigen::Index pixels = 0;
};

// Partition of an image into n_segments 4-connected regions labelled
// 0..n_segments-1.
struct SuperpixelMap {
  LabelMatrix labels;
  int n_segments = 0;
  std::vector<Segment> centroids;

  Eigen::Index height() const { return labels.rows(); }
  Eigen::Index width() const { return labels.cols(); }
};

struct SlicParams {
  int n_target = 50;
  double compactness = 10.0;
  int iters = 10;
  std::uint64_t seed = 0;
};

// Intensity is scaled to [0, 100] before clustering.
inline constexpr double kSlicIntensityScale = 100.0;

// SLIC: k-means over (intensity, row, col) seeded on a square grid with step
// S = sqrt(HW / n_target), distance
//
//   D^2 = (100 dI)^2 + (compactness / S)^2 * (dr^2 + dc^2),
//
// followed by connectivity enforcement. Each 4-connected component becomes its
// own superpixel except orphan fragments (not the largest piece of their
// cluster and smaller than S^2/16), which merge into the adjacent region with
// the closest mean intensity. The seed breaks ties when moving grid seeds to
// the lowest-gradient pixel of their 3x3 neighbourhood.
SuperpixelMap slic_segment(const GrayImage& img, const SlicParams& params = {});

// Replaces the pixels of every superpixel with mask[i] == 0 by `fill`.
GrayImage apply_mask(const GrayImage& img, const SuperpixelMap& sp, const Mask& mask,
                     double fill = 0.0);

// Per-superpixel value painted over the image plane.
RowMatrixXd paint_segments(const SuperpixelMap& sp, const Eigen::VectorXd& values);

// Seeded random color per superpixel as an H x W x 3 overlay.
Tensor segment_overlay(const SuperpixelMap& sp, std::uint64_t seed);

// Number of pixels of each superpixel for which `region` is nonzero.
std::vector<Eigen::Index> segment_overlap(
    const SuperpixelMap& sp,
    const Eigen::Ref<const ByteMatrix>& region);

}  // namespace ctxai

#endif  // CTXAI_SUPERPIXEL_HPP
