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

#ifndef CTXAI_CAM_HPP
#define CTXAI_CAM_HPP

#include <vector>

#include "ctxai/tensor.hpp"

namespace ctxai {

struct Heatmap {
  Tensor values;  // [H, W], in [0, 1]
  int class_index = 0;

  Eigen::Index height() const { return values.dim(0); }
  Eigen::Index width() const { return values.dim(1); }
};

// Inclusive pixel bounds; `score` is the mean heatmap value over the box.
struct BBox {
  Eigen::Index top = 0;
  Eigen::Index left = 0;
  Eigen::Index bottom = 0;
  Eigen::Index right = 0;
  double score = 0.0;
  Eigen::Index area = 0;  // pixels in the originating component

  double center_row() const { return 0.5 * static_cast<double>(top + bottom); }
  double center_col() const { return 0.5 * static_cast<double>(left + right); }
  friend bool operator==(const BBox&, const BBox&) = default;
};

inline constexpr double kDefaultThresholdFrac = 0.5;
inline constexpr Eigen::Index kDefaultMinArea = 16;

// Min-max normalizes `activation` and upsamples it bilinearly (corner
// aligned) to out_h x out_w. A constant map yields all zeros. Throws
// ValidationError when asked to shrink.
Heatmap heatmap_from_activation(const Eigen::Ref<const RowMatrixXd>& activation,
                                Eigen::Index out_h, Eigen::Index out_w,
                                int class_index = 0);

// Thresholds at threshold_frac * max, labels 4-connected components, and
// returns one box per component of at least min_area pixels, ordered by score
// (descending), then top, then left.
std::vector<BBox> extract_bboxes(const Heatmap& heatmap,
                                 double threshold_frac = kDefaultThresholdFrac,
                                 Eigen::Index min_area = kDefaultMinArea);

// Black -> red -> yellow ramp as an H x W x 3 overlay; zero heat is
// transparent under blend_overlay.
Tensor heat_overlay(const Heatmap& heatmap);

}  // namespace ctxai

#endif  // CTXAI_CAM_HPP
