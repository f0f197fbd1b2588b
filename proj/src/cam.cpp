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

#include "ctxai/cam.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

namespace ctxai {

using Eigen::Index;

namespace {

// Source coordinate and interpolation weight for corner-aligned resampling.
void source_coord(Index dst, Index n_src, Index n_dst, Index& lo, Index& hi, double& t) {
  if (n_src == 1 || n_dst == 1) {
    lo = hi = 0;
    t = 0.0;
    return;
  }
  const double x = static_cast<double>(dst) * static_cast<double>(n_src - 1) /
                   static_cast<double>(n_dst - 1);
  lo = std::min<Index>(static_cast<Index>(std::floor(x)), n_src - 1);
  hi = std::min<Index>(lo + 1, n_src - 1);
  t = x - static_cast<double>(lo);
}

}  // namespace

Heatmap heatmap_from_activation(const Eigen::Ref<const RowMatrixXd>& activation,
                                Index out_h, Index out_w, int class_index) {
  if (activation.size() == 0) throw ValidationError("activation map is empty");
  if (!activation.allFinite()) throw ValidationError("activation map is not finite");
  if (out_h < activation.rows() || out_w < activation.cols()) {
    throw ValidationError("heatmap output must not be smaller than the activation map");
  }
  const double lo = activation.minCoeff();
  const double hi = activation.maxCoeff();
  RowMatrixXd norm = RowMatrixXd::Zero(activation.rows(), activation.cols());
  if (hi > lo) norm = (activation.array() - lo) / (hi - lo);

  RowMatrixXd out(out_h, out_w);
  for (Index r = 0; r < out_h; ++r) {
    Index r0, r1;
    double tr;
    source_coord(r, norm.rows(), out_h, r0, r1, tr);
    for (Index c = 0; c < out_w; ++c) {
      Index c0, c1;
      double tc;
      source_coord(c, norm.cols(), out_w, c0, c1, tc);
      const double top = (1.0 - tc) * norm(r0, c0) + tc * norm(r0, c1);
      const double bottom = (1.0 - tc) * norm(r1, c0) + tc * norm(r1, c1);
      out(r, c) = std::clamp((1.0 - tr) * top + tr * bottom, 0.0, 1.0);
    }
  }
  return {Tensor::from_matrix(out), class_index};
}

std::vector<BBox> extract_bboxes(const Heatmap& heatmap, double threshold_frac, Index min_area) {
  if (!(threshold_frac > 0.0 && threshold_frac < 1.0)) {
    throw ValidationError("threshold_frac must lie in (0,1)");
  }
  const auto values = heatmap.values.matrix();
  const double peak = values.maxCoeff();
  std::vector<BBox> boxes;
  if (!(peak > 0.0)) return boxes;
  const double cut = threshold_frac * peak;
  const Index h = values.rows();
  const Index w = values.cols();

  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> seen =
      (values.array() < cut).matrix();
  std::queue<std::pair<Index, Index>> frontier;
  for (Index r0 = 0; r0 < h; ++r0) {
    for (Index c0 = 0; c0 < w; ++c0) {
      if (seen(r0, c0)) continue;
      BBox box{r0, c0, r0, c0, 0.0, 0};
      seen(r0, c0) = true;
      frontier.emplace(r0, c0);
      while (!frontier.empty()) {
        const auto [r, c] = frontier.front();
        frontier.pop();
        ++box.area;
        box.top = std::min(box.top, r);
        box.bottom = std::max(box.bottom, r);
        box.left = std::min(box.left, c);
        box.right = std::max(box.right, c);
        const Index nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
        for (const auto& n : nbr) {
          if (n[0] >= 0 && n[0] < h && n[1] >= 0 && n[1] < w && !seen(n[0], n[1])) {
            seen(n[0], n[1]) = true;
            frontier.emplace(n[0], n[1]);
          }
        }
      }
      if (box.area < min_area) continue;
      box.score = values.block(box.top, box.left, box.bottom - box.top + 1, box.right - box.left + 1)
                      .mean();
      boxes.push_back(box);
    }
  }
  std::sort(boxes.begin(), boxes.end(), [](const BBox& a, const BBox& b) {
    return std::tuple(-a.score, a.top, a.left) < std::tuple(-b.score, b.top, b.left);
  });
  return boxes;
}

Tensor heat_overlay(const Heatmap& heatmap) {
  const auto v = heatmap.values.matrix();
  Tensor::Vector rgb(3 * v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double x = v.data()[i];
    rgb(3 * i) = x;
    rgb(3 * i + 1) = x * x;
    rgb(3 * i + 2) = 0.0;
  }
  return Tensor({v.rows(), v.cols(), 3}, std::move(rgb));
}

}  // namespace ctxai
