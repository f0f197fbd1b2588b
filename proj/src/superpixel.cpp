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

#include "ctxai/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <string>

#include "ctxai/numerics.hpp"

namespace ctxai {

using Eigen::Index;

namespace {

struct Center {
  double intensity;
  double row;
  double col;
};

double gradient_at(const RowMatrixXd& px, Index r, Index c) {
  const Index h = px.rows();
  const Index w = px.cols();
  const double dy = px(std::min(r + 1, h - 1), c) - px(std::max<Index>(r - 1, 0), c);
  const double dx = px(r, std::min(c + 1, w - 1)) - px(r, std::max<Index>(c - 1, 0));
  return dy * dy + dx * dx;
}

std::vector<Center> grid_centers(const RowMatrixXd& px, int n_target, double step, Rng& rng) {
  const Index h = px.rows();
  const Index w = px.cols();
  const Index ny = std::clamp<Index>(static_cast<Index>(std::floor(h / step)), 1, h);
  const Index nx = std::clamp<Index>(
      static_cast<Index>(std::lround(static_cast<double>(n_target) / static_cast<double>(ny))), 1, w);
  std::vector<Center> centers;
  for (Index i = 0; i < ny; ++i) {
    for (Index j = 0; j < nx; ++j) {
      const Index r0 = static_cast<Index>((static_cast<double>(i) + 0.5) * h / ny);
      const Index c0 = static_cast<Index>((static_cast<double>(j) + 0.5) * w / nx);
      // Lowest-gradient pixel in the 3x3 neighbourhood; ties broken by a
      // seeded draw among the minima.
      double best = std::numeric_limits<double>::infinity();
      std::vector<std::pair<Index, Index>> minima;
      for (Index r = std::max<Index>(r0 - 1, 0); r <= std::min(r0 + 1, h - 1); ++r) {
        for (Index c = std::max<Index>(c0 - 1, 0); c <= std::min(c0 + 1, w - 1); ++c) {
          const double g = gradient_at(px, r, c);
          if (g < best) {
            best = g;
            minima.clear();
          }
          if (g == best) minima.emplace_back(r, c);
        }
      }
      const auto [r, c] = minima[rng.uniform_index(minima.size())];
      centers.push_back({px(r, c), static_cast<double>(r), static_cast<double>(c)});
    }
  }
  return centers;
}

void kmeans(const RowMatrixXd& px, std::vector<Center>& centers, LabelMatrix& labels,
            double spatial_weight, int iters) {
  const Index h = px.rows();
  const Index w = px.cols();
  const std::size_t k = centers.size();
  std::vector<double> sum_i(k), sum_r(k), sum_c(k);
  std::vector<Index> count(k);
  for (int it = 0; it < iters; ++it) {
    for (Index r = 0; r < h; ++r) {
      for (Index c = 0; c < w; ++c) {
        const double v = px(r, c);
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (std::size_t q = 0; q < k; ++q) {
          const double di = kSlicIntensityScale * (v - centers[q].intensity);
          const double dr = static_cast<double>(r) - centers[q].row;
          const double dc = static_cast<double>(c) - centers[q].col;
          const double d = di * di + spatial_weight * (dr * dr + dc * dc);
          if (d < best) {
            best = d;
            arg = static_cast<int>(q);
          }
        }
        labels(r, c) = arg;
      }
    }
    std::fill(sum_i.begin(), sum_i.end(), 0.0);
    std::fill(sum_r.begin(), sum_r.end(), 0.0);
    std::fill(sum_c.begin(), sum_c.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (Index r = 0; r < h; ++r) {
      for (Index c = 0; c < w; ++c) {
        const auto q = static_cast<std::size_t>(labels(r, c));
        sum_i[q] += px(r, c);
        sum_r[q] += static_cast<double>(r);
        sum_c[q] += static_cast<double>(c);
        ++count[q];
      }
    }
    for (std::size_t q = 0; q < k; ++q) {
      if (count[q] == 0) continue;  // empty cluster keeps its previous center
      const double n = static_cast<double>(count[q]);
      centers[q] = {sum_i[q] / n, sum_r[q] / n, sum_c[q] / n};
    }
  }
}

// Labels 4-connected components of equal cluster id; returns component count.
int connected_components(const LabelMatrix& clusters, LabelMatrix& comp) {
  const Index h = clusters.rows();
  const Index w = clusters.cols();
  comp.setConstant(h, w, -1);
  int next = 0;
  std::queue<std::pair<Index, Index>> frontier;
  for (Index r0 = 0; r0 < h; ++r0) {
    for (Index c0 = 0; c0 < w; ++c0) {
      if (comp(r0, c0) >= 0) continue;
      const int id = next++;
      comp(r0, c0) = id;
      frontier.emplace(r0, c0);
      while (!frontier.empty()) {
        const auto [r, c] = frontier.front();
        frontier.pop();
        const Index nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
        for (const auto& n : nbr) {
          if (n[0] < 0 || n[0] >= h || n[1] < 0 || n[1] >= w) continue;
          if (comp(n[0], n[1]) < 0 && clusters(n[0], n[1]) == clusters(r, c)) {
            comp(n[0], n[1]) = id;
            frontier.emplace(n[0], n[1]);
          }
        }
      }
    }
  }
  return next;
}

void enforce_connectivity(const RowMatrixXd& px, const LabelMatrix& clusters, Index min_size,
                          LabelMatrix& out) {
  const Index h = px.rows();
  const Index w = px.cols();
  LabelMatrix comp;
  const int n_comp = connected_components(clusters, comp);
  const auto nc = static_cast<std::size_t>(n_comp);

  std::vector<Index> size(nc, 0);
  std::vector<double> sum(nc, 0.0);
  std::vector<int> cluster_of(nc, 0);
  std::vector<std::set<int>> adjacent(nc);
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      const auto id = static_cast<std::size_t>(comp(r, c));
      ++size[id];
      sum[id] += px(r, c);
      cluster_of[id] = clusters(r, c);
      if (r + 1 < h && comp(r + 1, c) != comp(r, c)) {
        adjacent[id].insert(comp(r + 1, c));
        adjacent[static_cast<std::size_t>(comp(r + 1, c))].insert(static_cast<int>(id));
      }
      if (c + 1 < w && comp(r, c + 1) != comp(r, c)) {
        adjacent[id].insert(comp(r, c + 1));
        adjacent[static_cast<std::size_t>(comp(r, c + 1))].insert(static_cast<int>(id));
      }
    }
  }

  // The largest component of each cluster is never an orphan.
  std::vector<int> largest(static_cast<std::size_t>(clusters.maxCoeff() + 1), -1);
  for (std::size_t i = 0; i < nc; ++i) {
    int& best = largest[static_cast<std::size_t>(cluster_of[i])];
    if (best < 0 || size[i] > size[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  std::vector<int> orphans;
  for (std::size_t i = 0; i < nc; ++i) {
    if (largest[static_cast<std::size_t>(cluster_of[i])] != static_cast<int>(i) && size[i] < min_size) {
      orphans.push_back(static_cast<int>(i));
    }
  }
  std::stable_sort(orphans.begin(), orphans.end(), [&](int a, int b) {
    return size[static_cast<std::size_t>(a)] < size[static_cast<std::size_t>(b)];
  });

  std::vector<int> parent(nc);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (int o : orphans) {
    const int root = find(o);
    const auto ur = static_cast<std::size_t>(root);
    const double mean = sum[ur] / static_cast<double>(size[ur]);
    int target = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int n : adjacent[ur]) {
      const int nr = find(n);
      if (nr == root) continue;
      const auto un = static_cast<std::size_t>(nr);
      const double d = std::abs(sum[un] / static_cast<double>(size[un]) - mean);
      if (d < best || (d == best && nr < target)) {
        best = d;
        target = nr;
      }
    }
    if (target < 0) continue;
    const auto ut = static_cast<std::size_t>(target);
    parent[ur] = target;
    size[ut] += size[ur];
    sum[ut] += sum[ur];
    adjacent[ut].insert(adjacent[ur].begin(), adjacent[ur].end());
    adjacent[ur].clear();
  }

  // Compact relabelling in raster order of first appearance.
  std::vector<int> final_id(nc, -1);
  int next = 0;
  out.resize(h, w);
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      const auto root = static_cast<std::size_t>(find(comp(r, c)));
      if (final_id[root] < 0) final_id[root] = next++;
      out(r, c) = final_id[root];
    }
  }
}

}  // namespace

SuperpixelMap slic_segment(const GrayImage& img, const SlicParams& params) {
  const Index h = img.height();
  const Index w = img.width();
  if (params.n_target < 2) throw ValidationError("n_target must be at least 2");
  if (static_cast<Index>(params.n_target) > h * w) {
    throw ValidationError("n_target " + std::to_string(params.n_target) +
                          " exceeds pixel count " + std::to_string(h * w));
  }
  if (!(params.compactness > 0.0)) throw ValidationError("compactness must be positive");
  if (params.iters < 1) throw ValidationError("iters must be at least 1");

  const RowMatrixXd& px = img.pixels();
  const double step = std::sqrt(static_cast<double>(h * w) / params.n_target);
  Rng rng(params.seed);
  std::vector<Center> centers = grid_centers(px, params.n_target, step, rng);
  LabelMatrix clusters(h, w);
  const double spatial_weight = (params.compactness / step) * (params.compactness / step);
  kmeans(px, centers, clusters, spatial_weight, params.iters);

  SuperpixelMap sp;
  const auto min_size = std::max<Index>(1, static_cast<Index>(step * step / 16.0));
  enforce_connectivity(px, clusters, min_size, sp.labels);
  sp.n_segments = sp.labels.maxCoeff() + 1;
  sp.centroids.assign(static_cast<std::size_t>(sp.n_segments), Segment{});
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      Segment& s = sp.centroids[static_cast<std::size_t>(sp.labels(r, c))];
      s.row += static_cast<double>(r);
      s.col += static_cast<double>(c);
      s.mean_intensity += px(r, c);
      ++s.pixels;
    }
  }
  for (Segment& s : sp.centroids) {
    const double n = static_cast<double>(s.pixels);
    s.row /= n;
    s.col /= n;
    s.mean_intensity /= n;
  }
  return sp;
}

GrayImage apply_mask(const GrayImage& img, const SuperpixelMap& sp, const Mask& mask, double fill) {
  if (mask.size() != static_cast<std::size_t>(sp.n_segments)) {
    throw ValidationError("mask length " + std::to_string(mask.size()) + " does not match " +
                          std::to_string(sp.n_segments) + " superpixels");
  }
  if (!(fill >= 0.0 && fill <= 1.0)) throw ValidationError("fill must lie in [0,1]");
  if (sp.height() != img.height() || sp.width() != img.width()) {
    throw ShapeError("superpixel map does not match image dimensions");
  }
  RowMatrixXd out = img.pixels();
  for (Index i = 0; i < out.size(); ++i) {
    if (mask[static_cast<std::size_t>(sp.labels.data()[i])] == 0) out.data()[i] = fill;
  }
  return GrayImage(std::move(out));
}

RowMatrixXd paint_segments(const SuperpixelMap& sp, const Eigen::VectorXd& values) {
  if (values.size() != sp.n_segments) throw ValidationError("one value per superpixel required");
  RowMatrixXd out(sp.height(), sp.width());
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = values(sp.labels.data()[i]);
  return out;
}

Tensor segment_overlay(const SuperpixelMap& sp, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::array<double, 3>> colors(static_cast<std::size_t>(sp.n_segments));
  for (auto& c : colors) c = {rng.uniform(), rng.uniform(), rng.uniform()};
  Tensor::Vector rgb(3 * sp.labels.size());
  for (Index i = 0; i < sp.labels.size(); ++i) {
    const auto& c = colors[static_cast<std::size_t>(sp.labels.data()[i])];
    rgb.segment<3>(3 * i) << c[0], c[1], c[2];
  }
  return Tensor({sp.height(), sp.width(), 3}, std::move(rgb));
}

std::vector<Index> segment_overlap(
    const SuperpixelMap& sp,
    const Eigen::Ref<const ByteMatrix>& region) {
  if (region.rows() != sp.height() || region.cols() != sp.width()) {
    throw ShapeError("region does not match superpixel map");
  }
  std::vector<Index> overlap(static_cast<std::size_t>(sp.n_segments), 0);
  for (Index r = 0; r < sp.height(); ++r) {
    for (Index c = 0; c < sp.width(); ++c) {
      if (region(r, c) != 0) ++overlap[static_cast<std::size_t>(sp.labels(r, c))];
    }
  }
  return overlap;
}

}  // namespace ctxai
