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

#include "ctxai/explainers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <numeric>
#include <string>

#include "ctxai/numerics.hpp"
#include "ctxai/parallel.hpp"

namespace ctxai {

using Eigen::Index;

std::string_view method_name(AttributionMethod m) {
  switch (m) {
    case AttributionMethod::kLime:
      return "lime";
    case AttributionMethod::kKernelShap:
      return "kernel-shap";
    case AttributionMethod::kExactShapley:
      return "exact-shapley";
  }
  return "unknown";
}

namespace {

int coalition_size(const Mask& m) { return static_cast<int>(std::count(m.begin(), m.end(), 1)); }

void check_features(int n_features, int n_samples) {
  if (n_features < 1) throw ValidationError("need at least one feature");
  if (n_samples < n_features + 2) {
    throw ValidationError("need at least N + 2 = " + std::to_string(n_features + 2) +
                          " coalitions, got " + std::to_string(n_samples));
  }
}

Mask random_subset(int n, int size, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Mask m(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < size; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    m[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = 1;
  }
  return m;
}

Mask mask_from_bits(std::uint64_t bits, int n) {
  Mask m(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = (bits >> i) & 1U;
  return m;
}

}  // namespace

double lime_kernel(const Mask& mask, double sigma) {
  const double d2 = static_cast<double>(mask.size()) - coalition_size(mask);
  return std::exp(-d2 / (sigma * sigma));
}

double shapley_kernel(int n_features, int size) {
  if (size <= 0 || size >= n_features) return std::numeric_limits<double>::infinity();
  // C(N, s) built incrementally in floating point; exact for N <= 60 or so.
  double binom = 1.0;
  for (int i = 1; i <= size; ++i) binom = binom * (n_features - size + i) / i;
  return (n_features - 1.0) / (binom * size * (n_features - size));
}

std::vector<Mask> sample_coalitions(int n_features, int n_samples, std::uint64_t seed,
                                    CoalitionScheme scheme) {
  check_features(n_features, n_samples);
  if (scheme == CoalitionScheme::kShapleyKernel && n_features < 2) {
    throw ValidationError("Shapley-kernel sampling needs at least two features");
  }
  const auto n = static_cast<std::size_t>(n_features);
  std::vector<Mask> masks;
  masks.reserve(static_cast<std::size_t>(n_samples));
  masks.emplace_back(n, 1);
  masks.emplace_back(n, 0);
  Rng rng(seed);

  // Cumulative size distribution p(s) proportional to (N-1)/(s(N-s)).
  std::vector<double> size_cdf;
  if (scheme == CoalitionScheme::kShapleyKernel) {
    double total = 0.0;
    for (int s = 1; s < n_features; ++s) {
      total += (n_features - 1.0) / (static_cast<double>(s) * (n_features - s));
      size_cdf.push_back(total);
    }
    for (double& c : size_cdf) c /= total;
  }

  while (masks.size() < static_cast<std::size_t>(n_samples)) {
    if (scheme == CoalitionScheme::kBernoulli) {
      Mask m(n);
      for (auto& bit : m) bit = static_cast<std::uint8_t>(rng.next_u64() >> 63);
      masks.push_back(std::move(m));
    } else {
      const double u = rng.uniform();
      const auto it = std::upper_bound(size_cdf.begin(), size_cdf.end(), u);
      const int size = 1 + static_cast<int>(std::min<std::ptrdiff_t>(
                               it - size_cdf.begin(), static_cast<std::ptrdiff_t>(size_cdf.size()) - 1));
      masks.push_back(random_subset(n_features, size, rng));
    }
  }
  return masks;
}

std::vector<double> evaluate_coalitions(const CoalitionGame& game, const std::vector<Mask>& masks,
                                        unsigned threads) {
  std::vector<double> values(masks.size(), 0.0);
  std::vector<std::exception_ptr> errors(masks.size());
  parallel_for(masks.size(), threads, [&](std::size_t i) {
    try {
      values[i] = game(masks[i]);
      if (!std::isfinite(values[i])) throw Error("scorer returned a non-finite value");
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw ExplanationError(e.what(), i);
    } catch (...) {
      throw ExplanationError("unknown scorer failure", i);
    }
  }
  return values;
}

Attribution lime_explain(const CoalitionGame& game, int n_features, const LimeOptions& opts) {
  if (n_features < 2) throw ValidationError("LIME needs at least two superpixels");
  if (!(opts.sigma > 0.0)) throw ValidationError("sigma must be positive");
  if (!(opts.lambda_ratio >= 0.0)) throw ValidationError("lambda_ratio must be nonnegative");
  const std::vector<Mask> masks =
      sample_coalitions(n_features, opts.samples, opts.seed, CoalitionScheme::kBernoulli);
  const std::vector<double> scores = evaluate_coalitions(game, masks, opts.threads);

  WlsProblem p;
  const auto m = static_cast<Index>(masks.size());
  p.design.resize(m, n_features + 1);
  p.targets.resize(m);
  p.weights.resize(m);
  for (Index i = 0; i < m; ++i) {
    const Mask& mask = masks[static_cast<std::size_t>(i)];
    p.design(i, 0) = 1.0;
    for (int j = 0; j < n_features; ++j) p.design(i, j + 1) = mask[static_cast<std::size_t>(j)];
    p.targets(i) = scores[static_cast<std::size_t>(i)];
    p.weights(i) = lime_kernel(mask, opts.sigma);
  }
  const double lambda = opts.lambda ? *opts.lambda : opts.lambda_ratio * lasso_lambda_max(p);
  const LassoResult fit = lasso_fit(p, lambda, opts.tol, opts.max_iter);

  Attribution out;
  out.method = AttributionMethod::kLime;
  out.intercept = fit.coefficients(0);
  out.weights = fit.coefficients.tail(n_features);
  out.n_samples = static_cast<int>(m);
  out.converged = fit.converged;
  out.lambda = lambda;
  return out;
}

Attribution shap_explain(const CoalitionGame& game, int n_features, const ShapOptions& opts) {
  if (n_features < 2) throw ValidationError("Kernel SHAP needs at least two superpixels");
  check_features(n_features, opts.samples);

  std::vector<Mask> masks;
  std::vector<double> kernel;
  const bool enumerate =
      n_features <= kMaxExactFeatures && static_cast<std::uint64_t>(opts.samples) >= (std::uint64_t{1} << n_features);
  if (enumerate) {
    const std::uint64_t full = (std::uint64_t{1} << n_features) - 1;
    masks.push_back(mask_from_bits(full, n_features));
    masks.push_back(mask_from_bits(0, n_features));
    for (std::uint64_t bits = 1; bits < full; ++bits) masks.push_back(mask_from_bits(bits, n_features));
  } else {
    masks = sample_coalitions(n_features, opts.samples, opts.seed, CoalitionScheme::kShapleyKernel);
  }
  const std::vector<double> scores = evaluate_coalitions(game, masks, opts.threads);
  const double f_full = scores[0];
  const double f_empty = scores[1];
  const double delta = f_full - f_empty;

  // Eliminate the last weight through the efficiency constraint:
  //   w_last = delta - sum_{j<last} w_j
  // and regress y - f_empty - z_last*delta on (z_j - z_last).
  const int last = n_features - 1;
  const auto rows = static_cast<Index>(masks.size() - 2);
  WlsProblem p;
  p.design.resize(rows, last);
  p.targets.resize(rows);
  p.weights.resize(rows);
  for (Index r = 0; r < rows; ++r) {
    const Mask& mask = masks[static_cast<std::size_t>(r) + 2];
    const double z_last = mask[static_cast<std::size_t>(last)];
    for (int j = 0; j < last; ++j) p.design(r, j) = mask[static_cast<std::size_t>(j)] - z_last;
    p.targets(r) = scores[static_cast<std::size_t>(r) + 2] - f_empty - z_last * delta;
    p.weights(r) = enumerate ? shapley_kernel(n_features, coalition_size(mask)) : 1.0;
  }
  const Eigen::VectorXd head = wls_solve(p);

  Attribution out;
  out.method = AttributionMethod::kKernelShap;
  out.intercept = f_empty;
  out.weights.resize(n_features);
  out.weights.head(last) = head;
  out.weights(last) = delta - head.sum();
  out.n_samples = static_cast<int>(masks.size());
  return out;
}

Attribution exact_shapley(const CoalitionGame& game, int n_features, unsigned threads) {
  if (n_features < 1) throw ValidationError("need at least one feature");
  if (n_features > kMaxExactFeatures) {
    throw ResourceError("exact Shapley enumeration limited to " + std::to_string(kMaxExactFeatures) +
                        " features, got " + std::to_string(n_features));
  }
  const std::uint64_t count = std::uint64_t{1} << n_features;
  std::vector<Mask> masks;
  masks.reserve(count);
  for (std::uint64_t bits = 0; bits < count; ++bits) masks.push_back(mask_from_bits(bits, n_features));
  const std::vector<double> value = evaluate_coalitions(game, masks, threads);

  // |S|! (N-|S|-1)! / N! = 1 / (N * C(N-1, |S|)).
  std::vector<double> coeff(static_cast<std::size_t>(n_features));
  double binom = 1.0;
  for (int s = 0; s < n_features; ++s) {
    coeff[static_cast<std::size_t>(s)] = 1.0 / (n_features * binom);
    binom = binom * (n_features - 1 - s) / (s + 1);
  }

  Attribution out;
  out.method = AttributionMethod::kExactShapley;
  out.weights = Eigen::VectorXd::Zero(n_features);
  for (std::uint64_t bits = 0; bits < count; ++bits) {
    const int size = std::popcount(bits);
    for (int i = 0; i < n_features; ++i) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      if (bits & bit) continue;
      out.weights(i) += coeff[static_cast<std::size_t>(size)] * (value[bits | bit] - value[bits]);
    }
  }
  out.intercept = value[0];
  out.n_samples = static_cast<int>(count);
  return out;
}

CoalitionGame masked_image_game(Scorer scorer, const GrayImage& img, const SuperpixelMap& sp,
                                double fill) {
  if (sp.height() != img.height() || sp.width() != img.width()) {
    throw ShapeError("superpixel map does not match image dimensions");
  }
  if (!(fill >= 0.0 && fill <= 1.0)) throw ValidationError("fill must lie in [0,1]");
  auto image = std::make_shared<const GrayImage>(img);
  auto segments = std::make_shared<const SuperpixelMap>(sp);
  return [scorer = std::move(scorer), image, segments, fill](const Mask& mask) {
    return scorer(apply_mask(*image, *segments, mask, fill));
  };
}

Attribution lime_explain(const Scorer& scorer, const GrayImage& img, const SuperpixelMap& sp,
                         const LimeOptions& opts, double fill) {
  return lime_explain(masked_image_game(scorer, img, sp, fill), sp.n_segments, opts);
}

Attribution shap_explain(const Scorer& scorer, const GrayImage& img, const SuperpixelMap& sp,
                         const ShapOptions& opts, double fill) {
  return shap_explain(masked_image_game(scorer, img, sp, fill), sp.n_segments, opts);
}

Attribution exact_shapley(const Scorer& scorer, const GrayImage& img, const SuperpixelMap& sp,
                          double baseline, unsigned threads) {
  return exact_shapley(masked_image_game(scorer, img, sp, baseline), sp.n_segments, threads);
}

}  // namespace ctxai
