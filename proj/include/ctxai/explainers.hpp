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

#ifndef CTXAI_EXPLAINERS_HPP
#define CTXAI_EXPLAINERS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ctxai/micronet.hpp"
#include "ctxai/superpixel.hpp"

namespace ctxai {

// Set function over superpixels: the black box evaluated on a coalition.
// Must be safe to call concurrently when threads > 1.
using CoalitionGame = std::function<double(const Mask&)>;

enum class CoalitionScheme {
  kBernoulli,      // every feature kept independently with probability 1/2
  kShapleyKernel,  // size s ~ (N-1)/(s(N-s)), members uniform at that size
};

enum class AttributionMethod { kLime, kKernelShap, kExactShapley };
std::string_view method_name(AttributionMethod m);

struct Attribution {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  AttributionMethod method = AttributionMethod::kLime;
  int n_samples = 0;
  bool converged = true;
  double lambda = 0.0;  // Lasso penalty actually used (LIME only)
};

// M masks: all-ones, all-zeros, then M - 2 draws from `scheme`.
// Requires M >= N + 2.
std::vector<Mask> sample_coalitions(int n_features, int n_samples, std::uint64_t seed,
                                    CoalitionScheme scheme);

// Evaluates the game on every mask. Results are in mask order whatever the
// thread count; a throwing evaluation surfaces as ExplanationError carrying
// the lowest failing index.
std::vector<double> evaluate_coalitions(const CoalitionGame& game, const std::vector<Mask>& masks,
                                        unsigned threads = 1);

inline constexpr int kDefaultSamples = 1000;
inline constexpr double kDefaultSigma = 2.0;
inline constexpr double kDefaultLambdaRatio = 0.01;
inline constexpr int kMaxExactFeatures = 20;

struct LimeOptions {
  int samples = kDefaultSamples;
  double sigma = kDefaultSigma;
  // Penalty as a fraction of lambda_max, unless `lambda` pins it absolutely.
  double lambda_ratio = kDefaultLambdaRatio;
  std::optional<double> lambda;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double tol = 1e-12;
  int max_iter = 100000;
};

struct ShapOptions {
  int samples = kDefaultSamples;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Sample weight exp(-d^2 / sigma^2), d^2 = number of occluded features.
double lime_kernel(const Mask& mask, double sigma);

// Shapley kernel for one coalition of size s: (N-1) / (C(N,s) s (N-s)).
// Infinite at s = 0 and s = N.
double shapley_kernel(int n_features, int size);

// Weighted Lasso surrogate over Bernoulli-sampled coalitions.
Attribution lime_explain(const CoalitionGame& game, int n_features, const LimeOptions& opts = {});

// Kernel SHAP. The empty and full coalitions enter as equality constraints
// (intercept = f(empty), intercept + sum w = f(full)). When samples >= 2^N
// (N <= 20) every coalition is enumerated with its exact kernel weight;
// otherwise coalitions are drawn from the Shapley kernel and weighted equally.
Attribution shap_explain(const CoalitionGame& game, int n_features, const ShapOptions& opts = {});

// Brute-force Shapley values over all 2^N coalitions. Throws ResourceError
// for N > 20.
Attribution exact_shapley(const CoalitionGame& game, int n_features, unsigned threads = 1);

// Adapts an image scorer to a coalition game by occluding superpixels.
CoalitionGame masked_image_game(Scorer scorer, const GrayImage& img, const SuperpixelMap& sp,
                                double fill = 0.0);

Attribution lime_explain(const Scorer& scorer, const GrayImage& img, const SuperpixelMap& sp,
                         const LimeOptions& opts = {}, double fill = 0.0);
Attribution shap_explain(const Scorer& scorer, const GrayImage& img, const SuperpixelMap& sp,
                         const ShapOptions& opts = {}, double fill = 0.0);
// `baseline` is the fill intensity standing in for absent superpixels.
Attribution exact_shapley(const Scorer& scorer, const GrayImage& img, const SuperpixelMap& sp,
                          double baseline = 0.0, unsigned threads = 1);

}  // namespace ctxai

#endif  // CTXAI_EXPLAINERS_HPP
