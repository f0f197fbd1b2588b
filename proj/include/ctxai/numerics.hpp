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

#ifndef CTXAI_NUMERICS_HPP
#define CTXAI_NUMERICS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace ctxai {

// SplitMix64 stream. Bit-identical across platforms for the integer and
// uniform draws; normal() goes through libm.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), unbiased (rejection on the top range).
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller (one draw per call, no cached pair).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t state_;
};

// Mixes a base seed with a stream index so sub-streams are decorrelated.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng mix(seed ^ (stream * 0xD1B54A32D192ED03ULL));
  return mix.next_u64();
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

// Weighted least squares data. Column 0 of `design` is the intercept when a
// problem is handed to lasso_fit; wls_solve treats all columns alike.
struct WlsProblem {
  Eigen::MatrixXd design;
  Eigen::VectorXd targets;
  Eigen::VectorXd weights;

  Eigen::Index rows() const { return design.rows(); }
  Eigen::Index cols() const { return design.cols(); }

  // Throws ValidationError on shape mismatch, negative or non-finite weights,
  // or fewer strictly positive weights than columns.
  void validate() const;
};

inline constexpr double kRidgeJitter = 1e-10;
inline constexpr double kMaxCondition = 1e12;

// argmin_b sum_m w_m (y_m - x_m . b)^2 through the jittered normal equations.
// Throws RankDeficiencyError when the condition number exceeds 1e12.
Eigen::VectorXd wls_solve(const WlsProblem& p);

struct LassoResult {
  Eigen::VectorXd coefficients;
  bool converged = false;
  int iterations = 0;
};

// Weighted Lasso by cyclic coordinate descent with covariance updates:
//
//   min_b  1/(2 sum w) * sum_m w_m (y_m - x_m . b)^2 + lambda * sum_{j>0} |b_j|
//
// The intercept (column 0) is never penalized. Stops once the largest
// coefficient change in a sweep drops below `tol`.
LassoResult lasso_fit(const WlsProblem& p, double lambda, double tol = 1e-12,
                      int max_iter = 100000);

// Smallest lambda for which every penalized coefficient is zero.
double lasso_lambda_max(const WlsProblem& p);

// c_j = sum_m w_m x_mj r_m / sum w with r = y - X b. At a Lasso optimum,
// |c_j| <= lambda with equality wherever b_j != 0.
Eigen::VectorXd weighted_residual_correlation(const WlsProblem& p,
                                              const Eigen::VectorXd& beta);

}  // namespace ctxai

#endif  // CTXAI_NUMERICS_HPP
