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

#include <algorithm>
#include <numeric>

#include "ctxai/errors.hpp"
#include "ctxai/numerics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ctxai;

namespace {

WlsProblem random_problem(std::uint64_t seed, int rows, int cols) {
  Rng rng(seed);
  WlsProblem p;
  p.design.resize(rows, cols);
  p.targets.resize(rows);
  p.weights.resize(rows);
  for (int r = 0; r < rows; ++r) {
    p.design(r, 0) = 1.0;
    for (int c = 1; c < cols; ++c) p.design(r, c) = rng.normal();
    p.targets(r) = rng.normal() * 3.0;
    p.weights(r) = rng.uniform(0.1, 2.0);
  }
  return p;
}

Eigen::VectorXd oracle_solve(const WlsProblem& p) {
  std::vector<std::vector<double>> x(static_cast<std::size_t>(p.rows()));
  std::vector<double> y(p.targets.data(), p.targets.data() + p.rows());
  std::vector<double> w(p.weights.data(), p.weights.data() + p.rows());
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    for (Eigen::Index c = 0; c < p.cols(); ++c) x[static_cast<std::size_t>(r)].push_back(p.design(r, c));
  const auto b = oracle::normal_equations(x, y, w);
  return Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
}

}  // namespace

TEST_CASE("wls_solve exact interpolation") {
  WlsProblem p{Eigen::MatrixXd{{1, 0}, {1, 1}}, Eigen::VectorXd{{0, 1}}, Eigen::VectorXd{{1, 1}}};
  const Eigen::VectorXd b = wls_solve(p);
  CHECK(b(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("wls_solve weight aggregation") {
  WlsProblem dup{Eigen::MatrixXd{{1, 0}, {1, 0}, {1, 1}, {1, 2}},
                 Eigen::VectorXd{{0.5, 0.5, 1, 3}}, Eigen::VectorXd{{2, 0, 1, 1}}};
  WlsProblem single{Eigen::MatrixXd{{1, 0}, {1, 1}, {1, 2}}, Eigen::VectorXd{{0.5, 1, 3}},
                    Eigen::VectorXd{{2, 1, 1}}};
  CHECK((wls_solve(dup) - wls_solve(single)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("wls_solve matches Gaussian elimination on a random 50x6 system") {
  const WlsProblem p = random_problem(3, 50, 6);
  const Eigen::VectorXd b = wls_solve(p);
  CHECK((b - oracle_solve(p)).cwiseAbs().maxCoeff() < 1e-9);
  // Normal-equation residual gradient.
  const Eigen::VectorXd grad = p.design.transpose() * p.weights.asDiagonal() * (p.targets - p.design * b);
  CHECK(grad.norm() <= 1e-8);
}

TEST_CASE("wls_solve is invariant under row permutation") {
  const WlsProblem p = random_problem(17, 40, 5);
  Rng rng(4);
  std::vector<int> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  for (int trial = 0; trial < 10; ++trial) {
    for (int i = 39; i > 0; --i) std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
    WlsProblem q = p;
    for (int i = 0; i < 40; ++i) {
      q.design.row(i) = p.design.row(perm[i]);
      q.targets(i) = p.targets(perm[i]);
      q.weights(i) = p.weights(perm[i]);
    }
    CHECK((wls_solve(q) - wls_solve(p)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("wls_solve reports rank deficiency") {
  WlsProblem p = random_problem(5, 30, 4);
  p.design.col(3) = p.design.col(2) * 2.0;
  try {
    wls_solve(p);
    FAIL("expected RankDeficiencyError");
  } catch (const RankDeficiencyError& e) {
    CHECK(e.effective_rank() == 3);
  }
}

TEST_CASE("WlsProblem validation") {
  WlsProblem p = random_problem(5, 10, 3);
  p.weights(0) = -1.0;
  CHECK_THROWS_AS(wls_solve(p), ValidationError);
  p = random_problem(5, 10, 3);
  p.weights.setZero();
  p.weights(0) = p.weights(1) = 1.0;
  CHECK_THROWS_AS(wls_solve(p), ValidationError);
  p = random_problem(5, 10, 3);
  p.targets.resize(9);
  CHECK_THROWS_AS(wls_solve(p), ValidationError);
}

TEST_CASE("lasso with lambda 0 reduces to weighted least squares") {
  const WlsProblem p = random_problem(3, 50, 6);
  const LassoResult fit = lasso_fit(p, 0.0);
  CHECK(fit.converged);
  CHECK((fit.coefficients - wls_solve(p)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("lasso at lambda_max zeroes every penalized coefficient") {
  const WlsProblem p = random_problem(8, 60, 5);
  const double lmax = lasso_lambda_max(p);
  for (double scale : {1.0, 1.5, 10.0}) {
    const LassoResult fit = lasso_fit(p, scale * lmax);
    for (Eigen::Index j = 1; j < p.cols(); ++j) CHECK(fit.coefficients(j) == 0.0);
    // Intercept is then the weighted mean of the targets.
    CHECK(fit.coefficients(0) == doctest::Approx(p.weights.dot(p.targets) / p.weights.sum()));
  }
  // Just below the threshold at least one coefficient activates.
  const LassoResult below = lasso_fit(p, 0.99 * lmax);
  CHECK(below.coefficients.tail(p.cols() - 1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("lasso recovers a sparse support and satisfies KKT") {
  Rng rng(21);
  const Eigen::VectorXd truth{{0.0, 3.0, 0.0, -2.0, 0.0}};
  WlsProblem p;
  p.design.resize(200, 6);
  p.targets.resize(200);
  p.weights = Eigen::VectorXd::Ones(200);
  for (int r = 0; r < 200; ++r) {
    p.design(r, 0) = 1.0;
    for (int c = 1; c < 6; ++c) p.design(r, c) = rng.normal();
    p.targets(r) = 0.5 + p.design.row(r).tail(5).dot(truth) + 0.05 * rng.normal();
  }
  const double lambda = 0.01;
  const LassoResult fit = lasso_fit(p, lambda);
  REQUIRE(fit.converged);
  // Support {2, 4} in 1-based feature numbering.
  for (int j = 0; j < 5; ++j) CHECK((fit.coefficients(j + 1) != 0.0) == (truth(j) != 0.0));

  const Eigen::VectorXd corr = weighted_residual_correlation(p, fit.coefficients);
  CHECK(std::abs(corr(0)) < 1e-9);
  for (int j = 1; j < 6; ++j) {
    CHECK(std::abs(corr(j)) <= lambda + 1e-6);
    if (fit.coefficients(j) != 0.0) {
      CHECK(corr(j) == doctest::Approx(lambda * (fit.coefficients(j) > 0 ? 1 : -1)).epsilon(1e-6));
    }
  }
}

TEST_CASE("lasso KKT property over random problems") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const WlsProblem p = random_problem(seed, 40, 7);
    const double lambda = lasso_lambda_max(p) * Rng(seed).uniform(0.01, 0.9);
    const LassoResult fit = lasso_fit(p, lambda);
    REQUIRE(fit.converged);
    const Eigen::VectorXd corr = weighted_residual_correlation(p, fit.coefficients);
    for (int j = 1; j < 7; ++j) {
      CHECK(std::abs(corr(j)) <= lambda + 1e-6);
      if (fit.coefficients(j) != 0.0) {
        CHECK(std::abs(corr(j) - std::copysign(lambda, fit.coefficients(j))) <= 1e-6);
      }
    }
  }
}

TEST_CASE("lasso reports non-convergence instead of failing") {
  const WlsProblem p = random_problem(3, 50, 6);
  const LassoResult fit = lasso_fit(p, 0.0, 1e-300, 2);
  CHECK_FALSE(fit.converged);
  CHECK(fit.iterations == 2);
  CHECK_THROWS_AS(lasso_fit(p, -1.0), ValidationError);
}

TEST_CASE("sigmoid") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
  const double tiny = sigmoid(-40.0);
  CHECK(tiny > 0.0);
  CHECK(tiny <= 1e-17);
  CHECK(std::isfinite(sigmoid(-1000.0)));
  CHECK(sigmoid(1000.0) == 1.0);
  for (double z = -30; z < 30; z += 0.25) CHECK(sigmoid(z) < sigmoid(z + 0.25));
}

TEST_CASE("Rng streams are reproducible and seed dependent") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 10000; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  CHECK(differs);
  // SplitMix64 reference value for seed 0.
  CHECK(Rng(0).next_u64() == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("Rng uniform draws stay in range") {
  Rng rng(1);
  double lo = 1, hi = 0, sum = 0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
    CHECK(rng.uniform_index(7) < 7);
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
}
