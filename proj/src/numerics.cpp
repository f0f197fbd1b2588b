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

#include "ctxai/numerics.hpp"

#include <algorithm>
#include <string>

#include "ctxai/errors.hpp"

namespace ctxai {

void WlsProblem::validate() const {
  if (targets.size() != design.rows() || weights.size() != design.rows()) {
    throw ValidationError("design, targets and weights must have equal row counts");
  }
  if (design.cols() < 1) throw ValidationError("design has no columns");
  if (!design.allFinite() || !targets.allFinite() || !weights.allFinite()) {
    throw ValidationError("regression inputs must be finite");
  }
  if ((weights.array() < 0.0).any()) throw ValidationError("sample weights must be nonnegative");
  const auto positive = (weights.array() > 0.0).count();
  if (positive < design.cols()) {
    throw ValidationError("need at least " + std::to_string(design.cols()) +
                          " positively weighted samples, got " + std::to_string(positive));
  }
}

Eigen::VectorXd wls_solve(const WlsProblem& p) {
  p.validate();
  const Eigen::MatrixXd wx = p.design.transpose() * p.weights.asDiagonal();
  const Eigen::MatrixXd normal = wx * p.design;
  Eigen::MatrixXd jittered = normal;
  jittered.diagonal().array() += kRidgeJitter;
  const Eigen::VectorXd rhs = wx * p.targets;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jittered, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  const double bottom = ev.minCoeff();
  if (!(bottom > 0.0) || top / bottom > kMaxCondition) {
    const auto rank = (ev.array() > top / kMaxCondition).count();
    throw RankDeficiencyError("weighted normal matrix is singular", rank);
  }

  // Factor the jittered matrix, refine against the exact one.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(jittered);
  Eigen::VectorXd beta = ldlt.solve(rhs);
  for (int step = 0; step < 3; ++step) beta += ldlt.solve(rhs - normal * beta);
  return beta;
}

double lasso_lambda_max(const WlsProblem& p) {
  p.validate();
  const double wsum = p.weights.sum();
  const double y_mean = p.weights.dot(p.targets) / wsum;
  if (p.cols() < 2) return 0.0;
  // With only the intercept active the residual is y - weighted mean(y).
  const Eigen::VectorXd r = p.targets.array() - y_mean;
  const Eigen::VectorXd c =
      p.design.rightCols(p.cols() - 1).transpose() * (p.weights.cwiseProduct(r)) / wsum;
  return c.cwiseAbs().maxCoeff();
}

Eigen::VectorXd weighted_residual_correlation(const WlsProblem& p,
                                              const Eigen::VectorXd& beta) {
  const Eigen::VectorXd r = p.targets - p.design * beta;
  return p.design.transpose() * p.weights.cwiseProduct(r) / p.weights.sum();
}

LassoResult lasso_fit(const WlsProblem& p, double lambda, double tol, int max_iter) {
  p.validate();
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be nonnegative");
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  if (max_iter < 1) throw ValidationError("max_iter must be at least 1");

  const Eigen::Index n = p.cols();
  const double wsum = p.weights.sum();
  const Eigen::MatrixXd wx = p.design.transpose() * p.weights.asDiagonal();
  const Eigen::MatrixXd gram = wx * p.design / wsum;
  const Eigen::VectorXd xty = wx * p.targets / wsum;

  LassoResult result;
  result.coefficients = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd& beta = result.coefficients;
  if (n > 1 && (p.design.col(0).array() == 1.0).all() && lambda >= lasso_lambda_max(p)) {
    beta(0) = p.weights.dot(p.targets) / wsum;
    result.converged = true;
    return result;
  }
  // grad = X'W(y - Xb)/sum w, kept current after every coordinate move.
  Eigen::VectorXd grad = xty;

  for (int it = 1; it <= max_iter; ++it) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double g = gram(j, j);
      if (g <= 0.0) continue;  // column is identically zero under the weights
      const double z = grad(j) + g * beta(j);
      double updated;
      if (j == 0) {
        updated = z / g;
      } else {
        const double shrunk = std::max(std::abs(z) - lambda, 0.0);
        updated = std::copysign(shrunk, z) / g;
      }
      const double delta = updated - beta(j);
      if (delta != 0.0) {
        grad -= gram.col(j) * delta;
        beta(j) = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    result.iterations = it;
    if (max_change < tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace ctxai
