// Copyright 2026 The Crossrec Authors.
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

#include "crossrec/guided_matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace crossrec {

Matrix build_cost(const Matrix& source, const Matrix& target) {
  if (source.rows() != target.rows() || source.cols() != target.cols()) {
    throw_invalid("cost blocks differ in shape: " + std::to_string(source.rows()) + "x" +
                  std::to_string(source.cols()) + " vs " + std::to_string(target.rows()) + "x" +
                  std::to_string(target.cols()));
  }
  const Eigen::Index n = source.rows();
  Matrix cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      cost(i, j) = (source.row(i) - target.row(j)).squaredNorm();
    }
  }
  return cost;
}

Matrix apply_mask(const Matrix& cost, std::span<const std::pair<int, int>> pairs) {
  Matrix masked = cost;
  std::vector<char> row_used(cost.rows(), 0);
  std::vector<char> col_used(cost.cols(), 0);
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= cost.rows() || j >= cost.cols()) {
      throw_invalid("overlapped pair (" + std::to_string(i) + ", " + std::to_string(j) +
                    ") lies outside the batch");
    }
    if (row_used[i] || col_used[j]) {
      throw_invalid("overlapped pairs repeat a row or column");
    }
    row_used[i] = col_used[j] = 1;
    masked(i, j) = 0.0;
  }
  return masked;
}

namespace {

constexpr int kHalvings = 8;
// Near the optimum the dual objective moves by less than its own rounding
// error, so a Newton trial may exceed the base value by this much.
constexpr double kObjectiveSlack = 1e-13;
constexpr double kPseudoInverseCutoff = 1e-12;

void check_cost(const Matrix& cost) {
  if (cost.rows() != cost.cols() || cost.rows() == 0) {
    throw_invalid("matching needs a non-empty square cost matrix");
  }
  if (!cost.allFinite()) throw_invalid("cost matrix contains NaN or Inf");
}

// log sum_k exp((w_k - Q_kj)/eps) for every column j.
Vector column_log_normalizers(const Matrix& cost, const Vector& omega, double epsilon) {
  const Eigen::Index n = cost.rows();
  Vector out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) peak = std::max(peak, (omega(k) - cost(k, j)) / epsilon);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) sum += std::exp((omega(k) - cost(k, j)) / epsilon - peak);
    out(j) = peak + std::log(sum);
  }
  return out;
}

double sup_distance(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Newton direction for the pinned smoothed dual at `omega`. Gradient is
// (row sums of the plan - 1), Hessian (diag(row sums) - P P^T) / eps, both
// restricted to the free coordinates. The fast path factorizes directly;
// `robust` switches to a thresholded pseudo-inverse, needed when blocks of
// rows whose plan mass has underflowed decouple and leave null directions.
// Returns false if the solve fails.
bool newton_direction(const Matrix& cost, const Vector& omega, double epsilon, bool robust,
                      Vector* step) {
  const Eigen::Index n = cost.rows();
  if (n < 2) return false;
  const Matrix plan = recover_plan(cost, omega, epsilon);
  const Vector rows = plan.rowwise().sum();
  const Eigen::Index m = n - 1;
  Eigen::MatrixXd hessian = -(plan.topRows(m) * plan.topRows(m).transpose());
  hessian.diagonal() += rows.head(m);
  hessian /= epsilon;
  const Eigen::VectorXd gradient = rows.head(m).array() - 1.0;
  Eigen::VectorXd d;
  if (!robust) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success) return false;
    d = ldlt.solve(-gradient);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian);
    if (eig.info() != Eigen::Success) return false;
    const Eigen::VectorXd& values = eig.eigenvalues();
    const double floor = kPseudoInverseCutoff * values.cwiseAbs().maxCoeff();
    Eigen::VectorXd projected = eig.eigenvectors().transpose() * gradient;
    for (Eigen::Index k = 0; k < m; ++k) {
      projected(k) = values(k) > floor ? -projected(k) / values(k) : 0.0;
    }
    d = eig.eigenvectors() * projected;
  }
  if (!d.allFinite()) return false;
  step->setZero(n);
  step->head(m) = d;
  return true;
}

}  // namespace

Vector wafi_step(const Matrix& cost, const Vector& omega, double epsilon) {
  const Eigen::Index n = cost.rows();
  const Vector log_norm = column_log_normalizers(cost, omega, epsilon);
  Vector next(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) peak = std::max(peak, -cost(i, j) / epsilon - log_norm(j));
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) sum += std::exp(-cost(i, j) / epsilon - log_norm(j) - peak);
    // log a_i = 0 for unit marginals.
    next(i) = -epsilon * (peak + std::log(sum));
  }
  next(n - 1) = 0.0;
  return next;
}

double smoothed_dual_objective(const Matrix& cost, const Vector& omega, double epsilon) {
  return epsilon * column_log_normalizers(cost, omega, epsilon).sum() - omega.sum();
}

DualPotential wafi_solve(const Matrix& cost, const WafiOptions& options) {
  check_cost(cost);
  if (!(options.epsilon > 0.0)) throw_invalid("epsilon must be positive");
  if (options.max_iters < 1) throw_invalid("max_iters must be positive");
  const double eps = options.epsilon;
  const Eigen::Index n = cost.rows();

  DualPotential out;
  out.epsilon = eps;
  Vector omega = Vector::Zero(n);
  Vector next = wafi_step(cost, omega, eps);
  double residual = sup_distance(next, omega);
  out.residual_trace.push_back(residual);
  out.objective_trace.push_back(smoothed_dual_objective(cost, omega, eps));

  for (int iter = 1;; ++iter) {
    if (residual < options.tol) {
      omega = next;
      out.iterations = iter;
      out.converged = true;
      break;
    }
    if (iter >= options.max_iters) {
      out.iterations = iter;
      break;
    }
    Vector candidate = next;
    Vector candidate_next = wafi_step(cost, candidate, eps);
    double candidate_residual = sup_distance(candidate_next, candidate);
    if (options.newton_acceleration && candidate_residual >= options.tol) {
      const double base = smoothed_dual_objective(cost, candidate, eps);
      for (bool robust : {false, true}) {
        Vector step;
        if (!newton_direction(cost, candidate, eps, robust, &step)) continue;
        bool accepted = false;
        double t = 1.0;
        for (int attempt = 0; attempt < kHalvings && !accepted; ++attempt, t *= 0.5) {
          Vector trial = candidate + t * step;
          trial(n - 1) = 0.0;
          if (!trial.allFinite()) continue;
          if (smoothed_dual_objective(cost, trial, eps) > base + kObjectiveSlack) continue;
          Vector trial_next = wafi_step(cost, trial, eps);
          const double trial_residual = sup_distance(trial_next, trial);
          if (trial_residual < candidate_residual) {
            candidate = std::move(trial);
            candidate_next = std::move(trial_next);
            candidate_residual = trial_residual;
            ++out.newton_steps;
            accepted = true;
          }
        }
        if (accepted) break;
      }
    }
    omega = std::move(candidate);
    next = std::move(candidate_next);
    residual = candidate_residual;
    out.residual_trace.push_back(residual);
    out.objective_trace.push_back(smoothed_dual_objective(cost, omega, eps));
  }
  out.omega = omega;
  if (!out.converged && options.throw_on_budget) {
    throw ConvergenceError("matching potential did not converge in " +
                               std::to_string(options.max_iters) + " iterations",
                           residual);
  }
  return out;
}

Matrix recover_plan(const Matrix& cost, const Vector& omega, double epsilon) {
  const Eigen::Index n = cost.rows();
  Matrix plan(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) peak = std::max(peak, (omega(k) - cost(k, j)) / epsilon);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      plan(k, j) = std::exp((omega(k) - cost(k, j)) / epsilon - peak);
      sum += plan(k, j);
    }
    for (Eigen::Index k = 0; k < n; ++k) plan(k, j) /= sum;
  }
  return plan;
}

std::vector<int> column_argmax(const Matrix& plan) {
  std::vector<int> rows(plan.cols());
  for (Eigen::Index j = 0; j < plan.cols(); ++j) {
    Eigen::Index best = 0;
    plan.col(j).maxCoeff(&best);
    rows[j] = static_cast<int>(best);
  }
  return rows;
}

Assignment hungarian_assignment(const Matrix& cost) {
  check_cost(cost);
  // Potentials-based O(n^3) Hungarian method, 1-based internally.
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment out;
  out.row_of_column.resize(n);
  for (int j = 1; j <= n; ++j) {
    out.row_of_column[j - 1] = p[j] - 1;
    out.cost += cost(p[j] - 1, j - 1);
  }
  return out;
}

Assignment exact_assignment(const Matrix& cost, int limit) {
  if (cost.rows() > limit) {
    throw_invalid("exact assignment limited to N <= " + std::to_string(limit));
  }
  return hungarian_assignment(cost);
}

Assignment exhaustive_assignment(const Matrix& cost) {
  check_cost(cost);
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Assignment best;
  best.cost = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += cost(perm[j], j);
    if (total < best.cost) {
      best.cost = total;
      best.row_of_column = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

MatchingResult match_users(const Matrix& source, const Matrix& target,
                           std::span<const std::pair<int, int>> overlapped,
                           const WafiOptions& options) {
  MatchingResult out;
  out.cost = apply_mask(build_cost(source, target), overlapped);
  out.potential = wafi_solve(out.cost, options);
  out.plan = recover_plan(out.cost, out.potential.omega, options.epsilon);
  return out;
}

}  // namespace crossrec
