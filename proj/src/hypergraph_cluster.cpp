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

#include "crossrec/hypergraph_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace crossrec {

double ClusterAssignment::constraint_residual() const {
  const double target = static_cast<double>(num_items()) / static_cast<double>(num_clusters());
  double residual = std::max(0.0, -gamma.minCoeff());
  residual = std::max(residual, (gamma.rowwise().sum().array() - 1.0).abs().maxCoeff());
  residual = std::max(residual, (gamma.colwise().sum().array() - target).abs().maxCoeff());
  return residual;
}

double solve_hinge_threshold(std::span<const double> values, double mass) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  double prefix = 0.0;
  for (std::size_t kappa = 1; kappa <= n; ++kappa) {
    prefix += sorted[kappa - 1];
    const double candidate = (mass + prefix) / static_cast<double>(kappa);
    if (kappa == n || candidate < sorted[kappa]) return candidate;
  }
  return mass;  // n == 0: unreachable for callers, kept total for safety
}

Vector update_f(const Matrix& linear_cost, const Vector& g, double eta) {
  const Eigen::Index n = linear_cost.rows();
  const Eigen::Index k = linear_cost.cols();
  Vector f(n);
  std::vector<double> shifted(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) shifted[j] = linear_cost(i, j) - g(j);
    f(i) = solve_hinge_threshold(shifted, eta);
  }
  return f;
}

Vector update_g(const Matrix& linear_cost, const Vector& f, double eta) {
  const Eigen::Index n = linear_cost.rows();
  const Eigen::Index k = linear_cost.cols();
  const double mass = eta * static_cast<double>(n) / static_cast<double>(k);
  Vector g(k);
  std::vector<double> shifted(n);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) shifted[i] = linear_cost(i, j) - f(i);
    g(j) = solve_hinge_threshold(shifted, mass);
  }
  return g;
}

Matrix assemble_gamma(const Matrix& linear_cost, const Vector& f, const Vector& g, double eta) {
  Matrix gamma(linear_cost.rows(), linear_cost.cols());
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      gamma(i, j) = std::max(0.0, (f(i) + g(j) - linear_cost(i, j)) / eta);
    }
  }
  return gamma;
}

double sishe_objective(const Matrix& similarity, const Matrix& gamma, double eta) {
  const Matrix propagated = similarity * gamma;
  return -propagated.cwiseProduct(gamma).sum() + 0.5 * eta * gamma.squaredNorm();
}

namespace {

double row_residual(const Matrix& gamma) {
  return (gamma.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

double column_residual(const Matrix& gamma, double target) {
  return (gamma.colwise().sum().array() - target).abs().maxCoeff();
}

}  // namespace

namespace {

// Leading K-1 eigenvectors of the doubly centred similarity spread over the
// K columns (each row sums to zero), scaled to a max entry of 1.
Matrix spectral_direction(const Matrix& similarity, int k) {
  const Eigen::Index n = similarity.rows();
  Matrix centred = 0.5 * (similarity + similarity.transpose());
  centred.rowwise() -= centred.colwise().mean();
  centred.colwise() -= centred.rowwise().mean();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(centred);
  Matrix out = Matrix::Zero(n, k);
  for (int c = 0; c < k - 1; ++c) {
    // Eigenvalues ascend; fix each sign so the first nonzero entry is positive.
    Vector v = eig.eigenvectors().col(n - 1 - c);
    Eigen::Index first = 0;
    while (first + 1 < n && std::abs(v(first)) < 1e-12) ++first;
    if (v(first) < 0) v = -v;
    out.col(c) += v;
    out.array().colwise() -= v.array() / static_cast<double>(k);
  }
  const double m = out.cwiseAbs().maxCoeff();
  return m > 0 ? Matrix(out / m) : out;
}

}  // namespace

ClusterAssignment sishe_cluster(const Matrix& similarity, const ClusterOptions& options,
                                ClusterTrace* trace) {
  const Eigen::Index n = similarity.rows();
  const int k = options.num_clusters;
  if (similarity.cols() != n) throw_invalid("similarity graph must be square");
  if (k < 2) throw_invalid("need at least 2 clusters");
  if (k > n) throw_invalid("more clusters than items");
  if (!(options.eta > 0.0)) throw_invalid("eta must be positive");
  if (options.outer_iters < 1 || options.inner_iters < 1) {
    throw_invalid("iteration budgets must be positive");
  }
  if (!similarity.allFinite()) throw_invalid("similarity graph contains NaN or Inf");

  const double eta = options.eta;
  const double column_mass = static_cast<double>(n) / static_cast<double>(k);
  ClusterAssignment result;
  result.gamma = Matrix::Constant(n, k, 1.0 / static_cast<double>(k));
  Vector f = Vector::Zero(n);
  Vector g = Vector::Zero(k);
  Matrix linear_cost;
  double residual = 0.0;
  // The linearized update can settle into a two-state cycle; the iterate
  // with the lowest objective is kept and a repeated state ends the loop.
  Matrix previous;
  Matrix best;
  double best_objective = std::numeric_limits<double>::infinity();
  double best_residual = 0.0;

  for (int outer = 0; outer < options.outer_iters; ++outer) {
    linear_cost = -(similarity * result.gamma);
    if (outer == 0 && options.symmetry_breaking > 0.0) {
      Rng rng(options.seed);
      const double scale =
          options.symmetry_breaking * std::max(1.0, linear_cost.cwiseAbs().maxCoeff());
      const double noise = options.spectral_start ? 0.01 * scale : scale;
      if (options.spectral_start) linear_cost -= scale * spectral_direction(similarity, k);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < k; ++j) linear_cost(i, j) += noise * standard_normal(rng);
    }
    Matrix next;
    int inner = 0;
    while (inner < options.inner_iters) {
      ++inner;
      f = update_f(linear_cost, g, eta);
      if (trace != nullptr) {
        trace->row_residual.push_back(row_residual(assemble_gamma(linear_cost, f, g, eta)));
      }
      g = update_g(linear_cost, f, eta);
      next = assemble_gamma(linear_cost, f, g, eta);
      const double rows = row_residual(next);
      const double cols = column_residual(next, column_mass);
      if (trace != nullptr) trace->column_residual.push_back(cols);
      residual = std::max(rows, cols);
      if (residual < options.tol) break;
    }
    const double change = (next - result.gamma).cwiseAbs().maxCoeff();
    const bool cycled =
        previous.size() > 0 && (next - previous).cwiseAbs().maxCoeff() < options.tol;
    previous = std::move(result.gamma);
    result.gamma = std::move(next);
    const double objective = sishe_objective(similarity, result.gamma, eta);
    if (trace != nullptr) {
      trace->objective.push_back(objective);
      trace->inner_iterations.push_back(inner);
      trace->constraint_residual.push_back(residual);
    }
    if (residual < options.tol && objective < best_objective) {
      best_objective = objective;
      best = result.gamma;
      best_residual = residual;
    }
    if (residual < options.tol && (change < options.tol || cycled)) break;
  }
  if (best.size() > 0) {
    result.gamma = std::move(best);
    residual = best_residual;
  }
  if (trace != nullptr) {
    trace->f = f;
    trace->g = g;
    trace->last_linear_cost = linear_cost;
  }
  if (!(residual < options.tol)) {
    throw ConvergenceError("clustering missed its marginal constraints", residual);
  }
  return result;
}

}  // namespace crossrec
