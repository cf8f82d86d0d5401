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

#ifndef CROSSREC_HYPERGRAPH_CLUSTER_HPP_
#define CROSSREC_HYPERGRAPH_CLUSTER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "crossrec/common.hpp"

namespace crossrec {

// Soft balanced assignment of N items to K hyperedges: rows sum to 1,
// columns to N/K, entries non-negative.
struct ClusterAssignment {
  Matrix gamma;

  Eigen::Index num_items() const { return gamma.rows(); }
  Eigen::Index num_clusters() const { return gamma.cols(); }
  // max(|row sum - 1|, |col sum - N/K|, max(0, -min entry))
  double constraint_residual() const;
};

struct ClusterOptions {
  int num_clusters = 15;
  double eta = 0.1;
  int outer_iters = 50;
  int inner_iters = 2000;
  double tol = 1e-10;
  // The uniform start is a fixed point of the linearized update, so the
  // first linearization receives a tiny perturbation: along the leading
  // eigenvectors of the centred similarity if `spectral_start`, plus seeded
  // noise (1% of it with the spectral part, all of it without).
  double symmetry_breaking = 1e-6;
  bool spectral_start = true;
  std::uint64_t seed = 0x5eed;
};

// Solves t with sum_k [t - values_k]_+ = mass (mass > 0) using the sorted
// prefix rule: the first kappa whose candidate (mass + sum of the kappa
// smallest values) / kappa lies below the next sorted value.
double solve_hinge_threshold(std::span<const double> values, double mass);

// Row multipliers: f_i solves sum_j [f_i - (Y_ij - g_j)]_+ = eta.
Vector update_f(const Matrix& linear_cost, const Vector& g, double eta);

// Column multipliers: g_j solves sum_i [g_j - (Y_ij - f_i)]_+ = eta N / K.
Vector update_g(const Matrix& linear_cost, const Vector& f, double eta);

// gamma_ij = [(f_i + g_j - Y_ij) / eta]_+ ; no validation.
Matrix assemble_gamma(const Matrix& linear_cost, const Vector& f, const Vector& g, double eta);

// -<A gamma, gamma> + (eta / 2) ||gamma||^2
double sishe_objective(const Matrix& similarity, const Matrix& gamma, double eta);

struct ClusterTrace {
  std::vector<double> objective;          // after every outer iteration
  std::vector<int> inner_iterations;      // per outer iteration
  std::vector<double> constraint_residual;  // per outer iteration
  // Per inner sweep: row residual after the f update and column residual
  // after the g update, flattened over all outer iterations.
  std::vector<double> row_residual;
  std::vector<double> column_residual;
  Vector f;
  Vector g;
  Matrix last_linear_cost;
};

// Balanced clustering from an item similarity graph by linearizing the
// quadratic term around the current assignment (outer loop) and solving
// the strongly convex subproblem through alternating multiplier updates
// (inner loop). Multipliers are warm-started across outer iterations.
// Throws ConvergenceError if the final assignment misses the marginal
// constraints by more than `tol`.
ClusterAssignment sishe_cluster(const Matrix& similarity, const ClusterOptions& options = {},
                                ClusterTrace* trace = nullptr);

}  // namespace crossrec

#endif  // CROSSREC_HYPERGRAPH_CLUSTER_HPP_
