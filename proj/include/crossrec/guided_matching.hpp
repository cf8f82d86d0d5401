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

#ifndef CROSSREC_GUIDED_MATCHING_HPP_
#define CROSSREC_GUIDED_MATCHING_HPP_

#include <span>
#include <utility>
#include <vector>

#include "crossrec/common.hpp"

namespace crossrec {

// C_ij = ||source_i - target_j||^2. Both blocks must be N x D.
Matrix build_cost(const Matrix& source, const Matrix& target);

// Q = C * M where M_ij = 0 exactly at the given (row, col) pairs. Pairs
// outside the matrix are rejected; a row or column listed twice is an error.
Matrix apply_mask(const Matrix& cost, std::span<const std::pair<int, int>> pairs);

struct WafiOptions {
  double epsilon = 0.01;
  int max_iters = 5000;
  double tol = 1e-10;
  // Newton steps on the pinned smoothed dual, accepted only when they lower
  // both the dual objective and the fixed-point residual. Without them the
  // plain iteration stalls on weakly coupled blocks at small epsilon.
  bool newton_acceleration = true;
  // If false, running out of iterations returns the last iterate with
  // `converged == false` instead of throwing.
  bool throw_on_budget = true;
};

// Smoothed dual potential of the unit-marginal entropic matching problem.
// The last coordinate is pinned at zero.
struct DualPotential {
  Vector omega;
  double epsilon = 0.0;
  int iterations = 0;
  bool converged = false;
  int newton_steps = 0;
  std::vector<double> residual_trace;   // sup-norm fixed-point residual per iteration
  std::vector<double> objective_trace;  // smoothed dual objective per iterate
};

// One fixed-point sweep: every free coordinate is recomputed from the
// previous iterate,
//   w_i <- -eps * log sum_j [ exp(-Q_ij/eps) / sum_k exp((w_k - Q_kj)/eps) ],
// with w_{N-1} = 0. All sums are evaluated in max-shifted log-sum-exp form.
Vector wafi_step(const Matrix& cost, const Vector& omega, double epsilon);

// sum_j eps * logsumexp_i((w_i - Q_ij)/eps) - sum_i w_i
double smoothed_dual_objective(const Matrix& cost, const Vector& omega, double epsilon);

// Throws ConvergenceError (unless disabled) if the budget runs out.
DualPotential wafi_solve(const Matrix& cost, const WafiOptions& options = {});

// Column softmax pi_ij = exp((w_i - Q_ij)/eps) / sum_k exp((w_k - Q_kj)/eps).
Matrix recover_plan(const Matrix& cost, const Vector& omega, double epsilon);

// Hard reading of a plan: for every column, the row holding its largest mass.
std::vector<int> column_argmax(const Matrix& plan);

struct Assignment {
  std::vector<int> row_of_column;  // row matched to each column
  double cost = 0.0;
};

// Minimum-cost perfect matching (Hungarian method). Rejects N > limit.
Assignment exact_assignment(const Matrix& cost, int limit = 10);
// Brute force over all N! permutations; the independent cross-check.
Assignment exhaustive_assignment(const Matrix& cost);
// Hungarian method without a size limit.
Assignment hungarian_assignment(const Matrix& cost);

struct MatchingResult {
  Matrix cost;    // masked
  DualPotential potential;
  Matrix plan;
};

// build_cost -> apply_mask -> wafi_solve -> recover_plan. Non-square
// batches are rejected.
MatchingResult match_users(const Matrix& source, const Matrix& target,
                           std::span<const std::pair<int, int>> overlapped,
                           const WafiOptions& options = {});

}  // namespace crossrec

#endif  // CROSSREC_GUIDED_MATCHING_HPP_
