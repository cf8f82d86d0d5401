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

// Independent reference computations for the tests. Deliberately naive:
// dense loops, bisection and brute force, sharing no code with the library.

#ifndef CROSSREC_TESTS_ORACLES_HPP_
#define CROSSREC_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "crossrec/common.hpp"

namespace oracle {

using crossrec::Matrix;
using crossrec::Vector;

// Finds t with sum_k max(0, t - values[k]) = mass by bisection.
inline double hinge_root(const std::vector<double>& values, double mass) {
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end()) + mass;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (double v : values) s += std::max(0.0, mid - v);
    (s < mass ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double cosine(const Vector& a, const Vector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    dot += a(k) * b(k);
    na += a(k) * a(k);
    nb += b(k) * b(k);
  }
  return dot / std::sqrt(na * nb);
}

// Minimum-cost permutation by enumerating all of them; returns the row of
// each column.
inline std::vector<int> brute_force_assignment(const Matrix& cost, double* best_cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_value = std::numeric_limits<double>::infinity();
  do {
    double v = 0.0;
    for (int j = 0; j < n; ++j) v += cost(perm[j], j);
    if (v < best_value) {
      best_value = v;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  *best_cost = best_value;
  return best;
}

// Balanced 2-way partition of n items maximizing the within-cluster weight
// sum_{ij same cluster} A_ij. Labels are normalized so item 0 is in 0.
inline std::vector<int> best_bipartition(const Matrix& a, double* best_weight) {
  const int n = static_cast<int>(a.rows());
  std::vector<int> best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << n); ++mask) {
    if (__builtin_popcount(mask) * 2 != n || (mask & 1)) continue;
    double v = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (((mask >> i) & 1) == ((mask >> j) & 1)) v += a(i, j);
    if (v > best_value) {
      best_value = v;
      best.assign(n, 0);
      for (int i = 0; i < n; ++i) best[i] = (mask >> i) & 1;
    }
  }
  *best_weight = best_value;
  return best;
}

// Row-normalized labels so item 0 is in cluster 0 (two clusters).
inline std::vector<int> canonical_labels(std::vector<int> labels) {
  if (!labels.empty() && labels[0] != 0) {
    for (int& l : labels) l = 1 - l;
  }
  return labels;
}

// D^{-1/2} A D^{-1/2} with dense loops; zero-degree rows stay zero.
inline Matrix normalize(const Matrix& a) {
  const Eigen::Index n = a.rows();
  std::vector<double> deg(n, 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) deg[i] += a(i, j);
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (deg[i] > 0 && deg[j] > 0) out(i, j) = a(i, j) / std::sqrt(deg[i] * deg[j]);
  return out;
}

// Mean of x, Lx, ..., L^layers x by explicit repeated products.
inline Matrix power_mean(const Matrix& op, const Matrix& x, int layers) {
  Matrix sum = x;
  Matrix cur = x;
  for (int l = 0; l < layers; ++l) {
    Matrix next = Matrix::Zero(cur.rows(), cur.cols());
    for (Eigen::Index i = 0; i < op.rows(); ++i)
      for (Eigen::Index k = 0; k < op.cols(); ++k)
        for (Eigen::Index d = 0; d < cur.cols(); ++d) next(i, d) += op(i, k) * cur(k, d);
    cur = next;
    sum += cur;
  }
  return sum / static_cast<double>(layers + 1);
}

// Central-difference derivative of f at x along coordinate k.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t k, double h = 1e-6) {
  const double x0 = x[k];
  x[k] = x0 + h;
  const double up = f(x);
  x[k] = x0 - h;
  const double down = f(x);
  return (up - down) / (2 * h);
}

}  // namespace oracle

#endif  // CROSSREC_TESTS_ORACLES_HPP_
