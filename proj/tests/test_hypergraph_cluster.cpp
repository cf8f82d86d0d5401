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

#include <algorithm>
#include <vector>

#include "crossrec/hypergraph_cluster.hpp"
#include "doctest.h"
#include "instances.hpp"
#include "oracles.hpp"

using namespace crossrec;

namespace {

std::vector<int> row_argmax(const Matrix& gamma) {
  std::vector<int> out(gamma.rows());
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    Eigen::Index best = 0;
    gamma.row(i).maxCoeff(&best);
    out[i] = static_cast<int>(best);
  }
  return out;
}

Matrix one_hot(const std::vector<int>& labels, int k) {
  Matrix g = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) g(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return g;
}

void check_marginals(const Matrix& gamma, double tol) {
  const double mass = static_cast<double>(gamma.rows()) / static_cast<double>(gamma.cols());
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) CHECK(gamma.row(i).sum() == doctest::Approx(1.0).epsilon(tol));
  for (Eigen::Index j = 0; j < gamma.cols(); ++j) CHECK(std::abs(gamma.col(j).sum() - mass) <= tol);
  CHECK(gamma.minCoeff() >= 0.0);
}

}  // namespace

TEST_CASE("hinge threshold against bisection [property]") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 9));
    std::vector<double> v(n);
    for (double& x : v) x = 4.0 * standard_normal(rng);
    const double mass = 0.01 + 3.0 * uniform01(rng);
    CHECK(solve_hinge_threshold(v, mass) == doctest::Approx(oracle::hinge_root(v, mass)).epsilon(1e-10));
  }
}

TEST_CASE("row multiplier examples") {
  SUBCASE("single cluster") {
    Matrix y(2, 1);
    y << 0.3, -2.0;
    Vector g(1);
    g << 0.5;
    const Vector f = update_f(y, g, 0.7);
    CHECK(f(0) == doctest::Approx(0.7 + (0.3 - 0.5)));
    CHECK(f(1) == doctest::Approx(0.7 + (-2.0 - 0.5)));
  }
  SUBCASE("two equal terms") {
    const Vector f = update_f(Matrix::Zero(1, 2), Vector::Zero(2), 1.0);
    CHECK(f(0) == doctest::Approx(oracle::hinge_root({0.0, 0.0}, 1.0)));
    CHECK(f(0) == doctest::Approx(0.5));
  }
  SUBCASE("second term never activates") {
    Matrix y(1, 2);
    y << 0.0, 10.0;
    const Vector f = update_f(y, Vector::Zero(2), 1.0);
    CHECK(f(0) == doctest::Approx(oracle::hinge_root({0.0, 10.0}, 1.0)));
    CHECK(f(0) == doctest::Approx(1.0));
  }
}

TEST_CASE("column multiplier examples") {
  SUBCASE("N = K has the row update's shape") {
    Rng rng(5);
    const Matrix y = instances::gaussian(3, 3, rng);
    const Vector f = instances::gaussian(3, 1, rng).col(0);
    const Vector g = update_g(y, f, 0.4);
    for (int j = 0; j < 3; ++j) {
      std::vector<double> v;
      for (int i = 0; i < 3; ++i) v.push_back(y(i, j) - f(i));
      CHECK(g(j) == doctest::Approx(oracle::hinge_root(v, 0.4)));
    }
  }
  SUBCASE("four equal terms share mass 2") {
    const Vector g = update_g(Matrix::Zero(4, 2), Vector::Zero(4), 1.0);
    CHECK(g(0) == doctest::Approx(0.5));
    CHECK(g(1) == doctest::Approx(0.5));
  }
  SUBCASE("one dominant negative entry") {
    // N = 2, K = 2, so the column mass is 1. The -100 entry is active at
    // the root: g = -99 solves [g + 100]_+ + [g]_+ = 1.
    Matrix y(2, 2);
    y << -100.0, 0.0,
            0.0, 0.0;
    const Vector g = update_g(y, Vector::Zero(2), 1.0);
    CHECK(g(0) == doctest::Approx(oracle::hinge_root({-100.0, 0.0}, 1.0)));
    CHECK(g(0) == doctest::Approx(-99.0));
    CHECK(g(1) == doctest::Approx(0.5));
  }
}

TEST_CASE("gamma assembly") {
  Rng rng(6);
  const Matrix y = instances::uniform(4, 3, rng);
  SUBCASE("inactive hinge gives zero") {
    const Vector f = Vector::Constant(4, -1.0);
    const Vector g = Vector::Zero(3);
    CHECK(assemble_gamma(y, f, g, 0.5).isZero(0));
  }
  SUBCASE("eta scales entrywise") {
    const Vector f = Vector::Constant(4, 0.8);
    const Vector g = Vector::Constant(3, 0.2);
    const Matrix a = assemble_gamma(y, f, g, 1.0);
    const Matrix b = assemble_gamma(y, f, g, 0.25);
    CHECK((b - a / 0.25).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("clustering objective") {
  const int n = 4, k = 2;
  SUBCASE("zero gamma") {
    CHECK(sishe_objective(Matrix::Ones(n, n), Matrix::Zero(n, k), 0.3) == 0.0);
  }
  SUBCASE("uniform gamma on all-ones similarity") {
    const double eta = 0.3;
    const double expected = -double(n * n) / k + eta * n / (2.0 * k);
    CHECK(sishe_objective(Matrix::Ones(n, n), Matrix::Constant(n, k, 1.0 / k), eta) ==
          doctest::Approx(expected));
  }
  SUBCASE("hard assignment on two blocks") {
    Matrix a = Matrix::Zero(4, 4);
    a.topLeftCorner(2, 2).setOnes();
    a.bottomRightCorner(2, 2).setOnes();
    const double eta = 0.01;
    CHECK(sishe_objective(a, one_hot({0, 0, 1, 1}, 2), eta) == doctest::Approx(-8.0 + eta / 2 * 4));
  }
}

TEST_CASE("clustering worked examples") {
  ClusterOptions o;
  o.num_clusters = 2;
  o.eta = 0.01;
  SUBCASE("two 2x2 blocks") {
    Matrix a = Matrix::Zero(4, 4);
    a.topLeftCorner(2, 2).setOnes();
    a.bottomRightCorner(2, 2).setOnes();
    ClusterTrace trace;
    const ClusterAssignment c = sishe_cluster(a, o, &trace);
    double w = 0.0;
    const auto best = oracle::best_bipartition(a, &w);
    CHECK(oracle::canonical_labels(row_argmax(c.gamma)) == best);
    check_marginals(c.gamma, 1e-9);
    // Replaying the recorded multipliers reproduces the output.
    const Matrix replay = assemble_gamma(trace.last_linear_cost, trace.f, trace.g, o.eta);
    CHECK((replay - c.gamma).cwiseAbs().maxCoeff() < 1e-9);
    for (double r : trace.row_residual) CHECK(r < 1e-9);
  }
  SUBCASE("all-ones similarity leaves only the constraints") {
    const ClusterAssignment c = sishe_cluster(Matrix::Ones(6, 6), o);
    check_marginals(c.gamma, 1e-9);
  }
  SUBCASE("bad arguments") {
    o.num_clusters = 5;
    CHECK_THROWS_AS(sishe_cluster(Matrix::Ones(4, 4), o), Error);
    o.num_clusters = 2;
    o.eta = 0.0;
    CHECK_THROWS_AS(sishe_cluster(Matrix::Ones(4, 4), o), Error);
  }
}

TEST_CASE("clustering matches exhaustive bipartition [property]") {
  Rng rng(41);
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = trial % 2 == 0 ? 6 : 8;
    const Matrix a = instances::two_block_similarity(n, rng);
    ClusterOptions o;
    o.num_clusters = 2;
    o.eta = 0.01;
    o.seed = static_cast<std::uint64_t>(trial);
    const ClusterAssignment c = sishe_cluster(a, o);
    check_marginals(c.gamma, 1e-6);
    double best_weight = 0.0;
    const auto best = oracle::best_bipartition(a, &best_weight);
    const auto labels = row_argmax(c.gamma);
    const double best_obj = sishe_objective(a, one_hot(best, 2), o.eta);
    const double got_obj = sishe_objective(a, one_hot(labels, 2), o.eta);
    CHECK(std::abs(got_obj - best_obj) <= 0.01 * std::abs(best_obj));
    if (oracle::canonical_labels(labels) == best) ++agree;
  }
  CHECK(agree >= 95);
}

TEST_CASE("soft clusters on larger graphs keep their marginals [property]") {
  Rng rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = instances::uniform(30, 30, rng);
    ClusterOptions o;
    o.num_clusters = 4;
    o.eta = 0.1;
    ClusterTrace trace;
    const ClusterAssignment c = sishe_cluster(a.cwiseMax(a.transpose()), o, &trace);
    check_marginals(c.gamma, 1e-6);
    CHECK(c.constraint_residual() < 1e-6);
  }
}
