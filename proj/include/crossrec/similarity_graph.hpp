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

#ifndef CROSSREC_SIMILARITY_GRAPH_HPP_
#define CROSSREC_SIMILARITY_GRAPH_HPP_

#include <span>
#include <vector>

#include "crossrec/common.hpp"

namespace crossrec {

// S_ij = exp(cos(x_i, x_j)). Throws kData naming the first zero-norm row.
Matrix modal_similarity(const Matrix& features);

// Row-wise binary top-z graph. The diagonal never competes for a slot and
// ties go to the lower column index. The result is generally asymmetric.
Matrix topz_sparsify(const Matrix& similarity, int z);

// Entrywise proximal operator of mu * |x|.
inline double soft_threshold(double x, double mu) {
  if (x > mu) return x - mu;
  if (x < -mu) return x + mu;
  return 0.0;
}

struct FusionOptions {
  double mu = 0.1;
  int max_iters = 500;
  double tol = 1e-8;
};

struct FusionResult {
  Matrix fused;                  // consensus graph, entries in [0, 1]
  std::vector<Matrix> residuals;  // one modality-specific part per input
  std::vector<double> objective_trace;  // starts at the initial state
  int iterations = 0;
  bool converged = false;
};

// Robust consensus of several modality graphs. Alternates the exact
// minimizers in each block:
//   residual_m <- soft_threshold(graph_m - fused, mu)
//   fused      <- clip01(mean_m(graph_m - residual_m))
// starting from fused = clip01(mean_m graph_m), residual = 0, until the
// objective decreases by less than `tol`.
FusionResult risgf_fuse(std::span<const Matrix> graphs, const FusionOptions& options = {});

// (1/M) sum_m [ 0.5 ||fused + residual_m - graph_m||^2 + mu ||residual_m||_1 ]
double fusion_objective(std::span<const Matrix> graphs, const Matrix& fused,
                        std::span<const Matrix> residuals, double mu);

// Largest violation of the optimality conditions at (fused, residuals):
// `mean_gap` covers the fused block (interior entries need a zero mean
// residual, clipped entries the right sign) and `residual_gap` the
// per-modality subgradient conditions.
struct FusionStationarity {
  double mean_gap = 0.0;
  double residual_gap = 0.0;
};
FusionStationarity fusion_stationarity(std::span<const Matrix> graphs, const Matrix& fused,
                                       std::span<const Matrix> residuals, double mu);

// Full modality pipeline for one domain: similarity, top-z, fusion.
FusionResult build_item_graph(std::span<const Matrix> modality_features, int z,
                              const FusionOptions& options = {});

}  // namespace crossrec

#endif  // CROSSREC_SIMILARITY_GRAPH_HPP_
