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

#include "crossrec/similarity_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crossrec {

Matrix modal_similarity(const Matrix& features) {
  const Eigen::Index n = features.rows();
  Vector norms(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    norms(i) = features.row(i).norm();
    if (!(norms(i) > 0.0) || !std::isfinite(norms(i))) {
      throw_data("degenerate feature row for item " + std::to_string(i));
    }
  }
  Matrix normalized = features;
  for (Eigen::Index i = 0; i < n; ++i) normalized.row(i) /= norms(i);
  Matrix cosine = normalized * normalized.transpose();
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      // Symmetrize explicitly; the product can differ in the last ulp.
      const double c = i <= j ? cosine(i, j) : cosine(j, i);
      out(i, j) = std::exp(std::clamp(c, -1.0, 1.0));
    }
    out(i, i) = std::exp(1.0);
  }
  return out;
}

Matrix topz_sparsify(const Matrix& similarity, int z) {
  const Eigen::Index n = similarity.rows();
  if (similarity.cols() != n) throw_invalid("similarity matrix must be square");
  if (z < 1 || z >= n) {
    throw_invalid("top-z needs 1 <= z < N (z=" + std::to_string(z) + ", N=" +
                  std::to_string(n) + ")");
  }
  Matrix out = Matrix::Zero(n, n);
  std::vector<Eigen::Index> candidates;
  candidates.reserve(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    candidates.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) candidates.push_back(j);
    }
    std::partial_sort(candidates.begin(), candidates.begin() + z, candidates.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        const double va = similarity(i, a);
                        const double vb = similarity(i, b);
                        return va > vb || (va == vb && a < b);
                      });
    for (int k = 0; k < z; ++k) out(i, candidates[k]) = 1.0;
  }
  return out;
}

double fusion_objective(std::span<const Matrix> graphs, const Matrix& fused,
                        std::span<const Matrix> residuals, double mu) {
  double total = 0.0;
  for (std::size_t m = 0; m < graphs.size(); ++m) {
    const double fit = (fused + residuals[m] - graphs[m]).squaredNorm();
    total += 0.5 * fit + mu * residuals[m].cwiseAbs().sum();
  }
  return total / static_cast<double>(graphs.size());
}

FusionStationarity fusion_stationarity(std::span<const Matrix> graphs, const Matrix& fused,
                                       std::span<const Matrix> residuals, double mu) {
  FusionStationarity gap;
  const auto modalities = static_cast<double>(graphs.size());
  for (Eigen::Index i = 0; i < fused.rows(); ++i) {
    for (Eigen::Index j = 0; j < fused.cols(); ++j) {
      const double a = fused(i, j);
      double mean = 0.0;
      for (std::size_t m = 0; m < graphs.size(); ++m) {
        const double r = a + residuals[m](i, j) - graphs[m](i, j);
        mean += r;
        const double delta = residuals[m](i, j);
        if (delta != 0.0) {
          const double sign = delta > 0.0 ? 1.0 : -1.0;
          gap.residual_gap = std::max(gap.residual_gap, std::abs(r + mu * sign));
        } else {
          gap.residual_gap = std::max(gap.residual_gap, std::max(0.0, std::abs(r) - mu));
        }
      }
      mean /= modalities;
      // Gradient of the fit term in the fused entry is `mean`; at the lower
      // bound it may be positive, at the upper bound negative.
      if (a <= 0.0) {
        gap.mean_gap = std::max(gap.mean_gap, std::max(0.0, -mean));
      } else if (a >= 1.0) {
        gap.mean_gap = std::max(gap.mean_gap, std::max(0.0, mean));
      } else {
        gap.mean_gap = std::max(gap.mean_gap, std::abs(mean));
      }
    }
  }
  return gap;
}

FusionResult risgf_fuse(std::span<const Matrix> graphs, const FusionOptions& options) {
  if (graphs.empty()) throw_invalid("fusion needs at least one modality graph");
  if (!(options.mu >= 0.0)) throw_invalid("mu must be non-negative");
  if (options.max_iters < 1) throw_invalid("max_iters must be positive");
  const Eigen::Index n = graphs[0].rows();
  for (const auto& g : graphs) {
    if (g.rows() != n || g.cols() != n) throw_invalid("modality graphs differ in size");
    if (!g.allFinite()) throw_invalid("modality graph contains NaN or Inf");
  }
  const auto modalities = static_cast<double>(graphs.size());
  const double mu = options.mu;

  FusionResult result;
  result.residuals.assign(graphs.size(), Matrix::Zero(n, n));
  Matrix mean = Matrix::Zero(n, n);
  for (const auto& g : graphs) mean += g;  // fixed left-to-right order
  result.fused = (mean / modalities).cwiseMax(0.0).cwiseMin(1.0);
  double objective = fusion_objective(graphs, result.fused, result.residuals, mu);
  result.objective_trace.push_back(objective);

  for (int iter = 1; iter <= options.max_iters; ++iter) {
    for (std::size_t m = 0; m < graphs.size(); ++m) {
      result.residuals[m] = (graphs[m] - result.fused).unaryExpr(
          [mu](double x) { return soft_threshold(x, mu); });
    }
    mean.setZero();
    for (std::size_t m = 0; m < graphs.size(); ++m) mean += graphs[m] - result.residuals[m];
    result.fused = (mean / modalities).cwiseMax(0.0).cwiseMin(1.0);
    const double next = fusion_objective(graphs, result.fused, result.residuals, mu);
    result.objective_trace.push_back(next);
    result.iterations = iter;
    const double decrease = objective - next;
    objective = next;
    if (decrease < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

FusionResult build_item_graph(std::span<const Matrix> modality_features, int z,
                              const FusionOptions& options) {
  std::vector<Matrix> sparse;
  sparse.reserve(modality_features.size());
  for (const auto& features : modality_features) {
    sparse.push_back(topz_sparsify(modal_similarity(features), z));
  }
  return risgf_fuse(sparse, options);
}

}  // namespace crossrec
