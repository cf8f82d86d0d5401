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

#ifndef CROSSREC_PROPAGATION_HPP_
#define CROSSREC_PROPAGATION_HPP_

#include <vector>

#include "crossrec/common.hpp"
#include "crossrec/domain_data.hpp"

namespace crossrec {

// Learnable state of one domain.
struct DomainModel {
  Matrix user_table;                 // N_U x D
  Matrix item_table;                 // N_V x D
  std::vector<Matrix> hyper_weights;  // one D x D map per layer
  // Row maps turning an embedding into a fusion score.
  Vector attn_u;
  Vector attn_v;       // bipartite item view
  Vector attn_vtilde;  // hypergraph item view
  Vector attn_vhat;    // item-graph view

  int dim() const { return static_cast<int>(user_table.cols()); }
  int layers() const { return static_cast<int>(hyper_weights.size()); }
  void validate() const;
};

// Tables ~ N(0, init_scale^2), hypergraph weights = identity, score maps 0.
DomainModel init_domain_model(int num_users, int num_items, int dim, int layers, Rng& rng,
                              double init_scale = 0.1);

// D^{-1/2} A D^{-1/2}; rows and columns of zero-degree nodes stay zero.
SparseMatrix normalize_symmetric(const SparseMatrix& adjacency);

// max(A, A^T) with the diagonal dropped, then symmetric normalization.
SparseMatrix item_graph_operator(const Matrix& fused);

// Hypergraph convolution D_V^{-1/2} gamma D_E^{-1/2} gamma^T D_V^{-1/2},
// held in factored form: apply(x) = left * (right^T x).
class HypergraphOperator {
 public:
  HypergraphOperator() = default;
  // Throws kInvalidArgument unless rows of gamma sum to 1 and columns to
  // N/K within `tol`, with no negative entries.
  explicit HypergraphOperator(const Matrix& gamma, double tol = 1e-6);

  Matrix apply(const Matrix& x) const;
  Matrix dense() const;
  // Vertex and hyperedge degree vectors (gamma 1_K and gamma^T 1_N).
  const Vector& vertex_degree() const { return vertex_degree_; }
  const Vector& edge_degree() const { return edge_degree_; }
  Eigen::Index size() const { return left_.rows(); }

 private:
  Matrix left_;
  Matrix right_;
  Vector vertex_degree_;
  Vector edge_degree_;
};

// Everything propagation needs about one domain, fixed during training.
struct DomainGraphs {
  int num_users = 0;
  int num_items = 0;
  SparseMatrix bipartite;  // normalized, (N_U + N_V) square
  SparseMatrix item_graph;  // normalized, N_V square
  HypergraphOperator hypergraph;
};

DomainGraphs make_domain_graphs(const BipartiteGraph& bipartite, const Matrix& fused_graph,
                                const Matrix& gamma);

// Mean of x, Lx, ..., L^layers x.
Matrix layer_mean(const SparseMatrix& op, const Matrix& x, int layers);

struct BipartiteEmbeddings {
  Matrix users;
  Matrix items;
};
BipartiteEmbeddings bipartite_propagate(const SparseMatrix& normalized, const Matrix& user_table,
                                        const Matrix& item_table, int layers);

Matrix itemgraph_propagate(const SparseMatrix& normalized, const Matrix& item_table, int layers);

// x_{l+1} = H x_l W_l, mean over layers 0..L. `snapshots` (optional)
// receives x_0..x_L for the backward pass.
Matrix hypergraph_propagate(const HypergraphOperator& op, const Matrix& item_table,
                            const std::vector<Matrix>& weights,
                            std::vector<Matrix>* snapshots = nullptr);

// Column order of PropagationOutput::weights.
enum ItemView : int { kBipartiteView = 0, kHypergraphView = 1, kItemGraphView = 2 };

struct PropagationOutput {
  Matrix user_emb;  // U
  Matrix item_emb;  // V, fused
  Matrix v;
  Matrix vtilde;
  Matrix vhat;
  Matrix weights;  // N_V x 3 softmax weights, columns per ItemView
  double user_context = 0.0;
  std::vector<Matrix> hyper_snapshots;
};

// Per item: scores c + attn_x . x_j with c = mean_i attn_u . u_i, softmax
// over the three views, V_j = weighted sum. U is the bipartite user view.
void fuse_item_views(const DomainModel& model, PropagationOutput* out);

PropagationOutput propagate(const DomainGraphs& graphs, const DomainModel& model);

// Same shapes as DomainModel.
struct ModelGradient {
  Matrix user_table;
  Matrix item_table;
  std::vector<Matrix> hyper_weights;
  Vector attn_u;
  Vector attn_v;
  Vector attn_vtilde;
  Vector attn_vhat;

  static ModelGradient zeros_like(const DomainModel& model);
};

// Pulls dL/dU and dL/dV back to the model parameters. The hypergraph
// weights receive a gradient only if `hyper_weights_trainable`.
ModelGradient propagate_backward(const DomainGraphs& graphs, const DomainModel& model,
                                 const PropagationOutput& out, const Matrix& grad_user_emb,
                                 const Matrix& grad_item_emb, bool hyper_weights_trainable);

}  // namespace crossrec

#endif  // CROSSREC_PROPAGATION_HPP_
