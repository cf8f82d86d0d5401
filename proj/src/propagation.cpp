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

#include "crossrec/propagation.hpp"

#include <cmath>
#include <string>

namespace crossrec {

void DomainModel::validate() const {
  const Eigen::Index d = user_table.cols();
  if (d <= 0) throw_invalid("embedding dimension must be positive");
  if (item_table.cols() != d) throw_invalid("user and item tables differ in dimension");
  for (const Matrix& w : hyper_weights) {
    if (w.rows() != d || w.cols() != d) throw_invalid("hypergraph weight must be D x D");
  }
  for (const Vector* a : {&attn_u, &attn_v, &attn_vtilde, &attn_vhat}) {
    if (a->size() != d) throw_invalid("attention map must have length D");
  }
  if (!user_table.allFinite() || !item_table.allFinite()) {
    throw_invalid("embedding tables contain NaN or Inf");
  }
}

DomainModel init_domain_model(int num_users, int num_items, int dim, int layers, Rng& rng,
                              double init_scale) {
  if (num_users <= 0 || num_items <= 0) throw_invalid("model needs users and items");
  if (dim <= 0) throw_invalid("embedding dimension must be positive");
  if (layers < 0) throw_invalid("layer count must be non-negative");
  DomainModel model;
  model.user_table.resize(num_users, dim);
  model.item_table.resize(num_items, dim);
  for (Eigen::Index i = 0; i < model.user_table.size(); ++i) {
    model.user_table.data()[i] = init_scale * standard_normal(rng);
  }
  for (Eigen::Index i = 0; i < model.item_table.size(); ++i) {
    model.item_table.data()[i] = init_scale * standard_normal(rng);
  }
  model.hyper_weights.assign(layers, Matrix::Identity(dim, dim));
  model.attn_u = Vector::Zero(dim);
  model.attn_v = Vector::Zero(dim);
  model.attn_vtilde = Vector::Zero(dim);
  model.attn_vhat = Vector::Zero(dim);
  return model;
}

SparseMatrix normalize_symmetric(const SparseMatrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw_invalid("adjacency must be square");
  Vector degree = Vector::Zero(adjacency.rows());
  for (int r = 0; r < adjacency.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(adjacency, r); it; ++it) degree(r) += it.value();
  }
  Vector scale(degree.size());
  for (Eigen::Index i = 0; i < degree.size(); ++i) {
    scale(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  }
  SparseMatrix out = adjacency;
  for (int r = 0; r < out.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(out, r); it; ++it) {
      it.valueRef() *= scale(r) * scale(it.col());
    }
  }
  out.prune(0.0);
  return out;
}

SparseMatrix item_graph_operator(const Matrix& fused) {
  if (fused.rows() != fused.cols()) throw_invalid("item graph must be square");
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index i = 0; i < fused.rows(); ++i) {
    for (Eigen::Index j = 0; j < fused.cols(); ++j) {
      if (i == j) continue;
      const double w = std::max(fused(i, j), fused(j, i));
      if (w != 0.0) triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), w);
    }
  }
  SparseMatrix sym(fused.rows(), fused.cols());
  sym.setFromTriplets(triplets.begin(), triplets.end());
  return normalize_symmetric(sym);
}

HypergraphOperator::HypergraphOperator(const Matrix& gamma, double tol) {
  const Eigen::Index n = gamma.rows();
  const Eigen::Index k = gamma.cols();
  if (n == 0 || k == 0) throw_invalid("cluster matrix is empty");
  if (!gamma.allFinite() || gamma.minCoeff() < -tol) {
    throw_invalid("cluster matrix has negative or non-finite entries");
  }
  vertex_degree_ = gamma.rowwise().sum();
  edge_degree_ = gamma.colwise().sum().transpose();
  const double column_mass = static_cast<double>(n) / static_cast<double>(k);
  const double row_gap = (vertex_degree_.array() - 1.0).abs().maxCoeff();
  const double col_gap = (edge_degree_.array() - column_mass).abs().maxCoeff();
  if (row_gap > tol || col_gap > tol) {
    throw_invalid("cluster matrix violates its marginals (row gap " + std::to_string(row_gap) +
                  ", column gap " + std::to_string(col_gap) + ")");
  }
  const Vector dv = vertex_degree_.array().rsqrt();
  const Vector de = edge_degree_.array().rsqrt();
  right_ = dv.asDiagonal() * gamma;
  left_ = right_ * de.asDiagonal();
}

Matrix HypergraphOperator::apply(const Matrix& x) const {
  return left_ * (right_.transpose() * x);
}

Matrix HypergraphOperator::dense() const { return left_ * right_.transpose(); }

DomainGraphs make_domain_graphs(const BipartiteGraph& bipartite, const Matrix& fused_graph,
                                const Matrix& gamma) {
  if (fused_graph.rows() != bipartite.num_items || gamma.rows() != bipartite.num_items) {
    throw_invalid("graphs disagree on the number of items");
  }
  DomainGraphs graphs;
  graphs.num_users = bipartite.num_users;
  graphs.num_items = bipartite.num_items;
  graphs.bipartite = normalize_symmetric(bipartite.adjacency);
  graphs.item_graph = item_graph_operator(fused_graph);
  graphs.hypergraph = HypergraphOperator(gamma);
  return graphs;
}

Matrix layer_mean(const SparseMatrix& op, const Matrix& x, int layers) {
  Matrix sum = x;
  Matrix current = x;
  for (int l = 0; l < layers; ++l) {
    current = op * current;
    sum += current;
  }
  return sum / static_cast<double>(layers + 1);
}

BipartiteEmbeddings bipartite_propagate(const SparseMatrix& normalized, const Matrix& user_table,
                                        const Matrix& item_table, int layers) {
  const Eigen::Index nu = user_table.rows();
  const Eigen::Index nv = item_table.rows();
  if (normalized.rows() != nu + nv) throw_invalid("bipartite graph does not match the tables");
  Matrix stacked(nu + nv, user_table.cols());
  stacked.topRows(nu) = user_table;
  stacked.bottomRows(nv) = item_table;
  const Matrix mean = layer_mean(normalized, stacked, layers);
  return {mean.topRows(nu), mean.bottomRows(nv)};
}

Matrix itemgraph_propagate(const SparseMatrix& normalized, const Matrix& item_table, int layers) {
  if (normalized.rows() != item_table.rows()) {
    throw_invalid("item graph does not match the item table");
  }
  return layer_mean(normalized, item_table, layers);
}

Matrix hypergraph_propagate(const HypergraphOperator& op, const Matrix& item_table,
                            const std::vector<Matrix>& weights, std::vector<Matrix>* snapshots) {
  if (op.size() != item_table.rows()) throw_invalid("hypergraph does not match the item table");
  Matrix current = item_table;
  Matrix sum = current;
  if (snapshots != nullptr) snapshots->assign(1, current);
  for (const Matrix& w : weights) {
    current = op.apply(current) * w;
    sum += current;
    if (snapshots != nullptr) snapshots->push_back(current);
  }
  return sum / static_cast<double>(weights.size() + 1);
}

void fuse_item_views(const DomainModel& model, PropagationOutput* out) {
  const Eigen::Index nv = out->v.rows();
  if (out->vtilde.rows() != nv || out->vhat.rows() != nv || out->v.cols() != out->vhat.cols() ||
      out->v.cols() != out->vtilde.cols()) {
    throw_invalid("item views disagree in shape");
  }
  out->user_context =
      out->user_emb.rows() > 0 ? (out->user_emb * model.attn_u).mean() : 0.0;
  const Vector sv = (out->v * model.attn_v).array() + out->user_context;
  const Vector st = (out->vtilde * model.attn_vtilde).array() + out->user_context;
  const Vector sh = (out->vhat * model.attn_vhat).array() + out->user_context;
  out->weights.resize(nv, 3);
  out->item_emb.resize(nv, out->v.cols());
  for (Eigen::Index j = 0; j < nv; ++j) {
    const double peak = std::max({sv(j), st(j), sh(j)});
    const double ev = std::exp(sv(j) - peak);
    const double et = std::exp(st(j) - peak);
    const double eh = std::exp(sh(j) - peak);
    const double total = ev + et + eh;
    out->weights(j, kBipartiteView) = ev / total;
    out->weights(j, kHypergraphView) = et / total;
    out->weights(j, kItemGraphView) = eh / total;
    out->item_emb.row(j) = out->weights(j, kBipartiteView) * out->v.row(j) +
                           out->weights(j, kHypergraphView) * out->vtilde.row(j) +
                           out->weights(j, kItemGraphView) * out->vhat.row(j);
  }
}

PropagationOutput propagate(const DomainGraphs& graphs, const DomainModel& model) {
  model.validate();
  if (model.user_table.rows() != graphs.num_users || model.item_table.rows() != graphs.num_items) {
    throw_invalid("model tables do not match the domain graphs");
  }
  PropagationOutput out;
  BipartiteEmbeddings b =
      bipartite_propagate(graphs.bipartite, model.user_table, model.item_table, model.layers());
  out.user_emb = std::move(b.users);
  out.v = std::move(b.items);
  out.vhat = itemgraph_propagate(graphs.item_graph, model.item_table, model.layers());
  out.vtilde = hypergraph_propagate(graphs.hypergraph, model.item_table, model.hyper_weights,
                                    &out.hyper_snapshots);
  fuse_item_views(model, &out);
  return out;
}

ModelGradient ModelGradient::zeros_like(const DomainModel& model) {
  ModelGradient g;
  g.user_table = Matrix::Zero(model.user_table.rows(), model.user_table.cols());
  g.item_table = Matrix::Zero(model.item_table.rows(), model.item_table.cols());
  for (const Matrix& w : model.hyper_weights) g.hyper_weights.push_back(Matrix::Zero(w.rows(), w.cols()));
  const Eigen::Index d = model.user_table.cols();
  g.attn_u = Vector::Zero(d);
  g.attn_v = Vector::Zero(d);
  g.attn_vtilde = Vector::Zero(d);
  g.attn_vhat = Vector::Zero(d);
  return g;
}

ModelGradient propagate_backward(const DomainGraphs& graphs, const DomainModel& model,
                                 const PropagationOutput& out, const Matrix& grad_user_emb,
                                 const Matrix& grad_item_emb, bool hyper_weights_trainable) {
  ModelGradient grad = ModelGradient::zeros_like(model);
  const Eigen::Index nu = out.user_emb.rows();
  const Eigen::Index nv = out.v.rows();
  const Eigen::Index d = out.v.cols();

  // Softmax fusion.
  Matrix gv(nv, d), gt(nv, d), gh(nv, d);
  double grad_context = 0.0;
  for (Eigen::Index j = 0; j < nv; ++j) {
    const auto g = grad_item_emb.row(j);
    const double av = out.weights(j, kBipartiteView);
    const double at = out.weights(j, kHypergraphView);
    const double ah = out.weights(j, kItemGraphView);
    const double dv = g.dot(out.v.row(j));
    const double dt = g.dot(out.vtilde.row(j));
    const double dh = g.dot(out.vhat.row(j));
    const double mean = av * dv + at * dt + ah * dh;
    const double sv = av * (dv - mean);
    const double st = at * (dt - mean);
    const double sh = ah * (dh - mean);
    gv.row(j) = av * g + sv * model.attn_v.transpose();
    gt.row(j) = at * g + st * model.attn_vtilde.transpose();
    gh.row(j) = ah * g + sh * model.attn_vhat.transpose();
    grad.attn_v += sv * out.v.row(j).transpose();
    grad.attn_vtilde += st * out.vtilde.row(j).transpose();
    grad.attn_vhat += sh * out.vhat.row(j).transpose();
    // The shared context enters all three scores, so this is ~0.
    grad_context += sv + st + sh;
  }

  // Context c = mean_i attn_u . u_i.
  Matrix gu = grad_user_emb;
  if (nu > 0) {
    grad.attn_u = (grad_context / static_cast<double>(nu)) * out.user_emb.colwise().sum().transpose();
    gu.rowwise() += (grad_context / static_cast<double>(nu)) * model.attn_u.transpose();
  }

  // Bipartite view; the layer-mean operator is symmetric.
  Matrix stacked(nu + nv, d);
  stacked.topRows(nu) = gu;
  stacked.bottomRows(nv) = gv;
  const Matrix back = layer_mean(graphs.bipartite, stacked, model.layers());
  grad.user_table = back.topRows(nu);
  grad.item_table = back.bottomRows(nv);

  // Item-graph view.
  grad.item_table += layer_mean(graphs.item_graph, gh, model.layers());

  // Hypergraph view: x_{l+1} = H x_l W_l.
  const int layers = model.layers();
  const double share = 1.0 / static_cast<double>(layers + 1);
  Matrix carry = share * gt;  // dL/dx_L
  for (int l = layers - 1; l >= 0; --l) {
    if (hyper_weights_trainable) {
      grad.hyper_weights[l] = graphs.hypergraph.apply(out.hyper_snapshots[l]).transpose() * carry;
    }
    carry = graphs.hypergraph.apply(carry * model.hyper_weights[l].transpose()) + share * gt;
  }
  grad.item_table += carry;
  return grad;
}

}  // namespace crossrec
