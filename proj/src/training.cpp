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

#include "crossrec/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crossrec/evaluation.hpp"
#include "crossrec/guided_matching.hpp"
#include "crossrec/tsv_io.hpp"

namespace crossrec {

const char* ablation_name(Ablation ablation) {
  switch (ablation) {
    case Ablation::kFull: return "full";
    case Ablation::kNoGuidance: return "O";
    case Ablation::kOverlapOnly: return "M";
    case Ablation::kNoMask: return "G";
  }
  return "?";
}

Ablation parse_ablation(const std::string& name) {
  if (name == "full") return Ablation::kFull;
  if (name == "O") return Ablation::kNoGuidance;
  if (name == "M") return Ablation::kOverlapOnly;
  if (name == "G") return Ablation::kNoMask;
  throw_invalid("unknown ablation '" + name + "' (expected full, O, M or G)");
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw_invalid("lambda must be >= 0");
  if (!(epsilon > 0.0)) throw_invalid("epsilon must be positive");
  if (batch_size < 1) throw_invalid("batch size must be positive");
  if (neg_samples < 1) throw_invalid("need at least one negative sample");
  if (!(learning_rate >= 0.0)) throw_invalid("learning rate must be >= 0");
  if (epochs < 0) throw_invalid("epochs must be >= 0");
  if (dim < 1) throw_invalid("embedding dimension must be positive");
  if (layers < 0) throw_invalid("layer count must be >= 0");
  if (eval_k < 1) throw_invalid("cutoff k must be positive");
}

namespace {

double checked_norm(const Eigen::Ref<const Vector>& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw_invalid("degenerate embedding (zero or non-finite norm)");
  return n;
}

// cos(a, b); the gradient helper below adds `scale` times its gradients.
double cosine(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  return a.dot(b) / (checked_norm(a) * checked_norm(b));
}

void add_cosine_grad(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                     double scale, Eigen::Ref<Vector> grad_a, Eigen::Ref<Vector> grad_b) {
  const double na = a.norm();
  const double nb = b.norm();
  const double c = a.dot(b) / (na * nb);
  grad_a += scale * (b / (na * nb) - c * a / (na * na));
  grad_b += scale * (a / (na * nb) - c * b / (nb * nb));
}

// Gradient of a normalized row pulled back to the raw row.
Vector unnormalize_grad(const Vector& grad_unit, const Vector& unit, double norm) {
  return (grad_unit - grad_unit.dot(unit) * unit) / norm;
}

Matrix normalized_rows(const Matrix& m, Vector* norms) {
  norms->resize(m.rows());
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    (*norms)(i) = checked_norm(m.row(i).transpose());
    out.row(i) = m.row(i) / (*norms)(i);
  }
  return out;
}

}  // namespace

double similarity_kernel(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) throw_invalid("embedding sizes differ");
  return std::exp(cosine(a, b));
}

CfLoss cf_loss(const Matrix& user_emb, const Matrix& item_emb, const CfBatch& batch) {
  const std::size_t b = batch.users.size();
  if (b == 0) throw_invalid("empty batch");
  if (batch.positives.size() != b || batch.negatives.size() != b) {
    throw_invalid("batch arrays differ in length");
  }
  CfLoss out;
  out.grad_user = Matrix::Zero(user_emb.rows(), user_emb.cols());
  out.grad_item = Matrix::Zero(item_emb.rows(), item_emb.cols());
  const double share = 1.0 / static_cast<double>(b);
  std::vector<double> logits;
  for (std::size_t s = 0; s < b; ++s) {
    const auto& negatives = batch.negatives[s];
    if (negatives.empty()) throw_invalid("empty negative set");
    const int u = batch.users[s];
    const Vector user = user_emb.row(u).transpose();
    const int pos = batch.positives[s];
    double value = -cosine(user, item_emb.row(pos).transpose());
    Vector gu = Vector::Zero(user.size());
    Vector gp = Vector::Zero(user.size());
    add_cosine_grad(user, item_emb.row(pos).transpose(), -share, gu, gp);
    out.grad_item.row(pos) += gp.transpose();

    logits.resize(negatives.size());
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < negatives.size(); ++k) {
      logits[k] = cosine(user, item_emb.row(negatives[k]).transpose());
      peak = std::max(peak, logits[k]);
    }
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - peak);
    value += peak + std::log(sum);
    for (std::size_t k = 0; k < negatives.size(); ++k) {
      const double w = std::exp(logits[k] - peak) / sum;
      Vector gn = Vector::Zero(user.size());
      add_cosine_grad(user, item_emb.row(negatives[k]).transpose(), share * w, gu, gn);
      out.grad_item.row(negatives[k]) += gn.transpose();
    }
    out.grad_user.row(u) += gu.transpose();
    out.value += share * value;
  }
  return out;
}

GuidanceLoss guidance_loss(const Matrix& source, const Matrix& target, const Matrix& plan) {
  const Eigen::Index n = source.rows();
  if (target.rows() != n || target.cols() != source.cols()) {
    throw_invalid("guidance batches differ in shape");
  }
  if (plan.rows() != n || plan.cols() != n) throw_invalid("plan does not match the batch");
  if (n < 2) throw_invalid("guidance needs at least two users per side");

  Vector ns, nt;
  const Matrix su = normalized_rows(source, &ns);
  const Matrix tu = normalized_rows(target, &nt);
  const Matrix cos = su * tu.transpose();
  const Matrix pos_t = plan * target;             // positives of source anchors
  const Matrix pos_s = plan.transpose() * source;  // positives of target anchors
  const std::vector<int> col_best = column_argmax(plan);

  GuidanceLoss out;
  Matrix dcos = Matrix::Zero(n, n);
  Matrix dsource = Matrix::Zero(n, source.cols());
  Matrix dtarget = Matrix::Zero(n, source.cols());
  Matrix dpos_t = Matrix::Zero(n, source.cols());
  Matrix dpos_s = Matrix::Zero(n, source.cols());

  // Log-sum-exp over one row or column of `cos`, skipping `skip`; adds the
  // softmax weights into `dcos`.
  auto lse = [&](Eigen::Index fixed, Eigen::Index skip, bool by_row) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == skip) continue;
      peak = std::max(peak, by_row ? cos(fixed, k) : cos(k, fixed));
    }
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == skip) continue;
      sum += std::exp((by_row ? cos(fixed, k) : cos(k, fixed)) - peak);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == skip) continue;
      const double w = std::exp((by_row ? cos(fixed, k) : cos(k, fixed)) - peak) / sum;
      (by_row ? dcos(fixed, k) : dcos(k, fixed)) += w;
    }
    return peak + std::log(sum);
  };

  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    plan.row(i).maxCoeff(&best);
    out.value += lse(i, best, true);
    out.value -= cosine(source.row(i).transpose(), pos_t.row(i).transpose());
    Vector ga = Vector::Zero(source.cols()), gp = Vector::Zero(source.cols());
    add_cosine_grad(source.row(i).transpose(), pos_t.row(i).transpose(), -1.0, ga, gp);
    dsource.row(i) += ga.transpose();
    dpos_t.row(i) += gp.transpose();
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    out.value += lse(j, col_best[j], false);
    out.value -= cosine(target.row(j).transpose(), pos_s.row(j).transpose());
    Vector ga = Vector::Zero(source.cols()), gp = Vector::Zero(source.cols());
    add_cosine_grad(target.row(j).transpose(), pos_s.row(j).transpose(), -1.0, ga, gp);
    dtarget.row(j) += ga.transpose();
    dpos_s.row(j) += gp.transpose();
  }

  const Matrix dsu = dcos * tu;
  const Matrix dtu = dcos.transpose() * su;
  for (Eigen::Index i = 0; i < n; ++i) {
    dsource.row(i) += unnormalize_grad(dsu.row(i).transpose(), su.row(i).transpose(), ns(i)).transpose();
    dtarget.row(i) += unnormalize_grad(dtu.row(i).transpose(), tu.row(i).transpose(), nt(i)).transpose();
  }
  dtarget += plan.transpose() * dpos_t;
  dsource += plan * dpos_s;
  out.grad_source = std::move(dsource);
  out.grad_target = std::move(dtarget);
  return out;
}

DomainTrainData make_train_data(const DomainDataset& dataset, const Split& split,
                                const Matrix& fused_graph, const Matrix& gamma) {
  DomainTrainData data;
  data.graphs = make_domain_graphs(build_bipartite(dataset, split), fused_graph, gamma);
  data.train_items = items_by_user(dataset.num_users, split.train);
  data.validation_items = items_by_user(dataset.num_users, split.validation);
  data.test_items = items_by_user(dataset.num_users, split.test);
  data.num_train = split.train.size();
  return data;
}

namespace {

struct DomainStep {
  double loss = 0.0;
  PropagationOutput forward;
  Matrix grad_user;
  Matrix grad_item;
};

DomainStep forward_cf(const DomainTrainData& data, const DomainModel& model,
                      const CfBatch& batch) {
  DomainStep step;
  step.forward = propagate(data.graphs, model);
  CfLoss cf = cf_loss(step.forward.user_emb, step.forward.item_emb, batch);
  step.loss = cf.value;
  step.grad_user = std::move(cf.grad_user);
  step.grad_item = std::move(cf.grad_item);
  return step;
}

Matrix gather_rows(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
  return out;
}

void scatter_rows(const Matrix& grad, const std::vector<int>& rows, double scale, Matrix* dst) {
  for (std::size_t i = 0; i < rows.size(); ++i) dst->row(rows[i]) += scale * grad.row(i);
}

}  // namespace

StepResult step_loss(const TrainingData& data, const DomainModel& source,
                     const DomainModel& target, const StepBatch& batch,
                     const TrainConfig& config, const Matrix* fixed_plan) {
  DomainStep s = forward_cf(data.source, source, batch.source);
  DomainStep t = forward_cf(data.target, target, batch.target);
  StepResult result;
  result.loss_rs = s.loss;
  result.loss_rt = t.loss;

  if (config.guided()) {
    std::vector<int> rows_s, rows_t;
    Matrix plan;
    if (config.ablation == Ablation::kOverlapOnly) {
      for (const auto& [i, j] : batch.overlap_positions) {
        rows_s.push_back(batch.source.users[i]);
        rows_t.push_back(batch.target.users[j]);
      }
      if (rows_s.size() >= 2) {
        plan = fixed_plan != nullptr ? *fixed_plan
                                     : Matrix::Identity(rows_s.size(), rows_s.size());
      }
    } else {
      rows_s = batch.source.users;
      rows_t = batch.target.users;
      const Matrix us = gather_rows(s.forward.user_emb, rows_s);
      const Matrix ut = gather_rows(t.forward.user_emb, rows_t);
      if (fixed_plan != nullptr) {
        plan = *fixed_plan;
      } else {
        WafiOptions options;
        options.epsilon = config.epsilon;
        options.max_iters = config.wafi_max_iters;
        options.tol = config.wafi_tol;
        options.throw_on_budget = false;
        std::vector<std::pair<int, int>> mask;
        if (config.ablation == Ablation::kFull) mask = batch.overlap_positions;
        MatchingResult matching = match_users(us, ut, mask, options);
        result.matching_converged = matching.potential.converged;
        plan = std::move(matching.plan);
      }
    }
    if (plan.size() > 0) {
      const GuidanceLoss g = guidance_loss(gather_rows(s.forward.user_emb, rows_s),
                                           gather_rows(t.forward.user_emb, rows_t), plan);
      const double scale =
          config.average_guidance ? 1.0 / static_cast<double>(rows_s.size()) : 1.0;
      result.loss_c = scale * g.value;
      result.guidance_evaluated = true;
      scatter_rows(g.grad_source, rows_s, scale * config.lambda, &s.grad_user);
      scatter_rows(g.grad_target, rows_t, scale * config.lambda, &t.grad_user);
      result.plan = std::move(plan);
    }
  }
  result.total = total_loss(result.loss_rs, result.loss_rt, result.loss_c, config.lambda);
  result.grad_source = propagate_backward(data.source.graphs, source, s.forward, s.grad_user,
                                          s.grad_item, config.train_hyper_weights);
  result.grad_target = propagate_backward(data.target.graphs, target, t.forward, t.grad_user,
                                          t.grad_item, config.train_hyper_weights);
  return result;
}

namespace {

// Stream ids for derive_seed.
constexpr std::uint64_t kInitSource = 11;
constexpr std::uint64_t kInitTarget = 12;
constexpr std::uint64_t kBatchSource = 21;
constexpr std::uint64_t kBatchTarget = 22;
constexpr std::uint64_t kBatchOverlap = 23;

std::vector<std::pair<double*, Eigen::Index>> model_tensors(DomainModel& m, bool hyper) {
  std::vector<std::pair<double*, Eigen::Index>> t = {
      {m.user_table.data(), m.user_table.size()}, {m.item_table.data(), m.item_table.size()},
      {m.attn_u.data(), m.attn_u.size()},         {m.attn_v.data(), m.attn_v.size()},
      {m.attn_vtilde.data(), m.attn_vtilde.size()}, {m.attn_vhat.data(), m.attn_vhat.size()}};
  if (hyper) {
    for (Matrix& w : m.hyper_weights) t.emplace_back(w.data(), w.size());
  }
  return t;
}

std::vector<std::pair<double*, Eigen::Index>> grad_tensors(ModelGradient& g, bool hyper) {
  std::vector<std::pair<double*, Eigen::Index>> t = {
      {g.user_table.data(), g.user_table.size()}, {g.item_table.data(), g.item_table.size()},
      {g.attn_u.data(), g.attn_u.size()},         {g.attn_v.data(), g.attn_v.size()},
      {g.attn_vtilde.data(), g.attn_vtilde.size()}, {g.attn_vhat.data(), g.attn_vhat.size()}};
  if (hyper) {
    for (Matrix& w : g.hyper_weights) t.emplace_back(w.data(), w.size());
  }
  return t;
}

class Adam {
 public:
  Adam(const DomainModel& model, const TrainConfig& config)
      : config_(config),
        m_(ModelGradient::zeros_like(model)),
        v_(ModelGradient::zeros_like(model)) {}

  void step(DomainModel& model, ModelGradient& grad) {
    ++t_;
    const bool hyper = config_.train_hyper_weights;
    auto params = model_tensors(model, hyper);
    auto grads = grad_tensors(grad, hyper);
    auto ms = grad_tensors(m_, hyper);
    auto vs = grad_tensors(v_, hyper);
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      double* p = params[k].first;
      const double* g = grads[k].first;
      double* m = ms[k].first;
      double* v = vs[k].first;
      for (Eigen::Index i = 0; i < params[k].second; ++i) {
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        p[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.adam_epsilon);
      }
    }
  }

 private:
  const TrainConfig& config_;
  ModelGradient m_;
  ModelGradient v_;
  long long t_ = 0;
};

// `preset` users first, then distinct random users up to `count`.
std::vector<int> sample_users(int num_users, int count, std::vector<int> preset, Rng& rng) {
  std::vector<char> used(num_users, 0);
  for (int u : preset) used[u] = 1;
  std::vector<int> pool;
  pool.reserve(num_users);
  for (int u = 0; u < num_users; ++u) {
    if (!used[u]) pool.push_back(u);
  }
  const std::size_t need = static_cast<std::size_t>(count) - preset.size();
  for (std::size_t i = 0; i < need; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
    preset.push_back(pool[i]);
  }
  return preset;
}

CfBatch sample_cf(const DomainTrainData& data, std::vector<int> users, int neg_samples, Rng& rng) {
  CfBatch batch;
  const int num_items = data.graphs.num_items;
  batch.users = std::move(users);
  for (int u : batch.users) {
    const auto& owned = data.train_items[u];
    if (owned.empty()) throw_data("user " + std::to_string(u) + " has no training items");
    if (owned.size() >= static_cast<std::size_t>(num_items)) {
      throw_data("user " + std::to_string(u) + " interacted with every item; no negatives");
    }
    batch.positives.push_back(owned[uniform_index(rng, owned.size())]);
    std::vector<int> negatives;
    while (negatives.size() < static_cast<std::size_t>(neg_samples)) {
      const int item = static_cast<int>(uniform_index(rng, num_items));
      if (!std::binary_search(owned.begin(), owned.end(), item)) negatives.push_back(item);
    }
    batch.negatives.push_back(std::move(negatives));
  }
  return batch;
}

StepBatch sample_step(const TrainingData& data, int n, const TrainConfig& config, Rng& rng_s,
                      Rng& rng_t, Rng& rng_o) {
  const auto& pairs = data.overlap.pairs;
  const int wanted = static_cast<int>(std::floor(data.overlap.ratio * n));
  const int n_o = std::min<int>(wanted, static_cast<int>(pairs.size()));
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<int> preset_s, preset_t;
  for (int i = 0; i < n_o; ++i) {
    const std::size_t j = i + uniform_index(rng_o, order.size() - i);
    std::swap(order[i], order[j]);
    preset_s.push_back(pairs[order[i]].first);
    preset_t.push_back(pairs[order[i]].second);
  }
  StepBatch batch;
  batch.source = sample_cf(data.source,
                           sample_users(data.source.graphs.num_users, n, preset_s, rng_s),
                           config.neg_samples, rng_s);
  batch.target = sample_cf(data.target,
                           sample_users(data.target.graphs.num_users, n, preset_t, rng_t),
                           config.neg_samples, rng_t);
  // Every overlapped pair with both users present, not only the preset ones.
  std::vector<int> position_t(data.target.graphs.num_users, -1);
  for (std::size_t j = 0; j < batch.target.users.size(); ++j) position_t[batch.target.users[j]] = j;
  std::vector<int> partner(data.source.graphs.num_users, -1);
  for (const auto& [s, t] : pairs) partner[s] = t;
  for (std::size_t i = 0; i < batch.source.users.size(); ++i) {
    const int t = partner[batch.source.users[i]];
    if (t >= 0 && position_t[t] >= 0) batch.overlap_positions.emplace_back(i, position_t[t]);
  }
  return batch;
}

void check_finite(double value, int epoch, int step) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kConvergence, "training diverged at epoch " + std::to_string(epoch) +
                                             ", step " + std::to_string(step));
  }
}

int steps_for(std::size_t interactions, int batch) {
  return std::max<int>(1, static_cast<int>((interactions + batch - 1) / batch));
}

}  // namespace

std::pair<DomainModel, DomainModel> init_models(const TrainingData& data,
                                                const TrainConfig& config) {
  Rng rng_s(derive_seed(config.seed, kInitSource));
  Rng rng_t(derive_seed(config.seed, kInitTarget));
  return {init_domain_model(data.source.graphs.num_users, data.source.graphs.num_items,
                            config.dim, config.layers, rng_s),
          init_domain_model(data.target.graphs.num_users, data.target.graphs.num_items,
                            config.dim, config.layers, rng_t)};
}

TrainResult train(const TrainingData& data, const TrainConfig& config) {
  auto [source, target] = init_models(data, config);
  return train(data, config, std::move(source), std::move(target));
}

TrainResult train(const TrainingData& data, const TrainConfig& config, DomainModel source,
                  DomainModel target) {
  config.validate();
  Rng rng_s(derive_seed(config.seed, kBatchSource));
  Rng rng_t(derive_seed(config.seed, kBatchTarget));
  Rng rng_o(derive_seed(config.seed, kBatchOverlap));
  Adam adam_s(source, config);
  Adam adam_t(target, config);

  TrainResult result;
  result.source = source;
  result.target = target;
  double best_score = -1.0;
  const bool guided = config.guided();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    if (guided) {
      const int n = std::min({config.batch_size, data.source.graphs.num_users,
                              data.target.graphs.num_users});
      const int steps = steps_for(std::max(data.source.num_train, data.target.num_train), n);
      for (int step = 0; step < steps; ++step) {
        const StepBatch batch = sample_step(data, n, config, rng_s, rng_t, rng_o);
        StepResult r = step_loss(data, source, target, batch, config);
        check_finite(r.total, epoch, step);
        if (r.guidance_evaluated) ++result.guidance_evaluations;
        if (r.plan.size() > 0 && config.ablation != Ablation::kOverlapOnly) {
          ++record.matchings;
          if (!r.matching_converged) ++record.unconverged_matchings;
        }
        record.loss_rs += r.loss_rs / steps;
        record.loss_rt += r.loss_rt / steps;
        record.loss_c += r.loss_c / steps;
        adam_s.step(source, r.grad_source);
        adam_t.step(target, r.grad_target);
      }
    } else {
      // Each domain on its own stream and step count.
      auto run_domain = [&](const DomainTrainData& d, DomainModel& model, Adam& adam, Rng& rng,
                            double* loss_out) {
        const int n = std::min(config.batch_size, d.graphs.num_users);
        const int steps = steps_for(d.num_train, n);
        for (int step = 0; step < steps; ++step) {
          const CfBatch batch =
              sample_cf(d, sample_users(d.graphs.num_users, n, {}, rng), config.neg_samples, rng);
          DomainStep s = forward_cf(d, model, batch);
          check_finite(s.loss, epoch, step);
          ModelGradient grad = propagate_backward(d.graphs, model, s.forward, s.grad_user,
                                                  s.grad_item, config.train_hyper_weights);
          *loss_out += s.loss / steps;
          adam.step(model, grad);
        }
      };
      run_domain(data.source, source, adam_s, rng_s, &record.loss_rs);
      run_domain(data.target, target, adam_t, rng_t, &record.loss_rt);
    }
    record.loss_total = total_loss(record.loss_rs, record.loss_rt, record.loss_c, config.lambda);

    const PropagationOutput out_s = propagate(data.source.graphs, source);
    const PropagationOutput out_t = propagate(data.target.graphs, target);
    const MetricReport val_s = evaluate_ranking(out_s.user_emb, out_s.item_emb,
                                                data.source.train_items,
                                                data.source.validation_items, config.eval_k);
    const MetricReport val_t = evaluate_ranking(out_t.user_emb, out_t.item_emb,
                                                data.target.train_items,
                                                data.target.validation_items, config.eval_k);
    record.hr_val_source = val_s.hr;
    record.hr_val_target = val_t.hr;
    record.ndcg_val_source = val_s.ndcg;
    record.ndcg_val_target = val_t.ndcg;
    result.trace.push_back(record);

    const double score = 0.5 * (val_s.hr + val_t.hr);
    if (!config.select_best_epoch || score > best_score) {
      best_score = score;
      result.best_epoch = epoch;
      result.source = source;
      result.target = target;
    }
  }
  return result;
}

std::string format_trace_csv(const std::vector<EpochRecord>& trace, int k) {
  const std::string kk = std::to_string(k);
  std::string out = "epoch,loss_total,loss_rs,loss_rt,loss_c,hr" + kk + "_val_s,hr" + kk +
                    "_val_t,ndcg" + kk + "_val_s,ndcg" + kk + "_val_t,matchings,unconverged\n";
  for (const EpochRecord& r : trace) {
    out += std::to_string(r.epoch);
    for (double v : {r.loss_total, r.loss_rs, r.loss_rt, r.loss_c, r.hr_val_source,
                     r.hr_val_target, r.ndcg_val_source, r.ndcg_val_target}) {
      out += ',' + io::format_double(v);
    }
    out += ',' + std::to_string(r.matchings) + ',' + std::to_string(r.unconverged_matchings) + '\n';
  }
  return out;
}

GradientCheckReport gradient_check(const std::function<double(const std::vector<double>&)>& loss,
                                   const std::vector<double>& params,
                                   const std::vector<double>& analytic, int probes, Rng& rng,
                                   double step) {
  if (params.size() != analytic.size()) throw_invalid("gradient size mismatch");
  std::vector<std::size_t> coords(params.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  const std::size_t count = std::min<std::size_t>(probes, coords.size());
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(coords[i], coords[i + uniform_index(rng, coords.size() - i)]);
  }
  GradientCheckReport report;
  std::vector<double> probe = params;
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t i = coords[c];
    probe[i] = params[i] + step;
    const double up = loss(probe);
    probe[i] = params[i] - step;
    const double down = loss(probe);
    probe[i] = params[i];
    const double numeric = (up - down) / (2.0 * step);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
    report.max_relative_error = std::max(report.max_relative_error, err);
    ++report.probes;
  }
  return report;
}

}  // namespace crossrec
