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

#include <cmath>
#include <vector>

#include "crossrec/hypergraph_cluster.hpp"
#include "crossrec/similarity_graph.hpp"
#include "crossrec/training.hpp"
#include "doctest.h"
#include "instances.hpp"
#include "oracles.hpp"

using namespace crossrec;

namespace {

DomainTrainData prepare(const DomainDataset& ds, std::uint64_t seed, int clusters) {
  std::vector<Matrix> feats;
  for (const auto& [name, m] : ds.features) feats.push_back(m);
  const Matrix fused = build_item_graph(feats, 2).fused;
  ClusterOptions o;
  o.num_clusters = clusters;
  const Matrix gamma = sishe_cluster(fused.cwiseMax(fused.transpose()), o).gamma;
  return make_train_data(ds, split_dataset(ds, seed), fused, gamma);
}

TrainingData tiny_data(int users, int items, int per_user, std::uint64_t seed) {
  SyntheticConfig c;
  c.num_users_source = c.num_users_target = users;
  c.num_items_source = c.num_items_target = items;
  c.interactions_per_user_source = c.interactions_per_user_target = per_user;
  c.overlap_ratio = 0.5;
  c.modality_dims = {{"text", 3}};
  const SyntheticData syn = generate_synthetic(c, seed);
  TrainingData d;
  d.source = prepare(syn.source, seed + 1, 2);
  d.target = prepare(syn.target, seed + 2, 2);
  d.overlap = syn.overlap;
  return d;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.dim = 4;
  c.layers = 2;
  c.batch_size = 4;
  c.neg_samples = 2;
  c.epochs = 2;
  c.seed = 3;
  return c;
}

// All parameters of both models, flattened in a fixed order.
std::vector<double*> parameters(DomainModel& m) {
  std::vector<double*> p;
  auto add = [&](double* data, Eigen::Index n) {
    for (Eigen::Index k = 0; k < n; ++k) p.push_back(data + k);
  };
  add(m.user_table.data(), m.user_table.size());
  add(m.item_table.data(), m.item_table.size());
  add(m.attn_u.data(), m.attn_u.size());
  add(m.attn_v.data(), m.attn_v.size());
  add(m.attn_vtilde.data(), m.attn_vtilde.size());
  add(m.attn_vhat.data(), m.attn_vhat.size());
  for (Matrix& w : m.hyper_weights) add(w.data(), w.size());
  return p;
}

std::vector<double> gradient_values(const ModelGradient& g) {
  std::vector<double> out;
  auto add = [&](const double* data, Eigen::Index n) { out.insert(out.end(), data, data + n); };
  add(g.user_table.data(), g.user_table.size());
  add(g.item_table.data(), g.item_table.size());
  add(g.attn_u.data(), g.attn_u.size());
  add(g.attn_v.data(), g.attn_v.size());
  add(g.attn_vtilde.data(), g.attn_vtilde.size());
  add(g.attn_vhat.data(), g.attn_vhat.size());
  for (const Matrix& w : g.hyper_weights) add(w.data(), w.size());
  return out;
}

StepBatch full_batch(const TrainingData& d) {
  StepBatch b;
  for (CfBatch* cf : {&b.source, &b.target}) {
    const DomainTrainData& dom = cf == &b.source ? d.source : d.target;
    for (int u = 0; u < dom.graphs.num_users; ++u) {
      cf->users.push_back(u);
      cf->positives.push_back(dom.train_items[u].front());
      std::vector<int> neg;
      for (int i = 0; i < dom.graphs.num_items && neg.size() < 2; ++i) {
        if (!std::binary_search(dom.train_items[u].begin(), dom.train_items[u].end(), i)) neg.push_back(i);
      }
      cf->negatives.push_back(neg);
    }
  }
  for (const auto& [s, t] : d.overlap.pairs) b.overlap_positions.emplace_back(s, t);
  return b;
}

}  // namespace

TEST_CASE("similarity kernel values") {
  Vector a(2), b(2), c(2), d(2);
  a << 1, 0;
  b << 0, 3;
  c << -1, 0;
  d << 2, 0;
  CHECK(similarity_kernel(a, d) == doctest::Approx(std::exp(1.0)));
  CHECK(similarity_kernel(a, b) == doctest::Approx(1.0));
  CHECK(similarity_kernel(a, c) == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK_THROWS_AS(similarity_kernel(a, Vector::Zero(2)), Error);
}

TEST_CASE("recommendation loss worked examples") {
  Matrix u(1, 2), v(3, 2);
  u << 1, 0;
  v << 1, 0,
       -1, 0,
       1, 0;
  CfBatch equal{{0}, {0}, {{2}}};
  CHECK(cf_loss(u, v, equal).value == doctest::Approx(0.0).epsilon(1e-15));
  CfBatch opposite{{0}, {0}, {{1}}};
  CHECK(cf_loss(u, v, opposite).value == doctest::Approx(-2.0));
  // n identical negatives with similarity s: -log s+ + log(n s).
  Matrix v2(4, 2);
  v2 << 1, 0, 0, 1, 0, 1, 0, 1;
  CfBatch three{{0}, {0}, {{1, 2, 3}}};
  CHECK(cf_loss(u, v2, three).value == doctest::Approx(-1.0 + std::log(3.0)));
}

TEST_CASE("recommendation loss ignores row scale [property]") {
  Rng rng(1);
  const Matrix u = instances::gaussian(3, 4, rng), v = instances::gaussian(5, 4, rng);
  CfBatch b{{0, 1, 2}, {0, 3, 4}, {{1, 2}, {0, 2}, {1, 3}}};
  const double base = cf_loss(u, v, b).value;
  for (int row = 0; row < 3; ++row) {
    Matrix us = u;
    us.row(row) *= 3.7;
    CHECK(cf_loss(us, v, b).value == doctest::Approx(base).epsilon(1e-12));
  }
  Matrix vs = v;
  vs.row(3) *= 0.2;
  CHECK(cf_loss(u, vs, b).value == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("guidance loss worked examples") {
  SUBCASE("one negative as similar as the positive") {
    Matrix s(2, 2);
    s << 1, 0, 1, 0;
    CHECK(guidance_loss(s, s, Matrix::Identity(2, 2)).value == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("orthogonal negatives sum to -4") {
    Matrix s(2, 2);
    s << 1, 0, 0, 1;
    CHECK(guidance_loss(s, s, Matrix::Identity(2, 2)).value == doctest::Approx(-4.0));
  }
  SUBCASE("scale invariance") {
    Rng rng(2);
    const Matrix s = instances::gaussian(4, 3, rng), t = instances::gaussian(4, 3, rng);
    const Matrix plan = instances::uniform(4, 4, rng);
    CHECK(guidance_loss(2.0 * s, 2.0 * t, plan).value ==
          doctest::Approx(guidance_loss(s, t, plan).value).epsilon(1e-12));
  }
}

TEST_CASE("total loss") {
  CHECK(total_loss(1, 2, 3, 0.6) == doctest::Approx(4.8));
  CHECK(total_loss(1, 2, 0, 0.3) == total_loss(1, 2, 0, 0.9));
  CHECK(total_loss(1, 2, 5, 0.0) == 3.0);
}

TEST_CASE("gradient check helper") {
  Rng rng(3);
  std::vector<double> p(20);
  for (double& x : p) x = standard_normal(rng);
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = 2 * p[i];
  auto quad = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
  };
  const GradientCheckReport r = gradient_check(quad, p, g, 20, rng);
  CHECK(r.probes == 20);
  CHECK(r.max_relative_error < 1e-9);
  g[3] += 1.0;
  CHECK(gradient_check(quad, p, g, 20, rng).max_relative_error > 0.5);
}

TEST_CASE("loss gradients against finite differences [property]") {
  Rng rng(4);
  SUBCASE("recommendation loss") {
    const Matrix u = instances::gaussian(3, 4, rng), v = instances::gaussian(5, 4, rng);
    CfBatch b{{0, 1, 2}, {0, 3, 4}, {{1, 2}, {0, 2}, {1, 3}}};
    const CfLoss l = cf_loss(u, v, b);
    std::vector<double> p(u.data(), u.data() + u.size());
    p.insert(p.end(), v.data(), v.data() + v.size());
    std::vector<double> g(l.grad_user.data(), l.grad_user.data() + u.size());
    g.insert(g.end(), l.grad_item.data(), l.grad_item.data() + v.size());
    auto f = [&](const std::vector<double>& x) {
      return cf_loss(Eigen::Map<const Matrix>(x.data(), 3, 4),
                     Eigen::Map<const Matrix>(x.data() + 12, 5, 4), b).value;
    };
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double fd = oracle::central_difference(f, p, k);
      CHECK(std::abs(fd - g[k]) / std::max(1.0, std::abs(fd)) < 1e-6);
    }
  }
  SUBCASE("guidance loss with a fixed soft plan") {
    const Matrix s = instances::gaussian(4, 3, rng), t = instances::gaussian(4, 3, rng);
    Matrix plan = instances::uniform(4, 4, rng);
    plan.array().rowwise() /= plan.colwise().sum().array();
    const GuidanceLoss l = guidance_loss(s, t, plan);
    std::vector<double> p(s.data(), s.data() + s.size());
    p.insert(p.end(), t.data(), t.data() + t.size());
    std::vector<double> g(l.grad_source.data(), l.grad_source.data() + 12);
    g.insert(g.end(), l.grad_target.data(), l.grad_target.data() + 12);
    auto f = [&](const std::vector<double>& x) {
      return guidance_loss(Eigen::Map<const Matrix>(x.data(), 4, 3),
                           Eigen::Map<const Matrix>(x.data() + 12, 4, 3), plan).value;
    };
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double fd = oracle::central_difference(f, p, k);
      CHECK(std::abs(fd - g[k]) / std::max(1.0, std::abs(fd)) < 1e-6);
    }
  }
}

TEST_CASE("full step gradient with the plan held fixed [property]") {
  const TrainingData d = tiny_data(4, 4, 2, 7);
  TrainConfig c = tiny_config();
  c.train_hyper_weights = true;
  auto [s, t] = init_models(d, c);
  const StepBatch batch = full_batch(d);
  Rng rng(5);
  Matrix plan = instances::uniform(4, 4, rng);
  plan.array().rowwise() /= plan.colwise().sum().array();
  const StepResult r = step_loss(d, s, t, batch, c, &plan);
  std::vector<double*> ps = parameters(s), pt = parameters(t);
  std::vector<double*> all = ps;
  all.insert(all.end(), pt.begin(), pt.end());
  std::vector<double> g = gradient_values(r.grad_source);
  const std::vector<double> gt = gradient_values(r.grad_target);
  g.insert(g.end(), gt.begin(), gt.end());
  REQUIRE(g.size() == all.size());
  std::vector<double> x0(all.size());
  for (std::size_t k = 0; k < all.size(); ++k) x0[k] = *all[k];
  auto f = [&](const std::vector<double>& x) {
    for (std::size_t k = 0; k < all.size(); ++k) *all[k] = x[k];
    return step_loss(d, s, t, batch, c, &plan).total;
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const double fd = oracle::central_difference(f, x0, k);
    worst = std::max(worst, std::abs(fd - g[k]) / std::max(1.0, std::abs(fd)));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("a small gradient step descends") {
  const TrainingData d = tiny_data(4, 4, 2, 8);
  const TrainConfig c = tiny_config();
  auto [s, t] = init_models(d, c);
  const StepBatch batch = full_batch(d);
  const Matrix plan = Matrix::Identity(4, 4);
  const StepResult r = step_loss(d, s, t, batch, c, &plan);
  bool descended = false;
  for (double lr = 1e-1; lr >= 1e-8 && !descended; lr /= 10) {
    DomainModel s2 = s, t2 = t;
    s2.user_table -= lr * r.grad_source.user_table;
    s2.item_table -= lr * r.grad_source.item_table;
    t2.user_table -= lr * r.grad_target.user_table;
    t2.item_table -= lr * r.grad_target.item_table;
    descended = step_loss(d, s2, t2, batch, c, &plan).total < r.total;
  }
  CHECK(descended);
}

TEST_CASE("training contracts") {
  const TrainingData d = tiny_data(16, 12, 4, 9);
  SUBCASE("zero learning rate leaves the models untouched") {
    TrainConfig c = tiny_config();
    c.epochs = 1;
    c.learning_rate = 0.0;
    c.select_best_epoch = false;
    auto [s, t] = init_models(d, c);
    const TrainResult r = train(d, c, s, t);
    CHECK(r.source.user_table == s.user_table);
    CHECK(r.source.item_table == s.item_table);
    CHECK(r.target.item_table == t.item_table);
    CHECK(r.target.attn_vhat == t.attn_vhat);
  }
  SUBCASE("the no-guidance ablation never evaluates the cross-domain term") {
    TrainConfig c = tiny_config();
    c.ablation = Ablation::kNoGuidance;
    CHECK(train(d, c).guidance_evaluations == 0);
    c.ablation = Ablation::kFull;
    CHECK(train(d, c).guidance_evaluations > 0);
  }
  SUBCASE("identical seeds give identical traces") {
    TrainConfig c = tiny_config();
    CHECK(format_trace_csv(train(d, c).trace, 10) == format_trace_csv(train(d, c).trace, 10));
  }
  SUBCASE("traces stay finite") {
    TrainConfig c = tiny_config();
    c.epochs = 5;
    for (const EpochRecord& e : train(d, c).trace) {
      CHECK(std::isfinite(e.loss_total));
      CHECK(std::isfinite(e.loss_c));
    }
  }
  SUBCASE("bad configuration") {
    TrainConfig c = tiny_config();
    c.batch_size = 0;
    CHECK_THROWS_AS(train(d, c), Error);
  }
}

TEST_CASE("with lambda 0 each domain trains as if alone [property]") {
  const TrainingData a = tiny_data(16, 12, 4, 10);
  TrainingData b = a;
  b.target = tiny_data(16, 12, 4, 11).target;
  TrainConfig c = tiny_config();
  c.lambda = 0.0;
  c.epochs = 3;
  c.select_best_epoch = false;
  const TrainResult ra = train(a, c);
  const TrainResult rb = train(b, c);
  CHECK(ra.source.user_table == rb.source.user_table);
  CHECK(ra.source.item_table == rb.source.item_table);
  CHECK(ra.source.attn_u == rb.source.attn_u);
  for (std::size_t e = 0; e < ra.trace.size(); ++e) {
    CHECK(ra.trace[e].loss_rs == rb.trace[e].loss_rs);
    CHECK(ra.trace[e].hr_val_source == rb.trace[e].hr_val_source);
  }
  // The no-guidance ablation takes the same path.
  c.lambda = 0.6;
  c.ablation = Ablation::kNoGuidance;
  CHECK(train(a, c).source.user_table == ra.source.user_table);
}

TEST_CASE("trace format") {
  std::vector<EpochRecord> t(1);
  t[0].epoch = 1;
  const std::string csv = format_trace_csv(t, 10);
  CHECK(csv.rfind("epoch,loss_total,loss_rs,loss_rt,loss_c,hr10_val_s,hr10_val_t,", 0) == 0);
}

TEST_CASE("ablation names round-trip") {
  for (Ablation a : {Ablation::kFull, Ablation::kNoGuidance, Ablation::kOverlapOnly, Ablation::kNoMask}) {
    CHECK(parse_ablation(ablation_name(a)) == a);
  }
  CHECK_THROWS_AS(parse_ablation("X"), Error);
}
