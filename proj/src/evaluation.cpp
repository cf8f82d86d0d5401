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

#include "crossrec/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "crossrec/tsv_io.hpp"

namespace crossrec {

namespace {

// exp(cos(U_user, V_i)) for every item i.
Vector user_scores(const Matrix& user_emb, const Matrix& unit_items, int user) {
  const double norm = user_emb.row(user).norm();
  if (!(norm > 0.0)) throw_invalid("degenerate user embedding " + std::to_string(user));
  const Vector cos = unit_items * (user_emb.row(user).transpose() / norm);
  return cos.array().exp();
}

Matrix unit_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (!(n > 0.0)) throw_invalid("degenerate item embedding " + std::to_string(i));
    out.row(i) = m.row(i) / n;
  }
  return out;
}

bool ranks_before(const Vector& scores, int a, int b) {
  return scores(a) > scores(b) || (scores(a) == scores(b) && a < b);
}

}  // namespace

std::vector<int> rank_items(const Matrix& user_emb, const Matrix& item_emb, int user,
                            std::span<const int> candidates) {
  if (candidates.empty()) throw_invalid("no candidate items to rank");
  if (user < 0 || user >= user_emb.rows()) throw_invalid("user index out of range");
  const Vector scores = user_scores(user_emb, unit_rows(item_emb), user);
  std::vector<int> ranked(candidates.begin(), candidates.end());
  std::sort(ranked.begin(), ranked.end(),
            [&](int a, int b) { return ranks_before(scores, a, b); });
  return ranked;
}

HrNdcg hr_ndcg(std::span<const int> ranks, int k) {
  HrNdcg out;
  if (ranks.empty()) return out;
  for (int r : ranks) {
    if (r >= 1 && r <= k) {
      out.hr += 1.0;
      out.ndcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
    }
  }
  out.hr /= static_cast<double>(ranks.size());
  out.ndcg /= static_cast<double>(ranks.size());
  return out;
}

MetricReport evaluate_ranking(const Matrix& user_emb, const Matrix& item_emb,
                              const std::vector<std::vector<int>>& train_items,
                              const std::vector<std::vector<int>>& held_out, int k,
                              int threads) {
  const int num_users = static_cast<int>(held_out.size());
  if (train_items.size() != held_out.size() || user_emb.rows() != num_users) {
    throw_invalid("evaluation inputs disagree on the number of users");
  }
  MetricReport report;
  report.k = k;
  std::vector<std::size_t> offset(num_users + 1, 0);
  for (int u = 0; u < num_users; ++u) offset[u + 1] = offset[u] + held_out[u].size();
  report.details.resize(offset[num_users]);
  if (report.details.empty()) return report;

  const Matrix unit_items = unit_rows(item_emb);
  const int num_items = static_cast<int>(item_emb.rows());
  auto work = [&](int begin, int end) {
    std::vector<char> excluded(num_items);
    for (int u = begin; u < end; ++u) {
      if (held_out[u].empty()) continue;
      const Vector scores = user_scores(user_emb, unit_items, u);
      std::fill(excluded.begin(), excluded.end(), 0);
      for (int i : train_items[u]) excluded[i] = 1;
      for (int i : held_out[u]) excluded[i] = 1;
      for (std::size_t p = 0; p < held_out[u].size(); ++p) {
        const int item = held_out[u][p];
        int rank = 1;
        for (int c = 0; c < num_items; ++c) {
          if (!excluded[c] && ranks_before(scores, c, item)) ++rank;
        }
        report.details[offset[u] + p] = {u, item, rank};
      }
    }
  };
  const int workers = std::clamp(threads, 1, std::max(1, num_users));
  if (workers == 1) {
    work(0, num_users);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (num_users + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(num_users, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  std::vector<int> ranks;
  ranks.reserve(report.details.size());
  for (const auto& d : report.details) ranks.push_back(d.rank);
  const HrNdcg m = hr_ndcg(ranks, k);
  report.hr = m.hr;
  report.ndcg = m.ndcg;
  return report;
}

std::vector<Variant> standard_variants(const TrainConfig& base) {
  std::vector<Variant> out;
  for (Ablation a : {Ablation::kFull, Ablation::kNoGuidance, Ablation::kOverlapOnly,
                     Ablation::kNoMask}) {
    TrainConfig c = base;
    c.ablation = a;
    out.push_back({ablation_name(a), c});
  }
  return out;
}

std::vector<Variant> lambda_sweep(const TrainConfig& base, const std::vector<double>& lambdas) {
  std::vector<Variant> out;
  for (double l : lambdas) {
    TrainConfig c = base;
    c.lambda = l;
    out.push_back({"lambda=" + io::format_double(l), c});
  }
  return out;
}

std::vector<Variant> epsilon_sweep(const TrainConfig& base, const std::vector<double>& epsilons) {
  std::vector<Variant> out;
  for (double e : epsilons) {
    TrainConfig c = base;
    c.epsilon = e;
    out.push_back({"epsilon=" + io::format_double(e), c});
  }
  return out;
}

AblationTable run_ablation(const TrainingData& data, const std::vector<Variant>& variants,
                           const std::vector<std::uint64_t>& seeds, int threads) {
  if (variants.empty() || seeds.empty()) throw_invalid("ablation needs variants and seeds");
  for (const Variant& v : variants) v.config.validate();
  const std::size_t jobs = variants.size() * seeds.size();
  std::vector<std::pair<MetricReport, MetricReport>> results(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t job = next++; job < jobs; job = next++) {
      try {
        TrainConfig config = variants[job / seeds.size()].config;
        config.seed = seeds[job % seeds.size()];
        const TrainResult trained = train(data, config);
        const PropagationOutput s = propagate(data.source.graphs, trained.source);
        const PropagationOutput t = propagate(data.target.graphs, trained.target);
        results[job].first = evaluate_ranking(s.user_emb, s.item_emb, data.source.train_items,
                                              data.source.test_items, config.eval_k);
        results[job].second = evaluate_ranking(t.user_emb, t.item_emb, data.target.train_items,
                                               data.target.test_items, config.eval_k);
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp<int>(threads, 1, static_cast<int>(jobs));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  AblationTable table;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (DomainId domain : {DomainId::kSource, DomainId::kTarget}) {
      std::vector<double> hr, ndcg;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const auto& pair = results[v * seeds.size() + s];
        const MetricReport& r = domain == DomainId::kSource ? pair.first : pair.second;
        table.rows.push_back({variants[v].name, domain, seeds[s], r.hr, r.ndcg});
        hr.push_back(r.hr);
        ndcg.push_back(r.ndcg);
      }
      auto stats = [](const std::vector<double>& x) {
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
        double var = 0.0;
        for (double v : x) var += (v - mean) * (v - mean);
        return std::pair{mean, std::sqrt(var / x.size())};
      };
      const auto [hm, hs] = stats(hr);
      const auto [nm, ns] = stats(ndcg);
      table.summary.push_back({variants[v].name, domain, hm, hs, nm, ns});
    }
  }
  return table;
}

std::string format_ablation_rows(const AblationTable& table, int k) {
  const std::string kk = std::to_string(k);
  std::string out = "variant,domain,seed,hr" + kk + ",ndcg" + kk + "\n";
  for (const auto& r : table.rows) {
    out += r.variant + ',' + domain_name(r.domain) + ',' + std::to_string(r.seed) + ',' +
           io::format_double(r.hr) + ',' + io::format_double(r.ndcg) + '\n';
  }
  return out;
}

std::string format_ablation_summary(const AblationTable& table, int k) {
  const std::string kk = std::to_string(k);
  std::string out = "variant,domain,hr" + kk + "_mean,hr" + kk + "_std,ndcg" + kk + "_mean,ndcg" +
                    kk + "_std\n";
  for (const auto& s : table.summary) {
    out += s.variant + ',' + domain_name(s.domain) + ',' + io::format_double(s.hr_mean) + ',' +
           io::format_double(s.hr_std) + ',' + io::format_double(s.ndcg_mean) + ',' +
           io::format_double(s.ndcg_std) + '\n';
  }
  return out;
}

}  // namespace crossrec
