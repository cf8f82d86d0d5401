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

#ifndef CROSSREC_EVALUATION_HPP_
#define CROSSREC_EVALUATION_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crossrec/common.hpp"
#include "crossrec/training.hpp"

namespace crossrec {

// Candidates sorted by descending exp(cos(U_user, V_item)), ties broken by
// ascending item index.
std::vector<int> rank_items(const Matrix& user_emb, const Matrix& item_emb, int user,
                            std::span<const int> candidates);

struct HrNdcg {
  double hr = 0.0;
  double ndcg = 0.0;
};

// Ranks are 1-based, one per evaluated positive.
HrNdcg hr_ndcg(std::span<const int> ranks, int k);

struct RankedPositive {
  int user = 0;
  int item = 0;
  int rank = 0;
};

struct MetricReport {
  int k = 10;
  double hr = 0.0;
  double ndcg = 0.0;
  std::vector<RankedPositive> details;
};

// Full ranking: every (user, held-out item) pair is ranked against all items
// the user has not trained on, with the user's other held-out items removed.
// Threads split users; the result does not depend on the thread count.
MetricReport evaluate_ranking(const Matrix& user_emb, const Matrix& item_emb,
                              const std::vector<std::vector<int>>& train_items,
                              const std::vector<std::vector<int>>& held_out, int k,
                              int threads = 1);

struct Variant {
  std::string name;
  TrainConfig config;
};

// full, O, M, G built from one base configuration.
std::vector<Variant> standard_variants(const TrainConfig& base);
std::vector<Variant> lambda_sweep(const TrainConfig& base, const std::vector<double>& lambdas);
std::vector<Variant> epsilon_sweep(const TrainConfig& base, const std::vector<double>& epsilons);

struct AblationRow {
  std::string variant;
  DomainId domain = DomainId::kSource;
  std::uint64_t seed = 0;
  double hr = 0.0;
  double ndcg = 0.0;
};

struct AblationSummary {
  std::string variant;
  DomainId domain = DomainId::kSource;
  double hr_mean = 0.0;
  double hr_std = 0.0;  // population standard deviation over seeds
  double ndcg_mean = 0.0;
  double ndcg_std = 0.0;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::vector<AblationSummary> summary;
};

// Trains every variant on every seed (the variant's own seed is replaced)
// and evaluates on the test split. Runs are distributed over `threads`;
// each run is itself deterministic.
AblationTable run_ablation(const TrainingData& data, const std::vector<Variant>& variants,
                           const std::vector<std::uint64_t>& seeds, int threads = 1);

// variant,domain,seed,hr10,ndcg10  /  variant,domain,hr10_mean,hr10_std,...
std::string format_ablation_rows(const AblationTable& table, int k);
std::string format_ablation_summary(const AblationTable& table, int k);

}  // namespace crossrec

#endif  // CROSSREC_EVALUATION_HPP_
