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

#ifndef CROSSREC_TRAINING_HPP_
#define CROSSREC_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "crossrec/common.hpp"
#include "crossrec/domain_data.hpp"
#include "crossrec/propagation.hpp"

namespace crossrec {

// Variants of the cross-domain term. kNoGuidance drops it (lambda = 0),
// kOverlapOnly contrasts declared overlapped pairs only, kNoMask matches
// users without the overlap mask.
enum class Ablation { kFull, kNoGuidance, kOverlapOnly, kNoMask };

const char* ablation_name(Ablation ablation);  // "full", "O", "M", "G"
Ablation parse_ablation(const std::string& name);

struct TrainConfig {
  double lambda = 0.6;
  double epsilon = 0.01;
  int batch_size = 256;
  int neg_samples = 10;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int epochs = 100;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::kFull;
  int dim = 128;
  int layers = 3;
  bool train_hyper_weights = false;
  // Divide the summed cross-domain loss by the number of anchors per side,
  // putting it on the same per-user scale as the batch-mean
  // recommendation loss. With the plain sum it outweighs that loss by a
  // factor of the batch size.
  bool average_guidance = true;
  int eval_k = 10;
  int wafi_max_iters = 5000;
  double wafi_tol = 1e-10;
  // Keep the epoch with the best mean validation HR@k of both domains.
  bool select_best_epoch = true;

  // True when the cross-domain term takes part in training.
  bool guided() const { return ablation != Ablation::kNoGuidance && lambda != 0.0; }
  void validate() const;
};

// exp(cos(a, b)); throws kInvalidArgument on a zero vector.
double similarity_kernel(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

// One domain's recommendation batch: a positive and its negatives per user.
struct CfBatch {
  std::vector<int> users;
  std::vector<int> positives;
  std::vector<std::vector<int>> negatives;
};

struct CfLoss {
  double value = 0.0;
  Matrix grad_user;  // dL/dU, full table shape
  Matrix grad_item;  // dL/dV, full table shape
};

// mean over the batch of -log S(U_u, V_pos) + log sum_neg S(U_u, V_neg)
CfLoss cf_loss(const Matrix& user_emb, const Matrix& item_emb, const CfBatch& batch);

struct GuidanceLoss {
  double value = 0.0;
  Matrix grad_source;  // dL/dU_s, batch rows
  Matrix grad_target;  // dL/dU_t, batch rows
};

// Cross-domain contrast, summed over both directions. Source anchor i is
// pulled toward row i of plan * U_t and pushed from every target row except
// the one carrying the largest mass in plan row i; target anchors mirror
// this with plan^T * U_s and column argmaxes. The plan is a constant.
GuidanceLoss guidance_loss(const Matrix& source, const Matrix& target, const Matrix& plan);

inline double total_loss(double rs, double rt, double c, double lambda) {
  return rs + rt + lambda * c;
}

// What training needs from one prepared domain.
struct DomainTrainData {
  DomainGraphs graphs;
  std::vector<std::vector<int>> train_items;  // per user, sorted
  std::vector<std::vector<int>> validation_items;
  std::vector<std::vector<int>> test_items;
  std::size_t num_train = 0;
};

DomainTrainData make_train_data(const DomainDataset& dataset, const Split& split,
                                const Matrix& fused_graph, const Matrix& gamma);

struct TrainingData {
  DomainTrainData source;
  DomainTrainData target;
  OverlapMap overlap;
};

// A full training step's inputs: both domains' batches and the overlapped
// pairs found inside them, as (source position, target position).
struct StepBatch {
  CfBatch source;
  CfBatch target;
  std::vector<std::pair<int, int>> overlap_positions;
};

struct StepResult {
  double total = 0.0;
  double loss_rs = 0.0;
  double loss_rt = 0.0;
  double loss_c = 0.0;
  ModelGradient grad_source;
  ModelGradient grad_target;
  Matrix plan;  // empty when no matching was solved
  bool guidance_evaluated = false;
  bool matching_converged = true;
};

// Total loss and its gradient for one batch. A non-null
// `fixed_plan` replaces the matching solve, which lets gradient checks
// hold the plan constant.
StepResult step_loss(const TrainingData& data, const DomainModel& source,
                     const DomainModel& target, const StepBatch& batch,
                     const TrainConfig& config, const Matrix* fixed_plan = nullptr);

struct EpochRecord {
  int epoch = 0;
  double loss_total = 0.0;
  double loss_rs = 0.0;
  double loss_rt = 0.0;
  double loss_c = 0.0;
  double hr_val_source = 0.0;
  double hr_val_target = 0.0;
  double ndcg_val_source = 0.0;
  double ndcg_val_target = 0.0;
  int matchings = 0;
  int unconverged_matchings = 0;
};

struct TrainResult {
  DomainModel source;
  DomainModel target;
  int best_epoch = 0;  // 0 = initial models
  std::vector<EpochRecord> trace;
  long long guidance_evaluations = 0;
};

std::pair<DomainModel, DomainModel> init_models(const TrainingData& data,
                                                const TrainConfig& config);

// Adam on both domains. Single-threaded and deterministic for a seed; with
// the cross-domain term off, each domain draws from its own random stream
// and never reads the other, so it trains exactly as it would alone.
TrainResult train(const TrainingData& data, const TrainConfig& config);
TrainResult train(const TrainingData& data, const TrainConfig& config, DomainModel source,
                  DomainModel target);

// `epoch,loss_total,loss_rs,loss_rt,loss_c,hr10_val_s,hr10_val_t,...`
std::string format_trace_csv(const std::vector<EpochRecord>& trace, int k);

struct GradientCheckReport {
  int probes = 0;
  double max_relative_error = 0.0;
};

// Central differences on `probes` random coordinates of `params`.
// Relative error is |analytic - numeric| / max(1, |numeric|).
GradientCheckReport gradient_check(const std::function<double(const std::vector<double>&)>& loss,
                                   const std::vector<double>& params,
                                   const std::vector<double>& analytic, int probes, Rng& rng,
                                   double step = 1e-5);

}  // namespace crossrec

#endif  // CROSSREC_TRAINING_HPP_
