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

#ifndef CROSSREC_PIPELINE_HPP_
#define CROSSREC_PIPELINE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "crossrec/domain_data.hpp"
#include "crossrec/evaluation.hpp"
#include "crossrec/hypergraph_cluster.hpp"
#include "crossrec/similarity_graph.hpp"
#include "crossrec/training.hpp"

namespace crossrec {

// Everything a command can be configured with. JSON sections: data, graph,
// cluster, matching, model, train, eval.
struct PipelineConfig {
  SyntheticConfig synthetic;
  RatingsOptions ratings = {4.0, 1};  // synthetic data is too small for the filter of 10
  int z = 5;
  FusionOptions fusion;
  ClusterOptions cluster;
  // Also carries the matching settings (epsilon, budget, tolerance), the
  // model shape and the cutoff k.
  TrainConfig train;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  // Throws kUsage on unknown keys or wrongly typed values.
  static PipelineConfig from_json(const std::string& text);
  static PipelineConfig load(const std::string& path);
  // Canonical form: every field present, keys sorted.
  std::string to_json() const;
  void validate() const;
};

// File names inside a data directory.
std::string ratings_file(DomainId domain);               // <domain>_ratings.tsv
std::string features_file(DomainId domain, const std::string& modality);
std::string overlap_file();                              // overlap.tsv
std::string graph_file(DomainId domain);                 // <domain>_graph.tsv
std::string gamma_file(DomainId domain);                 // <domain>_gamma.tsv

struct LoadedData {
  DomainDataset source;
  DomainDataset target;
  OverlapMap overlap;
};

// Reads ratings, every <domain>_<modality>.tsv feature file and the overlap.
LoadedData load_data_dir(const PipelineConfig& config, const std::string& dir);

// Splits seeded from `seed`; graphs read from `graph_dir`, or built in
// memory if its files are absent.
TrainingData prepare_training_data(const PipelineConfig& config, const LoadedData& data,
                                   std::uint64_t seed, const std::string& graph_dir);

// Modality graphs -> fused item graph for one domain.
FusionResult fuse_domain(const PipelineConfig& config, const DomainDataset& dataset);
// Clustering runs on max(A, A^T), the same graph propagation uses.
ClusterAssignment cluster_domain(const PipelineConfig& config, const Matrix& fused,
                                 std::uint64_t seed);

struct Checkpoint {
  int format_version = 1;
  int epoch = 0;
  std::uint64_t seed = 0;
  std::string config_json;
  DomainModel source;
  DomainModel target;
};

// manifest.json (JSON) + tensors.bin (little-endian float32), both written
// atomically.
void save_checkpoint(const std::string& dir, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& dir);

// Command bodies; each writes only into its output location.
void cmd_gen(const PipelineConfig& config, std::uint64_t seed, const std::string& out_dir);
void cmd_fuse(const PipelineConfig& config, const std::string& data_dir,
              const std::string& out_dir);
void cmd_cluster(const PipelineConfig& config, std::uint64_t seed, const std::string& graph_dir,
                 const std::string& out_dir);
// Embeddings: one row of tab-separated values per user. Overlap (optional,
// may be empty): `source_row\ttarget_row` per line.
void cmd_match(const PipelineConfig& config, const std::string& source_embeddings,
               const std::string& target_embeddings, const std::string& overlap_path,
               const std::string& out_path);
void cmd_train(const PipelineConfig& config, std::uint64_t seed, const std::string& data_dir,
               const std::string& graph_dir, const std::string& out_dir);
void cmd_eval(const PipelineConfig& config, const std::string& checkpoint_dir,
              const std::string& data_dir, const std::string& graph_dir, int threads,
              const std::string& out_dir);
// sweep: "" (full/O/M/G), "lambda" or "epsilon".
void cmd_ablate(const PipelineConfig& config, std::uint64_t seed, const std::string& data_dir,
                const std::string& graph_dir, const std::string& sweep, int threads,
                const std::string& out_dir);

}  // namespace crossrec

#endif  // CROSSREC_PIPELINE_HPP_
