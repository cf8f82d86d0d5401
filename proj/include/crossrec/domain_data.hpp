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

#ifndef CROSSREC_DOMAIN_DATA_HPP_
#define CROSSREC_DOMAIN_DATA_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "crossrec/common.hpp"

namespace crossrec {

enum class DomainId { kSource, kTarget };

const char* domain_name(DomainId domain);

struct Interaction {
  int user = 0;
  int item = 0;
  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

// One rating domain after binarization and filtering. `user_ids[u]` and
// `item_ids[i]` map contiguous indices back to the raw ids, in sorted order.
struct DomainDataset {
  DomainId domain = DomainId::kSource;
  int num_users = 0;
  int num_items = 0;
  std::vector<Interaction> interactions;  // sorted, unique
  std::map<std::string, Matrix> features;  // modality -> num_items x dim
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;

  // Throws kData if any invariant fails.
  void validate() const;
};

// Known cross-domain identities, as (source user, target user) indices.
struct OverlapMap {
  std::vector<std::pair<int, int>> pairs;
  double ratio = 0.0;

  void validate(int num_source_users, int num_target_users) const;
};

struct Split {
  std::vector<Interaction> train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
};

// Symmetric [[0, R], [R^T, 0]] over users followed by items.
struct BipartiteGraph {
  int num_users = 0;
  int num_items = 0;
  SparseMatrix adjacency;
};

struct RatingsOptions {
  double threshold = 4.0;
  int min_interactions = 10;
};

DomainDataset load_ratings(const std::string& path, const RatingsOptions& options,
                           DomainId domain = DomainId::kSource);

// Rows come back in the order of `item_ids`, whatever the file order.
// `skip_unknown` ignores rows of items that rating filtering removed.
Matrix load_features(const std::string& path, const std::vector<std::string>& item_ids,
                     bool skip_unknown = false);

OverlapMap load_overlap(const std::string& path, const DomainDataset& source,
                        const DomainDataset& target);

struct SyntheticConfig {
  int num_users_source = 500;
  int num_users_target = 500;
  int num_items_source = 300;
  int num_items_target = 300;
  int latent_dim = 8;
  double overlap_ratio = 0.1;
  // Users and items are drawn around shared prototypes so that preference
  // structure carries across domains.
  int user_groups = 10;
  int item_groups = 15;
  double user_spread = 0.35;
  double item_spread = 0.35;
  std::map<std::string, int> modality_dims = {{"text", 24}, {"visual", 32}};
  double noise = 0.1;
  int interactions_per_user_source = 12;
  int interactions_per_user_target = 12;
  double sharpness = 3.0;
};

struct SyntheticData {
  DomainDataset source;
  DomainDataset target;
  OverlapMap overlap;
};

SyntheticData generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// Per-user stratified 8:1:1 split. Every user keeps at least one training
// interaction; global validation/test sizes are round(total/10).
Split split_dataset(const DomainDataset& dataset, std::uint64_t seed);

BipartiteGraph build_bipartite(const DomainDataset& dataset, const Split& split);

// Per-user item sets for one part of a split.
std::vector<std::vector<int>> items_by_user(int num_users, const std::vector<Interaction>& part);

// TSV writers matching the loaders above.
void write_ratings(const std::string& path, const DomainDataset& dataset);
void write_features(const std::string& path, const DomainDataset& dataset,
                    const std::string& modality);
void write_overlap(const std::string& path, const OverlapMap& overlap,
                   const DomainDataset& source, const DomainDataset& target);

}  // namespace crossrec

#endif  // CROSSREC_DOMAIN_DATA_HPP_
