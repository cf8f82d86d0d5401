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

#include "crossrec/domain_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "crossrec/tsv_io.hpp"

namespace crossrec {

const char* domain_name(DomainId domain) {
  return domain == DomainId::kSource ? "source" : "target";
}

void DomainDataset::validate() const {
  if (num_users <= 0 || num_items <= 0 || interactions.empty()) {
    throw_data(std::string(domain_name(domain)) + ": empty dataset");
  }
  std::vector<char> user_seen(num_users, 0);
  std::vector<char> item_seen(num_items, 0);
  for (const auto& x : interactions) {
    if (x.user < 0 || x.user >= num_users || x.item < 0 || x.item >= num_items) {
      throw_data("interaction index out of range");
    }
    user_seen[x.user] = 1;
    item_seen[x.item] = 1;
  }
  if (std::find(user_seen.begin(), user_seen.end(), 0) != user_seen.end()) {
    throw_data("a user has no interactions");
  }
  if (std::find(item_seen.begin(), item_seen.end(), 0) != item_seen.end()) {
    throw_data("an item has no interactions");
  }
  for (const auto& [name, m] : features) {
    if (m.rows() != num_items) {
      throw_data("feature '" + name + "' has " + std::to_string(m.rows()) +
                 " rows for " + std::to_string(num_items) + " items");
    }
  }
}

void OverlapMap::validate(int num_source_users, int num_target_users) const {
  std::set<int> sources;
  std::set<int> targets;
  for (const auto& [s, t] : pairs) {
    if (s < 0 || s >= num_source_users || t < 0 || t >= num_target_users) {
      throw_data("overlap pair index out of range");
    }
    if (!sources.insert(s).second || !targets.insert(t).second) {
      throw_data("overlap pairs are not one-to-one");
    }
  }
}

namespace {

using RawPair = std::pair<std::string, std::string>;

// Repeatedly drops users and items below `min_count` until the set is stable,
// then assigns sorted contiguous indices.
DomainDataset index_interactions(std::vector<RawPair> raw, int min_count, DomainId domain) {
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  while (true) {
    std::unordered_map<std::string, int> user_count;
    std::unordered_map<std::string, int> item_count;
    for (const auto& [u, i] : raw) {
      ++user_count[u];
      ++item_count[i];
    }
    const auto before = raw.size();
    std::erase_if(raw, [&](const RawPair& p) {
      return user_count[p.first] < min_count || item_count[p.second] < min_count;
    });
    if (raw.size() == before) break;
  }
  if (raw.empty()) throw_data(std::string(domain_name(domain)) + ": empty dataset after filtering");

  DomainDataset ds;
  ds.domain = domain;
  std::set<std::string> users;
  std::set<std::string> items;
  for (const auto& [u, i] : raw) {
    users.insert(u);
    items.insert(i);
  }
  ds.user_ids.assign(users.begin(), users.end());
  ds.item_ids.assign(items.begin(), items.end());
  ds.num_users = static_cast<int>(ds.user_ids.size());
  ds.num_items = static_cast<int>(ds.item_ids.size());
  std::unordered_map<std::string, int> user_index;
  std::unordered_map<std::string, int> item_index;
  for (int k = 0; k < ds.num_users; ++k) user_index[ds.user_ids[k]] = k;
  for (int k = 0; k < ds.num_items; ++k) item_index[ds.item_ids[k]] = k;
  ds.interactions.reserve(raw.size());
  for (const auto& [u, i] : raw) ds.interactions.push_back({user_index[u], item_index[i]});
  std::sort(ds.interactions.begin(), ds.interactions.end());
  return ds;
}

int find_id(const std::vector<std::string>& sorted_ids, std::string_view id) {
  auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(), id);
  if (it == sorted_ids.end() || *it != id) return -1;
  return static_cast<int>(it - sorted_ids.begin());
}

std::string padded_id(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%06d", prefix, index);
  return buf;
}

}  // namespace

DomainDataset load_ratings(const std::string& path, const RatingsOptions& options,
                           DomainId domain) {
  if (options.min_interactions < 1) throw_invalid("min_interactions must be >= 1");
  const std::string text = io::read_file(path);
  std::vector<RawPair> raw;
  for (const auto& line : io::split_tsv(text)) {
    if (line.fields.size() != 3 || line.fields[0].empty() || line.fields[1].empty()) {
      throw_data(path + ":" + std::to_string(line.number) +
                 ": expected user_id<TAB>item_id<TAB>rating");
    }
    const double rating = io::parse_double(line.fields[2], path, line.number);
    if (rating >= options.threshold) {
      raw.emplace_back(std::string(line.fields[0]), std::string(line.fields[1]));
    }
  }
  return index_interactions(std::move(raw), options.min_interactions, domain);
}

Matrix load_features(const std::string& path, const std::vector<std::string>& item_ids,
                     bool skip_unknown) {
  const std::string text = io::read_file(path);
  const auto lines = io::split_tsv(text);
  const auto n = static_cast<Eigen::Index>(item_ids.size());
  Matrix out;
  std::vector<char> filled(item_ids.size(), 0);
  Eigen::Index dim = -1;
  for (const auto& line : lines) {
    if (line.fields.size() < 2) {
      throw_data(path + ":" + std::to_string(line.number) + ": expected item_id and values");
    }
    const auto row_dim = static_cast<Eigen::Index>(line.fields.size() - 1);
    if (dim < 0) {
      dim = row_dim;
      out = Matrix::Zero(n, dim);
    } else if (row_dim != dim) {
      throw_data(path + ":" + std::to_string(line.number) + ": dimension mismatch (" +
                 std::to_string(row_dim) + " vs " + std::to_string(dim) + ")");
    }
    const int index = find_id(item_ids, line.fields[0]);
    if (index < 0 && skip_unknown) continue;
    if (index < 0) {
      throw_data(path + ":" + std::to_string(line.number) + ": unknown item_id '" +
                 std::string(line.fields[0]) + "'");
    }
    if (filled[index]) {
      throw_data(path + ":" + std::to_string(line.number) + ": duplicate item_id");
    }
    filled[index] = 1;
    for (Eigen::Index k = 0; k < dim; ++k) {
      out(index, k) = io::parse_double(line.fields[k + 1], path, line.number);
    }
  }
  for (std::size_t k = 0; k < filled.size(); ++k) {
    if (!filled[k]) throw_data(path + ": no features for item '" + item_ids[k] + "'");
  }
  return out;
}

OverlapMap load_overlap(const std::string& path, const DomainDataset& source,
                        const DomainDataset& target) {
  const std::string text = io::read_file(path);
  OverlapMap overlap;
  for (const auto& line : io::split_tsv(text)) {
    if (line.fields.size() != 2) {
      throw_data(path + ":" + std::to_string(line.number) +
                 ": expected source_user_id<TAB>target_user_id");
    }
    const int s = find_id(source.user_ids, line.fields[0]);
    const int t = find_id(target.user_ids, line.fields[1]);
    // Users removed by filtering are no longer overlapped.
    if (s >= 0 && t >= 0) overlap.pairs.emplace_back(s, t);
  }
  overlap.validate(source.num_users, target.num_users);
  const int smaller = std::min(source.num_users, target.num_users);
  overlap.ratio = static_cast<double>(overlap.pairs.size()) / smaller;
  return overlap;
}

SyntheticData generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  if (!(config.overlap_ratio > 0.0 && config.overlap_ratio < 1.0)) {
    throw_invalid("overlap ratio must lie in the open interval (0, 1)");
  }
  if (config.num_users_source < 1 || config.num_users_target < 1 ||
      config.num_items_source < 2 || config.num_items_target < 2 || config.latent_dim < 1 ||
      config.user_groups < 1 || config.item_groups < 1) {
    throw_invalid("synthetic sizes must be positive");
  }
  if (config.interactions_per_user_source < 1 ||
      config.interactions_per_user_source > config.num_items_source ||
      config.interactions_per_user_target < 1 ||
      config.interactions_per_user_target > config.num_items_target) {
    throw_invalid("interactions per user must lie in [1, num_items]");
  }
  Rng rng(seed);
  const int d = config.latent_dim;
  auto gaussian = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * standard_normal(rng);
    return m;
  };

  const Matrix user_protos = gaussian(config.user_groups, d, 1.0);
  auto draw_users = [&](int n) {
    Matrix latent(n, d);
    for (int u = 0; u < n; ++u) {
      const auto g = static_cast<Eigen::Index>(uniform_index(rng, config.user_groups));
      for (int k = 0; k < d; ++k) {
        latent(u, k) = user_protos(g, k) + config.user_spread * standard_normal(rng);
      }
    }
    return latent;
  };
  Matrix source_users = draw_users(config.num_users_source);
  Matrix target_users = draw_users(config.num_users_target);

  const int smaller = std::min(config.num_users_source, config.num_users_target);
  const int num_overlap = static_cast<int>(std::lround(config.overlap_ratio * smaller));
  std::vector<int> source_perm(config.num_users_source);
  std::vector<int> target_perm(config.num_users_target);
  for (int k = 0; k < config.num_users_source; ++k) source_perm[k] = k;
  for (int k = 0; k < config.num_users_target; ++k) target_perm[k] = k;
  shuffle(source_perm, rng);
  shuffle(target_perm, rng);
  std::vector<std::pair<int, int>> raw_pairs;
  for (int k = 0; k < num_overlap; ++k) {
    const int s = source_perm[k];
    const int t = target_perm[k];
    target_users.row(t) = source_users.row(s);  // one person, one taste
    raw_pairs.emplace_back(s, t);
  }

  struct DomainDraw {
    DomainDataset ds;
    std::vector<int> original_user;  // new index -> generated index
  };

  auto make_domain = [&](DomainId domain, const Matrix& users, int num_items, int per_user,
                         const char* user_prefix, const char* item_prefix) {
    const Matrix item_protos = gaussian(config.item_groups, d, 1.0);
    Matrix items(num_items, d);
    for (int i = 0; i < num_items; ++i) {
      const auto g = static_cast<Eigen::Index>(uniform_index(rng, config.item_groups));
      for (int k = 0; k < d; ++k) {
        items(i, k) = item_protos(g, k) + config.item_spread * standard_normal(rng);
      }
    }
    // Gumbel-top-k: sampling without replacement with probability
    // proportional to exp(sharpness * <p_u, q_i> / sqrt(d)).
    std::vector<RawPair> raw;
    const double scale = config.sharpness / std::sqrt(static_cast<double>(d));
    std::vector<std::pair<double, int>> keys(num_items);
    for (Eigen::Index u = 0; u < users.rows(); ++u) {
      for (int i = 0; i < num_items; ++i) {
        double uval = uniform01(rng);
        while (uval <= 0.0) uval = uniform01(rng);
        const double gumbel = -std::log(-std::log(uval));
        keys[i] = {scale * users.row(u).dot(items.row(i)) + gumbel, i};
      }
      std::partial_sort(keys.begin(), keys.begin() + per_user, keys.end(),
                        [](const auto& a, const auto& b) {
                          return a.first > b.first || (a.first == b.first && a.second < b.second);
                        });
      for (int k = 0; k < per_user; ++k) {
        raw.emplace_back(padded_id(user_prefix, static_cast<int>(u)),
                         padded_id(item_prefix, keys[k].second));
      }
    }
    DomainDraw draw;
    draw.ds = index_interactions(std::move(raw), 1, domain);
    for (const auto& id : draw.ds.user_ids) {
      draw.original_user.push_back(std::stoi(id.substr(std::string(user_prefix).size())));
    }
    // Projected latent factors plus noise, one matrix per modality.
    for (const auto& [modality, dim] : config.modality_dims) {
      const Matrix projection = gaussian(dim, d, 1.0 / std::sqrt(static_cast<double>(d)));
      Matrix feats(draw.ds.num_items, dim);
      for (int r = 0; r < draw.ds.num_items; ++r) {
        const int original = std::stoi(draw.ds.item_ids[r].substr(std::string(item_prefix).size()));
        feats.row(r) = (projection * items.row(original).transpose()).transpose();
        for (int k = 0; k < dim; ++k) feats(r, k) += config.noise * standard_normal(rng);
      }
      draw.ds.features[modality] = std::move(feats);
    }
    return draw;
  };

  DomainDraw source = make_domain(DomainId::kSource, source_users, config.num_items_source,
                                  config.interactions_per_user_source, "su", "si");
  DomainDraw target = make_domain(DomainId::kTarget, target_users, config.num_items_target,
                                  config.interactions_per_user_target, "tu", "ti");

  // Every generated user has interactions, so user indices are unchanged;
  // the lookup keeps this honest if that ever stops being true.
  auto new_index = [](const std::vector<int>& original, int generated) {
    auto it = std::find(original.begin(), original.end(), generated);
    return it == original.end() ? -1 : static_cast<int>(it - original.begin());
  };
  SyntheticData out;
  for (const auto& [s, t] : raw_pairs) {
    const int ns = new_index(source.original_user, s);
    const int nt = new_index(target.original_user, t);
    if (ns >= 0 && nt >= 0) out.overlap.pairs.emplace_back(ns, nt);
  }
  std::sort(out.overlap.pairs.begin(), out.overlap.pairs.end());
  out.overlap.ratio = config.overlap_ratio;
  out.source = std::move(source.ds);
  out.target = std::move(target.ds);
  return out;
}

Split split_dataset(const DomainDataset& dataset, std::uint64_t seed) {
  const auto total = static_cast<long long>(dataset.interactions.size());
  if (total < 3) throw_invalid("split needs at least 3 interactions");
  Rng rng(seed);
  std::vector<std::vector<Interaction>> per_user(dataset.num_users);
  for (const auto& x : dataset.interactions) per_user[x.user].push_back(x);
  for (auto& list : per_user) shuffle(list, rng);

  long long test_left = std::llround(0.1 * static_cast<double>(total));
  long long val_left = test_left;
  // Held-out interactions are popped from the back of each shuffled list;
  // the front entry always stays in train.
  std::vector<std::vector<Interaction>> test(dataset.num_users), val(dataset.num_users);
  auto take = [&](int u, std::vector<std::vector<Interaction>>& into) {
    into[u].push_back(per_user[u].back());
    per_user[u].pop_back();
  };
  auto spare = [&](int u) {
    return per_user[u].empty() ? 0 : static_cast<long long>(per_user[u].size()) - 1;
  };
  for (int u = 0; u < dataset.num_users; ++u) {
    const long long base = static_cast<long long>(per_user[u].size()) / 10;
    for (long long k = 0; k < base && test_left > 0 && spare(u) > 0; ++k, --test_left) take(u, test);
    for (long long k = 0; k < base && val_left > 0 && spare(u) > 0; ++k, --val_left) take(u, val);
  }
  std::vector<int> order(dataset.num_users);
  for (int u = 0; u < dataset.num_users; ++u) order[u] = u;
  shuffle(order, rng);
  auto distribute = [&](long long& left, std::vector<std::vector<Interaction>>& into) {
    bool progress = true;
    while (left > 0 && progress) {
      progress = false;
      for (int u : order) {
        if (left == 0) break;
        if (spare(u) > 0) {
          take(u, into);
          --left;
          progress = true;
        }
      }
    }
  };
  distribute(test_left, test);
  distribute(val_left, val);

  Split split;
  for (int u = 0; u < dataset.num_users; ++u) {
    split.train.insert(split.train.end(), per_user[u].begin(), per_user[u].end());
    split.validation.insert(split.validation.end(), val[u].begin(), val[u].end());
    split.test.insert(split.test.end(), test[u].begin(), test[u].end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

BipartiteGraph build_bipartite(const DomainDataset& dataset, const Split& split) {
  BipartiteGraph graph;
  graph.num_users = dataset.num_users;
  graph.num_items = dataset.num_items;
  const int n = dataset.num_users + dataset.num_items;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(split.train.size() * 2);
  for (const auto& x : split.train) {
    triplets.emplace_back(x.user, dataset.num_users + x.item, 1.0);
    triplets.emplace_back(dataset.num_users + x.item, x.user, 1.0);
  }
  graph.adjacency.resize(n, n);
  graph.adjacency.setFromTriplets(triplets.begin(), triplets.end(),
                                  [](double a, double) { return a; });
  return graph;
}

std::vector<std::vector<int>> items_by_user(int num_users, const std::vector<Interaction>& part) {
  std::vector<std::vector<int>> out(num_users);
  for (const auto& x : part) out[x.user].push_back(x.item);
  for (auto& items : out) std::sort(items.begin(), items.end());
  return out;
}

void write_ratings(const std::string& path, const DomainDataset& dataset) {
  std::string out;
  for (const auto& x : dataset.interactions) {
    out += dataset.user_ids[x.user] + '\t' + dataset.item_ids[x.item] + "\t5\n";
  }
  io::write_file_atomic(path, out);
}

void write_features(const std::string& path, const DomainDataset& dataset,
                    const std::string& modality) {
  auto it = dataset.features.find(modality);
  if (it == dataset.features.end()) throw_invalid("no modality '" + modality + "'");
  const Matrix& m = it->second;
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += dataset.item_ids[i];
    for (Eigen::Index k = 0; k < m.cols(); ++k) out += '\t' + io::format_double(m(i, k));
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

void write_overlap(const std::string& path, const OverlapMap& overlap,
                   const DomainDataset& source, const DomainDataset& target) {
  std::string out;
  for (const auto& [s, t] : overlap.pairs) {
    out += source.user_ids[s] + '\t' + target.user_ids[t] + '\n';
  }
  io::write_file_atomic(path, out);
}

}  // namespace crossrec
