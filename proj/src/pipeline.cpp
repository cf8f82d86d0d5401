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

#include "crossrec/pipeline.hpp"

#include <bit>
#include <cmath>
#include <initializer_list>
#include <set>

#include "json.hpp"

#include "crossrec/guided_matching.hpp"
#include "crossrec/tsv_io.hpp"

namespace crossrec {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::kUsage, "config: " + message);
}

const json* section(const json& root, const char* name) {
  auto it = root.find(name);
  if (it == root.end()) return nullptr;
  if (!it->is_object()) config_error(std::string("section '") + name + "' must be an object");
  return &*it;
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) known = known || it.key() == key;
    if (!known) config_error("unknown key '" + where + (where.empty() ? "" : ".") + it.key() + "'");
  }
}

void read_int(const json* obj, const char* key, int* dst) {
  if (obj == nullptr || !obj->contains(key)) return;
  const json& v = obj->at(key);
  if (!v.is_number_integer()) config_error(std::string("'") + key + "' must be an integer");
  *dst = v.get<int>();
}

void read_double(const json* obj, const char* key, double* dst) {
  if (obj == nullptr || !obj->contains(key)) return;
  const json& v = obj->at(key);
  if (!v.is_number()) config_error(std::string("'") + key + "' must be a number");
  *dst = v.get<double>();
}

void read_bool(const json* obj, const char* key, bool* dst) {
  if (obj == nullptr || !obj->contains(key)) return;
  const json& v = obj->at(key);
  if (!v.is_boolean()) config_error(std::string("'") + key + "' must be true or false");
  *dst = v.get<bool>();
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) config_error("top level must be an object");
  reject_unknown(root, "", {"data", "graph", "cluster", "matching", "model", "train", "eval"});

  PipelineConfig c;
  if (const json* d = section(root, "data")) {
    reject_unknown(*d, "data",
                   {"users_source", "users_target", "items_source", "items_target",
                    "latent_dim", "overlap_ratio", "user_groups", "item_groups", "user_spread",
                    "item_spread", "modalities", "noise", "interactions_per_user_source",
                    "interactions_per_user_target", "sharpness", "rating_threshold",
                    "min_interactions"});
    SyntheticConfig& s = c.synthetic;
    read_int(d, "users_source", &s.num_users_source);
    read_int(d, "users_target", &s.num_users_target);
    read_int(d, "items_source", &s.num_items_source);
    read_int(d, "items_target", &s.num_items_target);
    read_int(d, "latent_dim", &s.latent_dim);
    read_double(d, "overlap_ratio", &s.overlap_ratio);
    read_int(d, "user_groups", &s.user_groups);
    read_int(d, "item_groups", &s.item_groups);
    read_double(d, "user_spread", &s.user_spread);
    read_double(d, "item_spread", &s.item_spread);
    read_double(d, "noise", &s.noise);
    read_int(d, "interactions_per_user_source", &s.interactions_per_user_source);
    read_int(d, "interactions_per_user_target", &s.interactions_per_user_target);
    read_double(d, "sharpness", &s.sharpness);
    read_double(d, "rating_threshold", &c.ratings.threshold);
    read_int(d, "min_interactions", &c.ratings.min_interactions);
    if (d->contains("modalities")) {
      const json& m = d->at("modalities");
      if (!m.is_object() || m.empty()) config_error("'modalities' must be a non-empty object");
      s.modality_dims.clear();
      for (auto it = m.begin(); it != m.end(); ++it) {
        if (!it->is_number_integer()) config_error("modality dimensions must be integers");
        s.modality_dims[it.key()] = it->get<int>();
      }
    }
  }
  if (const json* g = section(root, "graph")) {
    reject_unknown(*g, "graph", {"z", "mu", "max_iters", "tol"});
    read_int(g, "z", &c.z);
    read_double(g, "mu", &c.fusion.mu);
    read_int(g, "max_iters", &c.fusion.max_iters);
    read_double(g, "tol", &c.fusion.tol);
  }
  if (const json* k = section(root, "cluster")) {
    reject_unknown(*k, "cluster",
                   {"K", "eta", "outer_iters", "inner_iters", "tol", "symmetry_breaking",
                    "spectral_start"});
    read_int(k, "K", &c.cluster.num_clusters);
    read_double(k, "eta", &c.cluster.eta);
    read_int(k, "outer_iters", &c.cluster.outer_iters);
    read_int(k, "inner_iters", &c.cluster.inner_iters);
    read_double(k, "tol", &c.cluster.tol);
    read_double(k, "symmetry_breaking", &c.cluster.symmetry_breaking);
    read_bool(k, "spectral_start", &c.cluster.spectral_start);
  }
  if (const json* m = section(root, "matching")) {
    reject_unknown(*m, "matching", {"epsilon", "max_iters", "tol"});
    read_double(m, "epsilon", &c.train.epsilon);
    read_int(m, "max_iters", &c.train.wafi_max_iters);
    read_double(m, "tol", &c.train.wafi_tol);
  }
  if (const json* m = section(root, "model")) {
    reject_unknown(*m, "model", {"D", "layers", "train_hyper_weights"});
    read_int(m, "D", &c.train.dim);
    read_int(m, "layers", &c.train.layers);
    read_bool(m, "train_hyper_weights", &c.train.train_hyper_weights);
  }
  if (const json* t = section(root, "train")) {
    reject_unknown(*t, "train",
                   {"lambda", "lr", "beta1", "beta2", "epochs", "batch", "neg_samples",
                    "ablation", "seeds", "average_guidance", "select_best_epoch"});
    read_double(t, "lambda", &c.train.lambda);
    read_double(t, "lr", &c.train.learning_rate);
    read_double(t, "beta1", &c.train.beta1);
    read_double(t, "beta2", &c.train.beta2);
    read_int(t, "epochs", &c.train.epochs);
    read_int(t, "batch", &c.train.batch_size);
    read_int(t, "neg_samples", &c.train.neg_samples);
    read_bool(t, "average_guidance", &c.train.average_guidance);
    read_bool(t, "select_best_epoch", &c.train.select_best_epoch);
    if (t->contains("ablation")) {
      if (!t->at("ablation").is_string()) config_error("'ablation' must be a string");
      try {
        c.train.ablation = parse_ablation(t->at("ablation").get<std::string>());
      } catch (const Error& e) {
        config_error(e.what());
      }
    }
    if (t->contains("seeds")) {
      const json& s = t->at("seeds");
      if (!s.is_array() || s.empty()) config_error("'seeds' must be a non-empty array");
      c.seeds.clear();
      for (const json& v : s) {
        if (!v.is_number_unsigned()) config_error("seeds must be non-negative integers");
        c.seeds.push_back(v.get<std::uint64_t>());
      }
    }
  }
  if (const json* e = section(root, "eval")) {
    reject_unknown(*e, "eval", {"k"});
    read_int(e, "k", &c.train.eval_k);
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  return from_json(io::read_file(path));
}

std::string PipelineConfig::to_json() const {
  json root;
  const SyntheticConfig& s = synthetic;
  json modalities = json::object();
  for (const auto& [name, dim] : s.modality_dims) modalities[name] = dim;
  root["data"] = {{"users_source", s.num_users_source},
                  {"users_target", s.num_users_target},
                  {"items_source", s.num_items_source},
                  {"items_target", s.num_items_target},
                  {"latent_dim", s.latent_dim},
                  {"overlap_ratio", s.overlap_ratio},
                  {"user_groups", s.user_groups},
                  {"item_groups", s.item_groups},
                  {"user_spread", s.user_spread},
                  {"item_spread", s.item_spread},
                  {"modalities", modalities},
                  {"noise", s.noise},
                  {"interactions_per_user_source", s.interactions_per_user_source},
                  {"interactions_per_user_target", s.interactions_per_user_target},
                  {"sharpness", s.sharpness},
                  {"rating_threshold", ratings.threshold},
                  {"min_interactions", ratings.min_interactions}};
  root["graph"] = {{"z", z}, {"mu", fusion.mu}, {"max_iters", fusion.max_iters},
                   {"tol", fusion.tol}};
  root["cluster"] = {{"K", cluster.num_clusters},
                     {"eta", cluster.eta},
                     {"outer_iters", cluster.outer_iters},
                     {"inner_iters", cluster.inner_iters},
                     {"tol", cluster.tol},
                     {"symmetry_breaking", cluster.symmetry_breaking},
                     {"spectral_start", cluster.spectral_start}};
  root["matching"] = {{"epsilon", train.epsilon},
                      {"max_iters", train.wafi_max_iters},
                      {"tol", train.wafi_tol}};
  root["model"] = {{"D", train.dim},
                   {"layers", train.layers},
                   {"train_hyper_weights", train.train_hyper_weights}};
  root["train"] = {{"lambda", train.lambda},
                   {"lr", train.learning_rate},
                   {"beta1", train.beta1},
                   {"beta2", train.beta2},
                   {"epochs", train.epochs},
                   {"batch", train.batch_size},
                   {"neg_samples", train.neg_samples},
                   {"ablation", ablation_name(train.ablation)},
                   {"seeds", seeds},
                   {"average_guidance", train.average_guidance},
                   {"select_best_epoch", train.select_best_epoch}};
  root["eval"] = {{"k", train.eval_k}};
  return root.dump(2) + "\n";
}

void PipelineConfig::validate() const {
  try {
    train.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  if (z < 1) config_error("graph.z must be >= 1");
  if (!(fusion.mu >= 0.0)) config_error("graph.mu must be >= 0");
  if (fusion.max_iters < 1) config_error("graph.max_iters must be >= 1");
  if (cluster.num_clusters < 2) config_error("cluster.K must be >= 2");
  if (!(cluster.eta > 0.0)) config_error("cluster.eta must be positive");
  if (cluster.outer_iters < 1 || cluster.inner_iters < 1) {
    config_error("cluster iteration budgets must be >= 1");
  }
  if (train.wafi_max_iters < 1) config_error("matching.max_iters must be >= 1");
  if (ratings.min_interactions < 1) config_error("data.min_interactions must be >= 1");
  if (synthetic.modality_dims.empty()) config_error("data.modalities must not be empty");
  for (const auto& [name, dim] : synthetic.modality_dims) {
    if (dim < 1) config_error("modality '" + name + "' needs a positive dimension");
    if (name.empty() || name.find_first_of("/\\\t\n") != std::string::npos) {
      config_error("modality name '" + name + "' is not a valid file name part");
    }
  }
}

std::string ratings_file(DomainId domain) { return std::string(domain_name(domain)) + "_ratings.tsv"; }
std::string features_file(DomainId domain, const std::string& modality) {
  return std::string(domain_name(domain)) + "_" + modality + ".tsv";
}
std::string overlap_file() { return "overlap.tsv"; }
std::string graph_file(DomainId domain) { return std::string(domain_name(domain)) + "_graph.tsv"; }
std::string gamma_file(DomainId domain) { return std::string(domain_name(domain)) + "_gamma.tsv"; }

LoadedData load_data_dir(const PipelineConfig& config, const std::string& dir) {
  LoadedData data;
  data.source = load_ratings(io::join_path(dir, ratings_file(DomainId::kSource)), config.ratings,
                             DomainId::kSource);
  data.target = load_ratings(io::join_path(dir, ratings_file(DomainId::kTarget)), config.ratings,
                             DomainId::kTarget);
  for (DomainDataset* ds : {&data.source, &data.target}) {
    for (const auto& [modality, dim] : config.synthetic.modality_dims) {
      ds->features[modality] = load_features(
          io::join_path(dir, features_file(ds->domain, modality)), ds->item_ids, true);
    }
    ds->validate();
  }
  data.overlap = load_overlap(io::join_path(dir, overlap_file()), data.source, data.target);
  return data;
}

FusionResult fuse_domain(const PipelineConfig& config, const DomainDataset& dataset) {
  std::vector<Matrix> features;
  for (const auto& [modality, m] : dataset.features) features.push_back(m);
  if (features.empty()) throw_data(std::string(domain_name(dataset.domain)) + " has no features");
  return build_item_graph(features, config.z, config.fusion);
}

ClusterAssignment cluster_domain(const PipelineConfig& config, const Matrix& fused,
                                 std::uint64_t seed) {
  ClusterOptions options = config.cluster;
  options.seed = seed;
  return sishe_cluster(fused.cwiseMax(fused.transpose()), options);
}

namespace {

constexpr std::uint64_t kSplitStream = 100;
constexpr std::uint64_t kClusterStream = 200;

std::uint64_t domain_stream(std::uint64_t base, DomainId domain) {
  return base + (domain == DomainId::kSource ? 1 : 2);
}

}  // namespace

TrainingData prepare_training_data(const PipelineConfig& config, const LoadedData& data,
                                   std::uint64_t seed, const std::string& graph_dir) {
  auto prepare = [&](const DomainDataset& ds) {
    const Split split = split_dataset(ds, derive_seed(seed, domain_stream(kSplitStream, ds.domain)));
    Matrix fused;
    Matrix gamma;
    const std::string gpath = io::join_path(graph_dir, graph_file(ds.domain));
    const std::string cpath = io::join_path(graph_dir, gamma_file(ds.domain));
    if (!graph_dir.empty() && io::file_exists(gpath)) {
      fused = io::read_graph(gpath);
    } else {
      fused = fuse_domain(config, ds).fused;
    }
    if (!graph_dir.empty() && io::file_exists(cpath)) {
      gamma = io::read_gamma(cpath);
    } else {
      gamma = cluster_domain(config, fused, derive_seed(seed, domain_stream(kClusterStream, ds.domain)))
                  .gamma;
    }
    if (fused.rows() != ds.num_items || gamma.rows() != ds.num_items) {
      throw_data(std::string(domain_name(ds.domain)) +
                 ": graph files do not match the number of items in the ratings");
    }
    return make_train_data(ds, split, fused, gamma);
  };
  TrainingData out;
  out.source = prepare(data.source);
  out.target = prepare(data.target);
  out.overlap = data.overlap;
  return out;
}

namespace {

constexpr int kFormatVersion = 1;

struct NamedTensor {
  std::string name;
  const Matrix* matrix = nullptr;
  const Vector* vector = nullptr;
};

std::vector<NamedTensor> named_tensors(const std::string& prefix, const DomainModel& m) {
  std::vector<NamedTensor> out = {{prefix + "/user_table", &m.user_table, nullptr},
                                  {prefix + "/item_table", &m.item_table, nullptr},
                                  {prefix + "/attn_u", nullptr, &m.attn_u},
                                  {prefix + "/attn_v", nullptr, &m.attn_v},
                                  {prefix + "/attn_vtilde", nullptr, &m.attn_vtilde},
                                  {prefix + "/attn_vhat", nullptr, &m.attn_vhat}};
  for (std::size_t l = 0; l < m.hyper_weights.size(); ++l) {
    out.push_back({prefix + "/hyper_weight_" + std::to_string(l), &m.hyper_weights[l], nullptr});
  }
  return out;
}

void append_float(std::string* out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int b = 0; b < 4; ++b) out->push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double read_float(const std::string& blob, std::size_t index) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[index * 4 + b])) << (8 * b);
  }
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

void save_checkpoint(const std::string& dir, const Checkpoint& checkpoint) {
  io::ensure_directory(dir);
  std::string blob;
  json table = json::array();
  for (const auto* part : {&checkpoint.source, &checkpoint.target}) {
    const std::string prefix = part == &checkpoint.source ? "source" : "target";
    for (const NamedTensor& t : named_tensors(prefix, *part)) {
      const Eigen::Index rows = t.matrix ? t.matrix->rows() : t.vector->size();
      const Eigen::Index cols = t.matrix ? t.matrix->cols() : 1;
      const double* data = t.matrix ? t.matrix->data() : t.vector->data();
      table.push_back({{"name", t.name},
                       {"shape", {rows, cols}},
                       {"offset", blob.size()},
                       {"count", rows * cols}});
      for (Eigen::Index i = 0; i < rows * cols; ++i) append_float(&blob, data[i]);
    }
  }
  json manifest;
  manifest["format_version"] = checkpoint.format_version;
  manifest["epoch"] = checkpoint.epoch;
  manifest["seed"] = checkpoint.seed;
  try {
    manifest["config"] = json::parse(checkpoint.config_json);
  } catch (const json::parse_error&) {
    throw_invalid("checkpoint config is not valid JSON");
  }
  manifest["dtype"] = "float32-le";
  manifest["tensors"] = table;
  io::write_file_atomic(io::join_path(dir, "tensors.bin"), blob);
  io::write_file_atomic(io::join_path(dir, "manifest.json"), manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& dir) {
  const std::string manifest_path = io::join_path(dir, "manifest.json");
  json manifest;
  try {
    manifest = json::parse(io::read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw_data(manifest_path + ": " + e.what());
  }
  const std::string blob = io::read_file(io::join_path(dir, "tensors.bin"));
  Checkpoint cp;
  try {
    cp.format_version = manifest.at("format_version").get<int>();
    if (cp.format_version != kFormatVersion) {
      throw_data(manifest_path + ": unsupported format_version " +
                 std::to_string(cp.format_version));
    }
    cp.epoch = manifest.at("epoch").get<int>();
    cp.seed = manifest.at("seed").get<std::uint64_t>();
    cp.config_json = manifest.at("config").dump();
    std::map<std::string, Matrix> tensors;
    for (const json& t : manifest.at("tensors")) {
      const auto rows = t.at("shape").at(0).get<Eigen::Index>();
      const auto cols = t.at("shape").at(1).get<Eigen::Index>();
      const auto offset = t.at("offset").get<std::size_t>();
      const auto count = t.at("count").get<std::size_t>();
      if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != count ||
          offset % 4 != 0 || offset + 4 * count > blob.size()) {
        throw_data(manifest_path + ": tensor '" + t.at("name").get<std::string>() +
                   "' does not fit tensors.bin");
      }
      Matrix m(rows, cols);
      for (std::size_t i = 0; i < count; ++i) m.data()[i] = read_float(blob, offset / 4 + i);
      tensors[t.at("name").get<std::string>()] = std::move(m);
    }
    auto take = [&](const std::string& name) {
      auto it = tensors.find(name);
      if (it == tensors.end()) throw_data(manifest_path + ": missing tensor '" + name + "'");
      Matrix m = std::move(it->second);
      tensors.erase(it);
      return m;
    };
    for (DomainModel* m : {&cp.source, &cp.target}) {
      const std::string p = m == &cp.source ? "source" : "target";
      m->user_table = take(p + "/user_table");
      m->item_table = take(p + "/item_table");
      m->attn_u = take(p + "/attn_u");
      m->attn_v = take(p + "/attn_v");
      m->attn_vtilde = take(p + "/attn_vtilde");
      m->attn_vhat = take(p + "/attn_vhat");
      for (int l = 0; tensors.count(p + "/hyper_weight_" + std::to_string(l)); ++l) {
        m->hyper_weights.push_back(take(p + "/hyper_weight_" + std::to_string(l)));
      }
      m->validate();
    }
    if (!tensors.empty()) throw_data(manifest_path + ": unexpected tensor '" + tensors.begin()->first + "'");
  } catch (const json::exception& e) {
    throw_data(manifest_path + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) throw_data(manifest_path + ": " + e.what());
    throw;
  }
  return cp;
}

void cmd_gen(const PipelineConfig& config, std::uint64_t seed, const std::string& out_dir) {
  const SyntheticData data = generate_synthetic(config.synthetic, seed);
  io::ensure_directory(out_dir);
  for (const DomainDataset* ds : {&data.source, &data.target}) {
    write_ratings(io::join_path(out_dir, ratings_file(ds->domain)), *ds);
    for (const auto& [modality, m] : ds->features) {
      write_features(io::join_path(out_dir, features_file(ds->domain, modality)), *ds, modality);
    }
  }
  write_overlap(io::join_path(out_dir, overlap_file()), data.overlap, data.source, data.target);
}

void cmd_fuse(const PipelineConfig& config, const std::string& data_dir,
              const std::string& out_dir) {
  const LoadedData data = load_data_dir(config, data_dir);
  io::ensure_directory(out_dir);
  for (const DomainDataset* ds : {&data.source, &data.target}) {
    io::write_graph(io::join_path(out_dir, graph_file(ds->domain)), fuse_domain(config, *ds).fused);
  }
}

void cmd_cluster(const PipelineConfig& config, std::uint64_t seed, const std::string& graph_dir,
                 const std::string& out_dir) {
  io::ensure_directory(out_dir);
  for (DomainId domain : {DomainId::kSource, DomainId::kTarget}) {
    const Matrix fused = io::read_graph(io::join_path(graph_dir, graph_file(domain)));
    const ClusterAssignment c =
        cluster_domain(config, fused, derive_seed(seed, domain_stream(kClusterStream, domain)));
    io::write_gamma(io::join_path(out_dir, gamma_file(domain)), c.gamma);
  }
}

namespace {

Matrix read_dense(const std::string& path) {
  const std::string text = io::read_file(path);
  const auto lines = io::split_tsv(text);
  std::vector<std::vector<double>> rows;
  for (const auto& line : lines) {
    if (!line.fields.empty() && !line.fields[0].empty() && line.fields[0][0] == '#') continue;
    std::vector<double> row;
    for (auto f : line.fields) row.push_back(io::parse_double(f, path, line.number));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw_data(path + ":" + std::to_string(line.number) + ": row length differs");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw_data(path + ": no rows");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

}  // namespace

void cmd_match(const PipelineConfig& config, const std::string& source_embeddings,
               const std::string& target_embeddings, const std::string& overlap_path,
               const std::string& out_path) {
  const Matrix source = read_dense(source_embeddings);
  const Matrix target = read_dense(target_embeddings);
  if (source.rows() != target.rows() || source.cols() != target.cols()) {
    throw_data("embedding files differ in shape");
  }
  std::vector<std::pair<int, int>> pairs;
  if (!overlap_path.empty()) {
    const std::string text = io::read_file(overlap_path);
    for (const auto& line : io::split_tsv(text)) {
      if (line.fields.size() != 2) {
        throw_data(overlap_path + ":" + std::to_string(line.number) + ": expected 2 fields");
      }
      const long long i = io::parse_int(line.fields[0], overlap_path, line.number);
      const long long j = io::parse_int(line.fields[1], overlap_path, line.number);
      if (i < 0 || j < 0 || i >= source.rows() || j >= target.rows()) {
        throw_data(overlap_path + ":" + std::to_string(line.number) + ": row out of range");
      }
      pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  WafiOptions options;
  options.epsilon = config.train.epsilon;
  options.max_iters = config.train.wafi_max_iters;
  options.tol = config.train.wafi_tol;
  const MatchingResult result = match_users(source, target, pairs, options);
  io::write_plan(out_path, result.plan, options.epsilon);
}

void cmd_train(const PipelineConfig& config, std::uint64_t seed, const std::string& data_dir,
               const std::string& graph_dir, const std::string& out_dir) {
  const LoadedData loaded = load_data_dir(config, data_dir);
  const TrainingData data = prepare_training_data(config, loaded, seed, graph_dir);
  TrainConfig tc = config.train;
  tc.seed = seed;
  const TrainResult result = train(data, tc);
  io::ensure_directory(out_dir);
  Checkpoint cp;
  cp.epoch = result.best_epoch;
  cp.seed = seed;
  cp.config_json = config.to_json();
  cp.source = result.source;
  cp.target = result.target;
  save_checkpoint(io::join_path(out_dir, "checkpoint"), cp);
  io::write_file_atomic(io::join_path(out_dir, "trace.csv"),
                        format_trace_csv(result.trace, tc.eval_k));
}

void cmd_eval(const PipelineConfig& config, const std::string& checkpoint_dir,
              const std::string& data_dir, const std::string& graph_dir, int threads,
              const std::string& out_dir) {
  const Checkpoint cp = load_checkpoint(checkpoint_dir);
  const PipelineConfig trained = PipelineConfig::from_json(cp.config_json);
  const LoadedData loaded = load_data_dir(trained, data_dir);
  const TrainingData data = prepare_training_data(trained, loaded, cp.seed, graph_dir);
  const int k = config.train.eval_k;
  std::string metrics = "domain,hr" + std::to_string(k) + ",ndcg" + std::to_string(k) + "\n";
  std::string details = "domain,user_id,item_id,rank\n";
  for (DomainId domain : {DomainId::kSource, DomainId::kTarget}) {
    const bool src = domain == DomainId::kSource;
    const DomainTrainData& d = src ? data.source : data.target;
    const DomainModel& model = src ? cp.source : cp.target;
    const DomainDataset& ds = src ? loaded.source : loaded.target;
    if (model.user_table.rows() != d.graphs.num_users ||
        model.item_table.rows() != d.graphs.num_items) {
      throw_data(std::string("checkpoint does not match the ") + domain_name(domain) + " data");
    }
    const PropagationOutput out = propagate(d.graphs, model);
    const MetricReport r =
        evaluate_ranking(out.user_emb, out.item_emb, d.train_items, d.test_items, k, threads);
    metrics += std::string(domain_name(domain)) + "," + io::format_double(r.hr) + "," +
               io::format_double(r.ndcg) + "\n";
    for (const RankedPositive& p : r.details) {
      details += std::string(domain_name(domain)) + "," + ds.user_ids[p.user] + "," +
                 ds.item_ids[p.item] + "," + std::to_string(p.rank) + "\n";
    }
  }
  io::ensure_directory(out_dir);
  io::write_file_atomic(io::join_path(out_dir, "metrics.csv"), metrics);
  io::write_file_atomic(io::join_path(out_dir, "ranks.csv"), details);
}

void cmd_ablate(const PipelineConfig& config, std::uint64_t seed, const std::string& data_dir,
                const std::string& graph_dir, const std::string& sweep, int threads,
                const std::string& out_dir) {
  std::vector<Variant> variants;
  if (sweep.empty()) {
    variants = standard_variants(config.train);
  } else if (sweep == "lambda") {
    variants = lambda_sweep(config.train, {0.2, 0.4, 0.5, 0.6, 0.8, 1.0});
  } else if (sweep == "epsilon") {
    variants = epsilon_sweep(config.train, {0.001, 0.01, 0.1, 1.0, 10.0, 100.0});
  } else {
    throw Error(ErrorCode::kUsage, "unknown sweep '" + sweep + "' (expected lambda or epsilon)");
  }
  const LoadedData loaded = load_data_dir(config, data_dir);
  const TrainingData data = prepare_training_data(config, loaded, seed, graph_dir);
  const AblationTable table = run_ablation(data, variants, config.seeds, threads);
  io::ensure_directory(out_dir);
  io::write_file_atomic(io::join_path(out_dir, "ablation_rows.csv"),
                        format_ablation_rows(table, config.train.eval_k));
  io::write_file_atomic(io::join_path(out_dir, "ablation_summary.csv"),
                        format_ablation_summary(table, config.train.eval_k));
}

}  // namespace crossrec
