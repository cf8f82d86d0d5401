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

#include "crossrec/crossrec.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "crossrec/evaluation.hpp"
#include "crossrec/guided_matching.hpp"
#include "crossrec/hypergraph_cluster.hpp"
#include "crossrec/pipeline.hpp"
#include "crossrec/similarity_graph.hpp"

struct crossrec_config {
  crossrec::PipelineConfig value;
};

struct crossrec_matching {
  crossrec::MatchingResult value;
};

namespace {

thread_local std::string last_error;

crossrec_status fail(crossrec_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs body, translating exceptions into status codes.
template <typename F>
crossrec_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return CROSSREC_OK;
  } catch (const crossrec::Error& e) {
    return fail(static_cast<crossrec_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CROSSREC_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CROSSREC_INTERNAL, e.what());
  }
}

void require(bool condition, const char* message) {
  if (!condition) crossrec::throw_invalid(message);
}

std::string str(const char* s) { return s == nullptr ? std::string() : std::string(s); }

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

crossrec::Matrix copy_in(const double* data, int64_t rows, int64_t cols) {
  return Eigen::Map<const crossrec::Matrix>(data, rows, cols);
}

}  // namespace

extern "C" {

const char* crossrec_version(void) { return "0.1.0"; }

const char* crossrec_status_name(crossrec_status status) {
  return crossrec::error_code_name(static_cast<crossrec::ErrorCode>(status));
}

const char* crossrec_last_error(void) { return last_error.c_str(); }

void crossrec_string_free(char* s) { std::free(s); }

crossrec_status crossrec_config_default(crossrec_config** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be null");
    *out = new crossrec_config{};
  });
}

crossrec_status crossrec_config_parse(const char* json, crossrec_config** out) {
  return guarded([&] {
    require(json != nullptr && out != nullptr, "json and out must not be null");
    *out = new crossrec_config{crossrec::PipelineConfig::from_json(json)};
  });
}

crossrec_status crossrec_config_load(const char* path, crossrec_config** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out must not be null");
    *out = new crossrec_config{crossrec::PipelineConfig::load(path)};
  });
}

crossrec_status crossrec_config_to_json(const crossrec_config* config, char** out) {
  return guarded([&] {
    require(config != nullptr && out != nullptr, "config and out must not be null");
    *out = duplicate(config->value.to_json());
  });
}

void crossrec_config_free(crossrec_config* config) { delete config; }

crossrec_status crossrec_gen(const crossrec_config* config, uint64_t seed, const char* out_dir) {
  return guarded([&] {
    require(config != nullptr && out_dir != nullptr, "config and out_dir must not be null");
    crossrec::cmd_gen(config->value, seed, out_dir);
  });
}

crossrec_status crossrec_fuse(const crossrec_config* config, const char* data_dir,
                              const char* out_dir) {
  return guarded([&] {
    require(config != nullptr && data_dir != nullptr && out_dir != nullptr,
            "config and directories must not be null");
    crossrec::cmd_fuse(config->value, data_dir, out_dir);
  });
}

crossrec_status crossrec_cluster(const crossrec_config* config, uint64_t seed,
                                 const char* graph_dir, const char* out_dir) {
  return guarded([&] {
    require(config != nullptr && graph_dir != nullptr && out_dir != nullptr,
            "config and directories must not be null");
    crossrec::cmd_cluster(config->value, seed, graph_dir, out_dir);
  });
}

crossrec_status crossrec_match(const crossrec_config* config, const char* source_embeddings,
                               const char* target_embeddings, const char* overlap_path,
                               const char* out_path) {
  return guarded([&] {
    require(config != nullptr && source_embeddings != nullptr && target_embeddings != nullptr &&
                out_path != nullptr,
            "config, embedding paths and out_path must not be null");
    crossrec::cmd_match(config->value, source_embeddings, target_embeddings, str(overlap_path),
                        out_path);
  });
}

crossrec_status crossrec_train(const crossrec_config* config, uint64_t seed,
                               const char* data_dir, const char* graph_dir,
                               const char* out_dir) {
  return guarded([&] {
    require(config != nullptr && data_dir != nullptr && out_dir != nullptr,
            "config, data_dir and out_dir must not be null");
    crossrec::cmd_train(config->value, seed, data_dir, str(graph_dir), out_dir);
  });
}

crossrec_status crossrec_eval(const crossrec_config* config, const char* checkpoint_dir,
                              const char* data_dir, const char* graph_dir, int32_t threads,
                              const char* out_dir) {
  return guarded([&] {
    require(config != nullptr && checkpoint_dir != nullptr && data_dir != nullptr &&
                out_dir != nullptr,
            "config and directories must not be null");
    require(threads >= 1, "threads must be >= 1");
    crossrec::cmd_eval(config->value, checkpoint_dir, data_dir, str(graph_dir), threads, out_dir);
  });
}

crossrec_status crossrec_ablate(const crossrec_config* config, uint64_t seed,
                                const char* data_dir, const char* graph_dir, const char* sweep,
                                int32_t threads, const char* out_dir) {
  return guarded([&] {
    require(config != nullptr && data_dir != nullptr && out_dir != nullptr,
            "config, data_dir and out_dir must not be null");
    require(threads >= 1, "threads must be >= 1");
    crossrec::cmd_ablate(config->value, seed, data_dir, str(graph_dir), str(sweep), threads,
                         out_dir);
  });
}

crossrec_status crossrec_match_users(const double* source, const double* target, int64_t n,
                                     int64_t d, const int32_t* pairs, int64_t num_pairs,
                                     double epsilon, int32_t max_iters, double tol,
                                     crossrec_matching** out) {
  return guarded([&] {
    require(source != nullptr && target != nullptr && out != nullptr,
            "source, target and out must not be null");
    require(n >= 1 && d >= 1, "n and d must be positive");
    require(num_pairs >= 0 && (num_pairs == 0 || pairs != nullptr), "invalid pair list");
    std::vector<std::pair<int, int>> overlapped;
    for (int64_t p = 0; p < num_pairs; ++p) overlapped.emplace_back(pairs[2 * p], pairs[2 * p + 1]);
    crossrec::WafiOptions options;
    options.epsilon = epsilon;
    options.max_iters = max_iters;
    options.tol = tol;
    options.throw_on_budget = false;
    *out = new crossrec_matching{crossrec::match_users(copy_in(source, n, d),
                                                       copy_in(target, n, d), overlapped,
                                                       options)};
  });
}

int64_t crossrec_matching_size(const crossrec_matching* matching) {
  return matching == nullptr ? 0 : matching->value.plan.rows();
}

int32_t crossrec_matching_iterations(const crossrec_matching* matching) {
  return matching == nullptr ? 0 : matching->value.potential.iterations;
}

int32_t crossrec_matching_converged(const crossrec_matching* matching) {
  return matching != nullptr && matching->value.potential.converged ? 1 : 0;
}

crossrec_status crossrec_matching_plan(const crossrec_matching* matching, double* out) {
  return guarded([&] {
    require(matching != nullptr && out != nullptr, "matching and out must not be null");
    const crossrec::Matrix& plan = matching->value.plan;
    std::memcpy(out, plan.data(), sizeof(double) * plan.size());
  });
}

crossrec_status crossrec_matching_potential(const crossrec_matching* matching, double* out) {
  return guarded([&] {
    require(matching != nullptr && out != nullptr, "matching and out must not be null");
    const crossrec::Vector& omega = matching->value.potential.omega;
    std::memcpy(out, omega.data(), sizeof(double) * omega.size());
  });
}

void crossrec_matching_free(crossrec_matching* matching) { delete matching; }

crossrec_status crossrec_fuse_graphs(const double* const* graphs, int32_t num_graphs, int64_t n,
                                     double mu, int32_t max_iters, double tol,
                                     double* fused_out) {
  return guarded([&] {
    require(graphs != nullptr && fused_out != nullptr, "graphs and fused_out must not be null");
    require(num_graphs >= 1 && n >= 1, "need at least one non-empty graph");
    std::vector<crossrec::Matrix> inputs;
    for (int32_t m = 0; m < num_graphs; ++m) {
      require(graphs[m] != nullptr, "graph pointer must not be null");
      inputs.push_back(copy_in(graphs[m], n, n));
    }
    crossrec::FusionOptions options;
    options.mu = mu;
    options.max_iters = max_iters;
    options.tol = tol;
    const crossrec::FusionResult r = crossrec::risgf_fuse(inputs, options);
    std::memcpy(fused_out, r.fused.data(), sizeof(double) * r.fused.size());
  });
}

crossrec_status crossrec_cluster_items(const double* similarity, int64_t n, int32_t k,
                                       double eta, uint64_t seed, double* gamma_out) {
  return guarded([&] {
    require(similarity != nullptr && gamma_out != nullptr,
            "similarity and gamma_out must not be null");
    require(n >= 1, "n must be positive");
    crossrec::ClusterOptions options;
    options.num_clusters = k;
    options.eta = eta;
    options.seed = seed;
    const crossrec::ClusterAssignment c = crossrec::sishe_cluster(copy_in(similarity, n, n), options);
    std::memcpy(gamma_out, c.gamma.data(), sizeof(double) * c.gamma.size());
  });
}

crossrec_status crossrec_hr_ndcg(const int32_t* ranks, int64_t count, int32_t k, double* hr,
                                 double* ndcg) {
  return guarded([&] {
    require(hr != nullptr && ndcg != nullptr, "hr and ndcg must not be null");
    require(count >= 0 && (count == 0 || ranks != nullptr), "invalid rank list");
    require(k >= 1, "k must be >= 1");
    const std::vector<int> r(ranks, ranks + count);
    const crossrec::HrNdcg m = crossrec::hr_ndcg(r, k);
    *hr = m.hr;
    *ndcg = m.ndcg;
  });
}

}  // extern "C"
