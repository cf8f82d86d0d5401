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

// C interface to the crossrec library. Every function returns a status; on
// failure crossrec_last_error() describes the problem for the calling thread.
// Matrices are dense, row-major, double precision.

#ifndef CROSSREC_CROSSREC_H_
#define CROSSREC_CROSSREC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(CROSSREC_BUILDING_LIBRARY)
#define CROSSREC_API __attribute__((visibility("default")))
#else
#define CROSSREC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum crossrec_status {
  CROSSREC_OK = 0,
  CROSSREC_INVALID_ARGUMENT = 1,
  CROSSREC_USAGE = 2,
  CROSSREC_DATA = 3,
  CROSSREC_CONVERGENCE = 4,
  CROSSREC_IO = 5,
  CROSSREC_INTERNAL = 6
} crossrec_status;

CROSSREC_API const char* crossrec_version(void);
CROSSREC_API const char* crossrec_status_name(crossrec_status status);
// Message of the last failed call on this thread, "" if none. Valid until the
// next call into the library from the same thread.
CROSSREC_API const char* crossrec_last_error(void);

// Strings returned through char** out-parameters are released with this.
CROSSREC_API void crossrec_string_free(char* s);

/* Pipeline configuration. */

typedef struct crossrec_config crossrec_config;

CROSSREC_API crossrec_status crossrec_config_default(crossrec_config** out);
CROSSREC_API crossrec_status crossrec_config_parse(const char* json, crossrec_config** out);
CROSSREC_API crossrec_status crossrec_config_load(const char* path, crossrec_config** out);
CROSSREC_API crossrec_status crossrec_config_to_json(const crossrec_config* config, char** out);
CROSSREC_API void crossrec_config_free(crossrec_config* config);

/* Pipeline stages; these read and write the on-disk formats. */

CROSSREC_API crossrec_status crossrec_gen(const crossrec_config* config, uint64_t seed,
                                          const char* out_dir);
CROSSREC_API crossrec_status crossrec_fuse(const crossrec_config* config, const char* data_dir,
                                           const char* out_dir);
CROSSREC_API crossrec_status crossrec_cluster(const crossrec_config* config, uint64_t seed,
                                              const char* graph_dir, const char* out_dir);
// overlap_path may be NULL or "" for an unguided match.
CROSSREC_API crossrec_status crossrec_match(const crossrec_config* config,
                                            const char* source_embeddings,
                                            const char* target_embeddings,
                                            const char* overlap_path, const char* out_path);
// graph_dir may be NULL or ""; missing graphs are then computed in memory.
CROSSREC_API crossrec_status crossrec_train(const crossrec_config* config, uint64_t seed,
                                            const char* data_dir, const char* graph_dir,
                                            const char* out_dir);
CROSSREC_API crossrec_status crossrec_eval(const crossrec_config* config,
                                           const char* checkpoint_dir, const char* data_dir,
                                           const char* graph_dir, int32_t threads,
                                           const char* out_dir);
// sweep: NULL or "" for the standard variants, "lambda" or "epsilon".
CROSSREC_API crossrec_status crossrec_ablate(const crossrec_config* config, uint64_t seed,
                                             const char* data_dir, const char* graph_dir,
                                             const char* sweep, int32_t threads,
                                             const char* out_dir);

/* In-memory kernels. */

typedef struct crossrec_matching crossrec_matching;

// source and target are n x d. pairs holds num_pairs (source row, target row)
// couples whose cost is masked to zero.
CROSSREC_API crossrec_status crossrec_match_users(const double* source, const double* target,
                                                  int64_t n, int64_t d, const int32_t* pairs,
                                                  int64_t num_pairs, double epsilon,
                                                  int32_t max_iters, double tol,
                                                  crossrec_matching** out);
CROSSREC_API int64_t crossrec_matching_size(const crossrec_matching* matching);
CROSSREC_API int32_t crossrec_matching_iterations(const crossrec_matching* matching);
CROSSREC_API int32_t crossrec_matching_converged(const crossrec_matching* matching);
// Copies the n x n plan into out.
CROSSREC_API crossrec_status crossrec_matching_plan(const crossrec_matching* matching,
                                                    double* out);
// Copies the dual potential (length n, last entry 0) into out.
CROSSREC_API crossrec_status crossrec_matching_potential(const crossrec_matching* matching,
                                                         double* out);
CROSSREC_API void crossrec_matching_free(crossrec_matching* matching);

// Fuses num_graphs n x n similarity graphs into fused_out (n x n).
CROSSREC_API crossrec_status crossrec_fuse_graphs(const double* const* graphs,
                                                  int32_t num_graphs, int64_t n, double mu,
                                                  int32_t max_iters, double tol,
                                                  double* fused_out);
// Soft balanced clustering of an n x n similarity into gamma_out (n x k).
CROSSREC_API crossrec_status crossrec_cluster_items(const double* similarity, int64_t n,
                                                    int32_t k, double eta, uint64_t seed,
                                                    double* gamma_out);
// ranks are 1-based positions of held-out items.
CROSSREC_API crossrec_status crossrec_hr_ndcg(const int32_t* ranks, int64_t count, int32_t k,
                                              double* hr, double* ndcg);

#ifdef __cplusplus
}  // extern "C"
#endif

#endif  // CROSSREC_CROSSREC_H_
