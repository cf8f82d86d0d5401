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

// crossrec command-line tool. Talks to the library only through crossrec.h.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "crossrec/crossrec.h"
#include "json.hpp"

namespace {

// Process exit codes.
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitConvergence = 4;

int exit_code(crossrec_status status) {
  switch (status) {
    case CROSSREC_OK: return kExitOk;
    case CROSSREC_INVALID_ARGUMENT:
    case CROSSREC_USAGE: return kExitUsage;
    case CROSSREC_DATA:
    case CROSSREC_IO: return kExitData;
    case CROSSREC_CONVERGENCE: return kExitConvergence;
    case CROSSREC_INTERNAL: return kExitInternal;
  }
  return kExitInternal;
}

int report(const std::string& kind, const std::string& message, int code) {
  const nlohmann::json line = {{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << line.dump() << std::endl;
  return code;
}

int report_status(crossrec_status status) {
  return report(crossrec_status_name(status), crossrec_last_error(), exit_code(status));
}

const char* or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-modal cross-domain recommendation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(crossrec_version()));

  std::string config_path;
  std::uint64_t seed = 1;
  std::string out;
  int threads = 1;
  app.add_option("--config", config_path, "JSON configuration file (defaults if omitted)");
  app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--out", out, "Output directory (file for match)");
  app.add_option("--threads", threads, "Worker threads for eval and ablate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string data_dir, graph_dir, checkpoint_dir, source_path, target_path, overlap_path, sweep;

  CLI::App* gen = app.add_subcommand("gen", "Write a synthetic two-domain dataset");
  CLI::App* fuse = app.add_subcommand("fuse", "Build the fused item graph of each domain");
  fuse->add_option("--data", data_dir, "Dataset directory")->required();
  CLI::App* cluster = app.add_subcommand("cluster", "Cluster item graphs into hyperedges");
  cluster->add_option("--graphs", graph_dir, "Directory with <domain>_graph.tsv")->required();
  CLI::App* match = app.add_subcommand("match", "Match users of two embedding files");
  match->add_option("--source", source_path, "Source embeddings TSV")->required();
  match->add_option("--target", target_path, "Target embeddings TSV")->required();
  match->add_option("--overlap", overlap_path, "Known pairs as row indices, TSV");
  CLI::App* train = app.add_subcommand("train", "Train both domains and write a checkpoint");
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--graphs", graph_dir, "Graph and gamma directory (computed if absent)");
  CLI::App* eval = app.add_subcommand("eval", "Score a checkpoint on the test split");
  eval->add_option("--checkpoint", checkpoint_dir, "Checkpoint directory")->required();
  eval->add_option("--data", data_dir, "Dataset directory")->required();
  eval->add_option("--graphs", graph_dir, "Graph and gamma directory (computed if absent)");
  CLI::App* ablate = app.add_subcommand("ablate", "Run ablation variants over the seeds");
  ablate->add_option("--data", data_dir, "Dataset directory")->required();
  ablate->add_option("--graphs", graph_dir, "Graph and gamma directory (computed if absent)");
  ablate->add_option("--sweep", sweep, "lambda or epsilon instead of the standard variants")
      ->check(CLI::IsMember({"lambda", "epsilon"}));
  CLI::App* show = app.add_subcommand("config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), kExitUsage);
  }
  if (out.empty() && !show->parsed()) return report("usage", "--out is required", kExitUsage);

  crossrec_config* config = nullptr;
  crossrec_status status = config_path.empty()
                               ? crossrec_config_default(&config)
                               : crossrec_config_load(config_path.c_str(), &config);
  if (status != CROSSREC_OK) return report_status(status);

  if (gen->parsed()) {
    status = crossrec_gen(config, seed, out.c_str());
  } else if (fuse->parsed()) {
    status = crossrec_fuse(config, data_dir.c_str(), out.c_str());
  } else if (cluster->parsed()) {
    status = crossrec_cluster(config, seed, graph_dir.c_str(), out.c_str());
  } else if (match->parsed()) {
    status = crossrec_match(config, source_path.c_str(), target_path.c_str(),
                            or_null(overlap_path), out.c_str());
  } else if (train->parsed()) {
    status = crossrec_train(config, seed, data_dir.c_str(), or_null(graph_dir), out.c_str());
  } else if (eval->parsed()) {
    status = crossrec_eval(config, checkpoint_dir.c_str(), data_dir.c_str(), or_null(graph_dir),
                           threads, out.c_str());
  } else if (ablate->parsed()) {
    status = crossrec_ablate(config, seed, data_dir.c_str(), or_null(graph_dir), or_null(sweep),
                             threads, out.c_str());
  } else if (show->parsed()) {
    char* text = nullptr;
    status = crossrec_config_to_json(config, &text);
    if (status == CROSSREC_OK) {
      std::fputs(text, stdout);
      crossrec_string_free(text);
    }
  }
  crossrec_config_free(config);
  if (status != CROSSREC_OK) return report_status(status);
  return kExitOk;
}
