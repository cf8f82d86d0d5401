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

#ifndef CROSSREC_TSV_IO_HPP_
#define CROSSREC_TSV_IO_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "crossrec/common.hpp"

namespace crossrec::io {

std::string read_file(const std::string& path);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

bool file_exists(const std::string& path);
void ensure_directory(const std::string& path);
std::string join_path(const std::string& dir, const std::string& name);

struct TsvLine {
  std::size_t number;  // 1-based
  std::vector<std::string_view> fields;
};

// Splits on newlines and tabs, skipping empty lines. The views point into
// `text`. Lines starting with '#' are returned too; callers decide.
std::vector<TsvLine> split_tsv(std::string_view text);

double parse_double(std::string_view field, const std::string& path, std::size_t line);
long long parse_int(std::string_view field, const std::string& path, std::size_t line);

// Shortest text that round-trips the double exactly.
std::string format_double(double value);

// Sparse triple export of a square graph: header `# n=<N>` then
// `row\tcol\tweight` for each nonzero entry in row-major order.
std::string format_graph(const Matrix& graph);
void write_graph(const std::string& path, const Matrix& graph);
Matrix read_graph(const std::string& path);

// Dense cluster matrix: header `# n=<N> k=<K>` then one row per item.
void write_gamma(const std::string& path, const Matrix& gamma);
Matrix read_gamma(const std::string& path);

// Plan triples `i\tj\tmass` for entries above 1e-9, header `# n=<N> eps=<e>`.
void write_plan(const std::string& path, const Matrix& plan, double epsilon);
Matrix read_plan(const std::string& path, double* epsilon = nullptr);

}  // namespace crossrec::io

#endif  // CROSSREC_TSV_IO_HPP_
