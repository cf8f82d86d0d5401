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

#include "crossrec/tsv_io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace crossrec::io {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write file: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename " + tmp + ": " + ec.message());
}

bool file_exists(const std::string& path) { return fs::exists(path); }

void ensure_directory(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create directory " + path + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::vector<TsvLine> split_tsv(std::string_view text) {
  std::vector<TsvLine> lines;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      TsvLine parsed{number, {}};
      std::size_t start = 0;
      while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
          parsed.fields.push_back(line.substr(start));
          break;
        }
        parsed.fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
      }
      lines.push_back(std::move(parsed));
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  return lines;
}

double parse_double(std::string_view field, const std::string& path, std::size_t line) {
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw_data(path + ":" + std::to_string(line) + ": not a number: '" +
               std::string(field) + "'");
  }
  return value;
}

long long parse_int(std::string_view field, const std::string& path, std::size_t line) {
  long long value = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw_data(path + ":" + std::to_string(line) + ": not an integer: '" +
               std::string(field) + "'");
  }
  return value;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

namespace {

// Parses `# key=value key=value` into a map.
std::map<std::string, std::string> parse_header(const TsvLine& line, const std::string& path) {
  std::map<std::string, std::string> out;
  if (line.fields.empty() || line.fields[0].empty() || line.fields[0][0] != '#') {
    throw_data(path + ":" + std::to_string(line.number) + ": missing '#' header");
  }
  std::istringstream words{std::string(line.fields[0].substr(1))};
  std::string word;
  while (words >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) continue;
    out[word.substr(0, eq)] = word.substr(eq + 1);
  }
  return out;
}

long long header_int(const std::map<std::string, std::string>& header, const std::string& key,
                     const std::string& path) {
  auto it = header.find(key);
  if (it == header.end()) throw_data(path + ": header lacks '" + key + "='");
  return parse_int(it->second, path, 1);
}

}  // namespace

std::string format_graph(const Matrix& graph) {
  std::string out = "# n=" + std::to_string(graph.rows()) + "\n";
  for (Eigen::Index i = 0; i < graph.rows(); ++i) {
    for (Eigen::Index j = 0; j < graph.cols(); ++j) {
      if (graph(i, j) != 0.0) {
        out += std::to_string(i) + '\t' + std::to_string(j) + '\t' +
               format_double(graph(i, j)) + '\n';
      }
    }
  }
  return out;
}

void write_graph(const std::string& path, const Matrix& graph) {
  write_file_atomic(path, format_graph(graph));
}

Matrix read_graph(const std::string& path) {
  const std::string text = read_file(path);
  const auto lines = split_tsv(text);
  if (lines.empty()) throw_data(path + ": empty graph file");
  const long long n = header_int(parse_header(lines[0], path), "n", path);
  if (n <= 0) throw_data(path + ": graph size must be positive");
  Matrix graph = Matrix::Zero(n, n);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& line = lines[k];
    if (line.fields.size() != 3) {
      throw_data(path + ":" + std::to_string(line.number) + ": expected 3 fields");
    }
    const long long i = parse_int(line.fields[0], path, line.number);
    const long long j = parse_int(line.fields[1], path, line.number);
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw_data(path + ":" + std::to_string(line.number) + ": index out of range");
    }
    graph(i, j) = parse_double(line.fields[2], path, line.number);
  }
  return graph;
}

void write_gamma(const std::string& path, const Matrix& gamma) {
  std::string out = "# n=" + std::to_string(gamma.rows()) +
                    " k=" + std::to_string(gamma.cols()) + "\n";
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      if (j > 0) out += '\t';
      out += format_double(gamma(i, j));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

Matrix read_gamma(const std::string& path) {
  const std::string text = read_file(path);
  const auto lines = split_tsv(text);
  if (lines.empty()) throw_data(path + ": empty cluster file");
  const auto header = parse_header(lines[0], path);
  const long long n = header_int(header, "n", path);
  const long long k = header_int(header, "k", path);
  if (n <= 0 || k <= 0) throw_data(path + ": bad cluster header");
  if (static_cast<long long>(lines.size()) != n + 1) {
    throw_data(path + ": expected " + std::to_string(n) + " rows");
  }
  Matrix gamma(n, k);
  for (long long i = 0; i < n; ++i) {
    const auto& line = lines[i + 1];
    if (static_cast<long long>(line.fields.size()) != k) {
      throw_data(path + ":" + std::to_string(line.number) + ": expected " +
                 std::to_string(k) + " columns");
    }
    for (long long j = 0; j < k; ++j) {
      gamma(i, j) = parse_double(line.fields[j], path, line.number);
    }
  }
  return gamma;
}

void write_plan(const std::string& path, const Matrix& plan, double epsilon) {
  std::string out = "# n=" + std::to_string(plan.rows()) + " eps=" + format_double(epsilon) + "\n";
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
      if (plan(i, j) > 1e-9) {
        out += std::to_string(i) + '\t' + std::to_string(j) + '\t' +
               format_double(plan(i, j)) + '\n';
      }
    }
  }
  write_file_atomic(path, out);
}

Matrix read_plan(const std::string& path, double* epsilon) {
  const std::string text = read_file(path);
  const auto lines = split_tsv(text);
  if (lines.empty()) throw_data(path + ": empty plan file");
  const auto header = parse_header(lines[0], path);
  const long long n = header_int(header, "n", path);
  if (epsilon != nullptr) {
    auto it = header.find("eps");
    if (it == header.end()) throw_data(path + ": header lacks 'eps='");
    *epsilon = parse_double(it->second, path, 1);
  }
  Matrix plan = Matrix::Zero(n, n);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& line = lines[k];
    if (line.fields.size() != 3) {
      throw_data(path + ":" + std::to_string(line.number) + ": expected 3 fields");
    }
    const long long i = parse_int(line.fields[0], path, line.number);
    const long long j = parse_int(line.fields[1], path, line.number);
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw_data(path + ":" + std::to_string(line.number) + ": index out of range");
    }
    plan(i, j) = parse_double(line.fields[2], path, line.number);
  }
  return plan;
}

}  // namespace crossrec::io
