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

#ifndef CROSSREC_COMMON_HPP_
#define CROSSREC_COMMON_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace crossrec {

// Row-major so that a row is one item/user embedding and memory order
// matches the TSV and checkpoint layouts.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Numeric values double as C API status codes and CLI exit codes.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kUsage = 2,
  kData = 3,
  kConvergence = 4,
  kIo = 5,
  kInternal = 6,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised when an iterative solver exhausts its budget; carries the last
// residual it reached.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(ErrorCode::kConvergence,
              what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

[[noreturn]] void throw_invalid(const std::string& message);
[[noreturn]] void throw_data(const std::string& message);

// All randomness in the library flows from this engine so that results are
// reproducible across platforms given a seed.
using Rng = std::mt19937_64;

// Derives an independent stream from (seed, stream) via splitmix64.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Portable draws. The std distributions are implementation-defined, which
// would make seeded outputs differ across standard libraries.
double uniform01(Rng& rng);
double standard_normal(Rng& rng);
std::size_t uniform_index(Rng& rng, std::size_t n);

template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[uniform_index(rng, i)]);
  }
}

bool all_finite(const Matrix& m);

}  // namespace crossrec

#endif  // CROSSREC_COMMON_HPP_
