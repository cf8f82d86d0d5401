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

#include <filesystem>
#include <string>

#include "crossrec/common.hpp"
#include "crossrec/tsv_io.hpp"
#include "doctest.h"

using namespace crossrec;

namespace {

std::string scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "crossrec_test_common_io";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("derive_seed separates streams and is stable") {
  CHECK(derive_seed(1, 1) == derive_seed(1, 1));
  CHECK(derive_seed(1, 1) != derive_seed(1, 2));
  CHECK(derive_seed(1, 1) != derive_seed(2, 1));
}

TEST_CASE("uniform draws stay in range and repeat under a seed") {
  Rng a(5), b(5);
  for (int k = 0; k < 1000; ++k) {
    const double x = uniform01(a);
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(x == uniform01(b));
    CHECK(uniform_index(a, 7) < 7u);
    uniform_index(b, 7);
  }
}

TEST_CASE("split_tsv keeps line numbers and drops blank lines") {
  const auto lines = io::split_tsv("a\tb\n\nc\r\n");
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].number == 1);
  CHECK(lines[0].fields.size() == 2);
  CHECK(lines[1].number == 3);
  CHECK(lines[1].fields[0] == "c");
}

TEST_CASE("number parsing reports the location") {
  CHECK(io::parse_double("2.5", "f", 1) == 2.5);
  CHECK(io::parse_int("-3", "f", 1) == -3);
  try {
    io::parse_double("2.5x", "f.tsv", 7);
    FAIL("expected a data error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kData);
    CHECK(std::string(e.what()).find("f.tsv:7") != std::string::npos);
  }
  CHECK_THROWS_AS(io::parse_int("1.0", "f", 1), Error);
}

TEST_CASE("format_double round-trips exactly") {
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const double x = standard_normal(rng) * 1e3;
    CHECK(io::parse_double(io::format_double(x), "", 0) == x);
  }
}

TEST_CASE("graph, gamma and plan files round-trip") {
  Matrix g = Matrix::Zero(4, 4);
  g(0, 1) = 1.0;
  g(2, 3) = 0.25;
  g(3, 3) = 1.0 / 3.0;
  io::write_graph(scratch("g.tsv"), g);
  CHECK(io::read_graph(scratch("g.tsv")) == g);
  CHECK(io::read_file(scratch("g.tsv")).rfind("# n=4\n", 0) == 0);

  Matrix gamma(3, 2);
  gamma << 0.5, 0.5, 1.0, 0.0, 0.1, 0.9;
  io::write_gamma(scratch("gamma.tsv"), gamma);
  CHECK(io::read_gamma(scratch("gamma.tsv")) == gamma);

  double eps = 0.0;
  io::write_plan(scratch("plan.tsv"), gamma.leftCols(2).topRows(2), 0.01);
  CHECK(io::read_plan(scratch("plan.tsv"), &eps) == gamma.topRows(2));
  CHECK(eps == 0.01);
}

TEST_CASE("reading a missing file is an io error") {
  try {
    io::read_file(scratch("does_not_exist.tsv"));
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
}
