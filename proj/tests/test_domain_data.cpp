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

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>

#include "crossrec/domain_data.hpp"
#include "crossrec/tsv_io.hpp"
#include "doctest.h"

using namespace crossrec;

namespace {

std::string scratch(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "crossrec_test_domain_data";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / name).string();
  io::write_file_atomic(path, content);
  return path;
}

SyntheticConfig small_config() {
  SyntheticConfig c;
  c.num_users_source = 40;
  c.num_users_target = 30;
  c.num_items_source = 25;
  c.num_items_target = 20;
  c.interactions_per_user_source = 5;
  c.interactions_per_user_target = 4;
  c.modality_dims = {{"text", 3}, {"visual", 5}};
  return c;
}

DomainDataset chain_dataset(int users, int per_user) {
  std::string text;
  for (int u = 0; u < users; ++u)
    for (int i = 0; i < per_user; ++i)
      text += "u" + std::to_string(u) + "\ti" + std::to_string(i) + "\t5\n";
  return load_ratings(scratch("chain.tsv", text), {4.0, 1});
}

}  // namespace

TEST_CASE("ratings below the threshold are dropped") {
  const auto ds = load_ratings(scratch("r1.tsv", "u1\ti1\t5\nu1\ti2\t3\n"), {4.0, 1});
  REQUIRE(ds.interactions.size() == 1);
  CHECK(ds.user_ids == std::vector<std::string>{"u1"});
  CHECK(ds.item_ids == std::vector<std::string>{"i1"});
}

TEST_CASE("an empty ratings file is a data error") {
  try {
    load_ratings(scratch("empty.tsv", ""), {4.0, 1});
    FAIL("expected a data error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kData);
  }
}

TEST_CASE("a fully rated 3x3 block gives 9 interactions") {
  std::string text;
  for (int u = 0; u < 3; ++u)
    for (int i = 0; i < 3; ++i) text += "u" + std::to_string(u) + "\ti" + std::to_string(i) + "\t5\n";
  const auto ds = load_ratings(scratch("dense.tsv", text), {4.0, 1});
  CHECK(ds.interactions.size() == 9);
  CHECK(ds.num_users == 3);
  CHECK(ds.num_items == 3);
}

TEST_CASE("ids map to sorted indices") {
  const auto ds = load_ratings(scratch("order.tsv", "b\tz\t5\na\ty\t5\nc\tz\t4\n"), {4.0, 1});
  CHECK(ds.user_ids == std::vector<std::string>{"a", "b", "c"});
  CHECK(ds.item_ids == std::vector<std::string>{"y", "z"});
  CHECK(ds.interactions.front() == Interaction{0, 0});
}

TEST_CASE("feature files") {
  const std::vector<std::string> ids = {"a", "b"};
  SUBCASE("2 items of dimension 4") {
    const Matrix m = load_features(scratch("f.tsv", "a\t1\t2\t3\t4\nb\t5\t6\t7\t8\n"), ids);
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 4);
  }
  SUBCASE("rows of different length") {
    CHECK_THROWS_AS(load_features(scratch("f2.tsv", "a\t1\t2\nb\t1\n"), ids), Error);
  }
  SUBCASE("rows follow the index map, not the file order") {
    const Matrix m = load_features(scratch("f3.tsv", "b\t5\t6\na\t1\t2\n"), ids);
    // Look each id up directly in the file text.
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 1) == 2.0);
    CHECK(m(1, 0) == 5.0);
    CHECK(m(1, 1) == 6.0);
  }
  SUBCASE("unknown ids fail unless skipped") {
    const std::string p = scratch("f4.tsv", "a\t1\nb\t2\nq\t3\n");
    CHECK_THROWS_AS(load_features(p, ids), Error);
    CHECK(load_features(p, ids, true).rows() == 2);
  }
  SUBCASE("a missing item is a data error") {
    CHECK_THROWS_AS(load_features(scratch("f5.tsv", "a\t1\n"), ids), Error);
  }
}

TEST_CASE("synthetic generator") {
  SUBCASE("overlap ratio must lie strictly inside (0, 1)") {
    SyntheticConfig c = small_config();
    c.overlap_ratio = 1.0;
    CHECK_THROWS_AS(generate_synthetic(c, 1), Error);
    c.overlap_ratio = 0.0;
    CHECK_THROWS_AS(generate_synthetic(c, 1), Error);
  }
  SUBCASE("same seed gives byte-identical files") {
    const auto a = generate_synthetic(small_config(), 9);
    const auto b = generate_synthetic(small_config(), 9);
    const std::string pa = scratch("sa.tsv", ""), pb = scratch("sb.tsv", "");
    write_ratings(pa, a.source);
    write_ratings(pb, b.source);
    CHECK(io::read_file(pa) == io::read_file(pb));
    write_features(pa, a.target, "visual");
    write_features(pb, b.target, "visual");
    CHECK(io::read_file(pa) == io::read_file(pb));
    CHECK(a.overlap.pairs == b.overlap.pairs);
  }
  SUBCASE("different seeds differ") {
    const auto a = generate_synthetic(small_config(), 1);
    const auto b = generate_synthetic(small_config(), 2);
    CHECK(a.source.interactions != b.source.interactions);
  }
  SUBCASE("noise 0 and equal latent factors give identical features") {
    SyntheticConfig c = small_config();
    c.noise = 0.0;
    c.item_groups = 1;
    c.item_spread = 0.0;
    const auto d = generate_synthetic(c, 4);
    const Matrix& f = d.source.features.at("text");
    for (Eigen::Index r = 1; r < f.rows(); ++r) CHECK(f.row(r) == f.row(0));
  }
  SUBCASE("structural contract") {
    const SyntheticConfig c = small_config();
    const auto d = generate_synthetic(c, 5);
    d.source.validate();
    d.target.validate();
    d.overlap.validate(d.source.num_users, d.target.num_users);
    CHECK(d.overlap.pairs.size() == 3u);  // round(0.1 * 30)
    for (const auto& x : d.source.interactions) CHECK(x.item < d.source.num_items);
    CHECK(d.source.features.at("visual").cols() == 5);
  }
}

TEST_CASE("overlap pairs are injective") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto d = generate_synthetic(small_config(), seed);
    std::set<int> s, t;
    for (const auto& [a, b] : d.overlap.pairs) {
      CHECK(s.insert(a).second);
      CHECK(t.insert(b).second);
    }
  }
}

TEST_CASE("split sizes and forced training interactions") {
  SUBCASE("10 interactions split 8/1/1") {
    const auto ds = chain_dataset(1, 10);
    const Split sp = split_dataset(ds, 1);
    CHECK(sp.train.size() == 8);
    CHECK(sp.validation.size() == 1);
    CHECK(sp.test.size() == 1);
  }
  SUBCASE("a single-interaction user keeps it in train") {
    std::string text = "solo\tx\t5\n";
    for (int i = 0; i < 20; ++i) text += "busy\ti" + std::to_string(i) + "\t5\n";
    const auto ds = load_ratings(scratch("solo.tsv", text), {4.0, 1});
    const Split sp = split_dataset(ds, 3);
    const int solo = 1;  // "busy" < "solo"
    CHECK(std::count_if(sp.train.begin(), sp.train.end(),
                        [&](const Interaction& x) { return x.user == solo; }) == 1);
  }
  SUBCASE("100 interactions, two seeds: same sizes, different parts") {
    const auto ds = chain_dataset(10, 10);
    const Split a = split_dataset(ds, 1);
    const Split b = split_dataset(ds, 2);
    CHECK(a.test.size() == b.test.size());
    CHECK(a.validation.size() == b.validation.size());
    CHECK(a.test != b.test);
  }
  SUBCASE("fewer than 3 interactions is rejected") {
    CHECK_THROWS_AS(split_dataset(chain_dataset(1, 2), 1), Error);
  }
}

TEST_CASE("split parts partition the interactions [property]") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto d = generate_synthetic(small_config(), seed);
    const Split sp = split_dataset(d.source, seed);
    std::vector<Interaction> all = sp.train;
    all.insert(all.end(), sp.validation.begin(), sp.validation.end());
    all.insert(all.end(), sp.test.begin(), sp.test.end());
    std::sort(all.begin(), all.end());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    CHECK(all == d.source.interactions);
    std::vector<int> train_count(d.source.num_users, 0);
    for (const auto& x : sp.train) ++train_count[x.user];
    CHECK(*std::min_element(train_count.begin(), train_count.end()) >= 1);
  }
}

TEST_CASE("bipartite adjacency") {
  SUBCASE("one interaction") {
    const auto ds = load_ratings(scratch("one.tsv", "u\ti\t5\n"), {4.0, 1});
    Split sp;
    sp.train = ds.interactions;
    const Matrix m = Matrix(build_bipartite(ds, sp).adjacency);
    Matrix expected(2, 2);
    expected << 0, 1, 1, 0;
    CHECK(m == expected);
  }
  SUBCASE("checkerboard against a hand-built block matrix") {
    const auto ds =
        load_ratings(scratch("cb.tsv", "u0\ti0\t5\nu1\ti1\t5\nu0\ti1\t1\nu1\ti0\t1\n"), {4.0, 1});
    Split sp;
    sp.train = ds.interactions;
    const Matrix m = Matrix(build_bipartite(ds, sp).adjacency);
    Matrix expected(4, 4);
    expected << 0, 0, 1, 0,
                0, 0, 0, 1,
                1, 0, 0, 0,
                0, 1, 0, 0;
    CHECK(m == expected);
  }
  SUBCASE("an item without training interactions has an empty row and column") {
    const auto ds = load_ratings(scratch("gap.tsv", "u\ta\t5\nu\tb\t5\n"), {4.0, 1});
    Split sp;
    sp.train = {ds.interactions[0]};
    const Matrix m = Matrix(build_bipartite(ds, sp).adjacency);
    CHECK(m.row(2).sum() == 0.0);
    CHECK(m.col(2).sum() == 0.0);
  }
}

TEST_CASE("bipartite adjacency is symmetric with empty diagonal blocks [property]") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto d = generate_synthetic(small_config(), seed);
    const Split sp = split_dataset(d.target, seed);
    const BipartiteGraph g = build_bipartite(d.target, sp);
    const Matrix m = Matrix(g.adjacency);
    CHECK(m == m.transpose());
    CHECK(m.topLeftCorner(g.num_users, g.num_users).isZero(0));
    CHECK(m.bottomRightCorner(g.num_items, g.num_items).isZero(0));
  }
}
