/*
 * Copyright 2026 The gapmon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "gapmon/errors.hpp"
#include "gapmon/exact.hpp"
#include "gapmon/model_io.hpp"
#include "gapmon/table.hpp"
#include "support/fixtures.hpp"

using namespace gapmon;
using gapmon::testing::finite_unfolding_model;
using gapmon::testing::m1_d1;

namespace {

std::vector<InputLabel> a_c_g1(const ModelBundle& b) {
  return {{ItemKind::kEvent, 0, "a"}, {ItemKind::kEvent, 1, "c"},
          {ItemKind::kGap, *b.gap_index("g1"), "g1"}};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("gapmon_test_table_" + name);
}

std::size_t label_position(const PrecomputedTable& t, const TraceItem& item) {
  const auto& labels = t.labels();
  const auto it = std::find_if(labels.begin(), labels.end(), [&](const InputLabel& l) {
    return l.kind == item.kind && l.index == item.index;
  });
  REQUIRE(it != labels.end());
  return static_cast<std::size_t>(it - labels.begin());
}

}  // namespace

TEST_CASE("exact table of the two-symbol example has four nodes") {
  const auto b = m1_d1();
  PrecomputeOptions opts;
  opts.labels = a_c_g1(b);
  const auto t = precompute(b, opts);
  REQUIRE(t.num_nodes() == 4);

  // Hand-derived unfolding: node 0 = x0/s0, 1 = x0/s1, 2 = x1/s0,
  // 3 = half x0/s1 and half x1/s0. Every node sends a->1, c->2, g1->3.
  const double expected[4][2][2] = {{{1, 0}, {0, 0}},
                                    {{0, 1}, {0, 0}},
                                    {{0, 0}, {1, 0}},
                                    {{0, 0.5}, {0.5, 0}}};
  for (std::size_t n = 0; n < 4; ++n) {
    const auto belief = t.node(n);
    for (std::size_t x = 0; x < 2; ++x) {
      for (std::size_t m = 0; m < 2; ++m) CHECK(belief.alpha(x, m) == expected[n][x][m]);
    }
    CHECK(t.edge(n, 0) == 1);
    CHECK(t.edge(n, 1) == 2);
    CHECK(t.edge(n, 2) == 3);
  }
  CHECK(t.node_verdicts(0).accepting() == 1.0);
  CHECK(t.node_verdicts(1).pending() == 1.0);
  CHECK(t.node_verdicts(3).accepting() == 0.5);
  CHECK(max_edge_error(b, t) == 0.0);
}

TEST_CASE("impossible observations become marker edges") {
  const auto b = m1_d1();
  const auto t = precompute(b);
  const std::size_t p1 = t.label_of(ItemKind::kPeek, "p1");
  CHECK(t.edge(0, p1) == PrecomputedTable::kImpossible);
  const std::vector<std::size_t> labels{p1};
  CHECK_THROWS_AS(run_table(t, labels), ImpossibleObservation);
}

TEST_CASE("large epsilon collapses to one node; node limit is enforced") {
  const auto b = m1_d1();
  PrecomputeOptions opts;
  opts.labels = a_c_g1(b);
  opts.epsilon = 2.0;
  const auto t = precompute(b, opts);
  CHECK(t.num_nodes() == 1);
  for (std::size_t l = 0; l < t.num_labels(); ++l) CHECK(t.edge(0, l) == 0);

  opts.epsilon = 0.0;
  opts.max_nodes = 2;
  CHECK_THROWS_AS(precompute(b, opts), TableLimitExceeded);
}

TEST_CASE("run_table with epsilon zero matches the exact estimator") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const auto b = finite_unfolding_model(rng);
    const auto t = precompute(b);
    CHECK(max_edge_error(b, t) == 0.0);
    const auto trace = gapmon::testing::random_trace(rng, b, 10, 6, true);
    std::vector<std::size_t> labels;
    for (const auto& item : trace) labels.push_back(label_position(t, item));
    ExactRun ex;
    try {
      ex = run_exact(b, trace);
    } catch (const ImpossibleObservation&) {
      CHECK_THROWS_AS(run_table(t, labels), ImpossibleObservation);
      continue;
    }
    const auto tr = run_table(t, labels);
    REQUIRE(tr.steps.size() == ex.steps.size());
    for (std::size_t i = 0; i < ex.steps.size(); ++i) {
      for (Verdict v : kAllVerdicts) {
        CHECK(std::abs(tr.steps[i].verdicts[v] - ex.steps[i].verdicts[v]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("named traces resolve against the table's labels") {
  const auto b = m1_d1();
  PrecomputeOptions opts;
  opts.labels = a_c_g1(b);
  const auto t = precompute(b, opts);
  const auto path = run_table(t, parse_trace("evt a\ngap g1\n"));
  REQUIRE(path.steps.size() == 2);
  CHECK(path.steps[0].node == 1);
  CHECK(path.steps[1].node == 3);
  const auto empty = run_table(t, std::vector<NamedItem>{});
  CHECK(empty.steps.empty());
  CHECK(empty.final_node == 0);
  CHECK(empty.final_verdicts.accepting() == 1.0);

  const auto run = run_table(t, parse_trace("evt a\ngap g1\nevt c\n"));
  CHECK(run.final_node == 2);
  CHECK(run.steps.size() == 3);
  CHECK_THROWS_AS(run_table(t, parse_trace("evt a\ngap g9\n")), UnknownLabel);
  // g12 exists in the model but was not precomputed.
  CHECK_THROWS_AS(run_table(t, parse_trace("gap g12\n")), UnknownLabel);
}

TEST_CASE("tables round-trip through their file format") {
  const auto b = m1_d1();
  PrecomputeOptions opts;
  opts.epsilon = 0.05;
  const auto t = precompute(b, opts);
  const auto path = temp_path("roundtrip.json");
  save_table(t, path);
  const auto loaded = load_table(path, &b);
  CHECK(loaded == t);
  CHECK(serialize_table(loaded) == serialize_table(t));
  CHECK(t.digest() == model_digest(b));

  auto other = b;
  other.hmm.A(0, 0) = 0.25;
  other.hmm.A(0, 1) = 0.75;
  CHECK_THROWS_AS(load_table(path, &other), DigestMismatch);

  const std::string text = serialize_table(t);
  CHECK_THROWS_AS(parse_table(text.substr(0, text.size() / 2)), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("structurally broken tables are rejected") {
  const auto b = m1_d1();
  auto j = nlohmann::json::parse(serialize_table(precompute(b)));
  SUBCASE("edge to a missing node") {
    j["edges"][0][2] = 999;
  }
  SUBCASE("missing edge") {
    j["edges"].erase(j["edges"].size() - 1);
  }
  SUBCASE("wrong format tag") {
    j["format"] = "something-else";
  }
  CHECK_THROWS_AS(parse_table(j.dump()), ParseError);
}

TEST_CASE("grid and linear-scan indexes build identical tables") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    gapmon::testing::RandomModelSpec spec;
    spec.hidden = 3;
    spec.monitor = 2;
    spec.symbols = 2;
    spec.sparsity = 0.3;
    const auto b = gapmon::testing::random_model(rng, spec);
    for (double eps : {0.2, 0.05}) {
      PrecomputeOptions grid;
      grid.epsilon = eps;
      grid.max_nodes = 3000;
      PrecomputeOptions scan = grid;
      scan.index = NodeIndex::kLinearScan;
      PrecomputeOptions par = grid;
      par.exec = Exec::kParallel;
      try {
        const auto a = precompute(b, grid);
        const auto c = precompute(b, scan);
        const auto p = precompute(b, par);
        CHECK(a == c);
        CHECK(serialize_table(a) == serialize_table(p));
        CHECK(max_edge_error(b, a) <= eps + 1e-12);
      } catch (const TableLimitExceeded&) {
        CHECK_THROWS_AS(precompute(b, scan), TableLimitExceeded);
      }
    }
  }
}

TEST_CASE("coarser epsilon never needs more nodes on the example") {
  const auto b = gapmon::testing::d1_four_symbols();
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double eps : {0.01, 0.05, 0.1, 0.5, 1.0, 2.0}) {
    PrecomputeOptions opts;
    opts.epsilon = eps;
    const auto n = precompute(b, opts).num_nodes();
    CHECK(n <= prev);
    prev = n;
  }
  CHECK(prev == 1);
}

TEST_CASE("node count is non-increasing in epsilon on random models") {
  SplitMix64 rng(31);
  const std::vector<double> grid{0.1, 0.2, 0.5, 1.0, 2.0};
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    gapmon::testing::RandomModelSpec spec;
    spec.hidden = 2;
    spec.monitor = 2;
    spec.symbols = 2;
    spec.sparsity = 0.3;
    const auto b = gapmon::testing::random_model(rng, spec);
    std::vector<std::size_t> counts;
    for (double eps : grid) {
      PrecomputeOptions opts;
      opts.epsilon = eps;
      opts.max_nodes = 50000;
      counts.push_back(precompute(b, opts).num_nodes());
    }
    for (std::size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] <= counts[i - 1]);
    ++checked;
  }
  CHECK(checked == 20);
}
