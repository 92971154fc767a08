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

#include <cmath>
#include <filesystem>

#include "gapmon/errors.hpp"
#include "gapmon/model_io.hpp"
#include "gapmon/trace.hpp"
#include "support/fixtures.hpp"

using namespace gapmon;
using gapmon::testing::m1_d1;

namespace {

std::string invalid_locator(const ModelBundle& b) {
  try {
    validate_model(b);
  } catch (const InvalidModel& e) {
    return e.locator();
  }
  return "";
}

std::vector<std::size_t> symbols(const Alphabet& sigma, std::string_view text) {
  std::vector<std::size_t> out;
  for (char c : text) {
    if (c != ' ') out.push_back(*sigma.index_of(std::string(1, c)));
  }
  return out;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("gapmon_test_" + name);
}

}  // namespace

TEST_CASE("validate_model accepts M1/D1 and names the first violation") {
  CHECK_NOTHROW(validate_model(m1_d1()));

  auto bad_row = m1_d1();
  bad_row.hmm.A(0, 1) = 0.6;
  CHECK(invalid_locator(bad_row) == "hmm.A.row[0]");

  auto missing = m1_d1();
  missing.dfsm.delta[1 * 2 + 1] = Dfsm::kNoState;
  CHECK(invalid_locator(missing) == "dfsm.delta[1][c]");

  auto negative = m1_d1();
  negative.hmm.B(1, 0) = -0.5;
  negative.hmm.B(1, 1) = 1.5;
  CHECK(invalid_locator(negative) == "hmm.B.row[1]");

  auto alphabet = m1_d1();
  alphabet.dfsm.alphabet.symbols = {"c", "a"};
  CHECK(invalid_locator(alphabet) == "dfsm.alphabet");

  auto peek = m1_d1();
  peek.peek->C(0, 0) = 0.5;
  CHECK(invalid_locator(peek) == "peek.C.row[0]");

  auto gap = m1_d1();
  gap.gaps[1].mass[1].second = 0.4;
  CHECK(invalid_locator(gap) == "gap_dists[1].mass");

  auto dup = m1_d1();
  dup.gaps[1].id = "g1";
  CHECK(invalid_locator(dup) == "gap_dists[1].id");
}

TEST_CASE("absorbing violations must stay violated") {
  auto b = m1_d1();
  b.dfsm.states.push_back("bad");
  b.dfsm.verdict.push_back(Verdict::kViolated);
  b.dfsm.delta.push_back(2);
  b.dfsm.delta.push_back(0);  // bad --c--> s0 leaves the violated set
  b.dfsm.absorbing_violations = true;
  CHECK(invalid_locator(b) == "dfsm.delta[2][c]");
  b.dfsm.delta.back() = 2;
  CHECK_NOTHROW(validate_model(b));
}

TEST_CASE("dfsm_step and run_dfsm on the always-a-implies-eventually-c monitor") {
  const auto b = gapmon::testing::d1_four_symbols();
  const auto& d = b.dfsm;
  const auto& sigma = b.alphabet();
  CHECK(dfsm_step(d, 0, *sigma.index_of("a")) == 1);
  CHECK(dfsm_step(d, 1, *sigma.index_of("c")) == 0);
  CHECK(dfsm_step(d, 0, *sigma.index_of("b")) == 0);

  const auto full = run_dfsm(d, symbols(sigma, "a b b c a d b c"));
  CHECK(full.state == 0);
  CHECK(full.verdict == Verdict::kAccepting);

  const auto open = run_dfsm(d, symbols(sigma, "a b"));
  CHECK(open.state == 1);
  CHECK(open.verdict == Verdict::kPending);

  const auto empty = run_dfsm(d, {});
  CHECK(empty.state == 0);
  CHECK(empty.verdict == Verdict::kAccepting);
}

TEST_CASE("verdict_probabilities sums cells by verdict label") {
  const auto b = m1_d1();
  BeliefState point{Matrix(2, 2)};
  point.alpha(0, 0) = 1.0;
  auto v = verdict_probabilities(point, b.dfsm);
  CHECK(v.accepting() == 1.0);
  CHECK(v.pending() == 0.0);
  CHECK(v.violated() == 0.0);

  BeliefState split{Matrix(2, 2)};
  split.alpha(0, 1) = 0.5;
  split.alpha(1, 0) = 0.5;
  v = verdict_probabilities(split, b.dfsm);
  CHECK(v.accepting() == 0.5);
  CHECK(v.pending() == 0.5);

  BeliefState uniform{Matrix(2, 2, 0.25)};
  v = verdict_probabilities(uniform, b.dfsm);
  CHECK(v.accepting() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(v.pending() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("verdict_probabilities matches cell enumeration and sums to one") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    gapmon::testing::RandomModelSpec spec;
    spec.hidden = 1 + trial % 4;
    spec.monitor = 1 + trial % 3 + 1;
    const auto b = gapmon::testing::random_model(rng, spec);
    BeliefState belief{Matrix(spec.hidden, spec.monitor)};
    double total = 0.0;
    for (double& v : belief.alpha.flat()) total += (v = rng.uniform());
    for (double& v : belief.alpha.flat()) v /= total;

    VerdictProbs enumerated;
    for (std::size_t x = 0; x < spec.hidden; ++x) {
      for (std::size_t m = 0; m < spec.monitor; ++m) {
        enumerated[b.dfsm.verdict[m]] += belief.alpha(x, m);
      }
    }
    const auto v = verdict_probabilities(belief, b.dfsm);
    for (Verdict label : kAllVerdicts) CHECK(v[label] == doctest::Approx(enumerated[label]).epsilon(1e-12));
    CHECK(std::abs(v.sum() - 1.0) <= 1e-9);
  }
}

TEST_CASE("model bundles round-trip bit-exactly") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    gapmon::testing::RandomModelSpec spec;
    spec.hidden = 2 + trial % 3;
    spec.peek = trial % 2 == 0;
    spec.sparsity = 0.3;
    const auto b = gapmon::testing::random_model(rng, spec);
    const auto path = temp_file("roundtrip.json");
    save_model(b, path);
    const auto back = load_model(path);
    CHECK(back == b);
    CHECK(model_digest(back) == model_digest(b));
  }
  const auto m1 = m1_d1();
  CHECK(parse_model(to_json(m1).dump()) == m1);
}

TEST_CASE("model loading reports parse and validation errors") {
  auto j = to_json(m1_d1());
  SUBCASE("unknown symbol in delta is a parse error with a position") {
    auto text = j.dump(2);
    const auto at = text.find("\"delta\"");
    const auto sym = text.find("\"c\"", at);
    text.replace(sym, 3, "\"z\"");
    try {
      parse_model(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() > 1);
      CHECK(std::string(e.what()).find("unknown symbol 'z'") != std::string::npos);
    }
  }
  SUBCASE("negative probability is an invalid model") {
    j["hmm"]["A"][1] = {-0.5, 1.5};
    CHECK_THROWS_AS(parse_model(j.dump()), InvalidModel);
  }
  SUBCASE("syntax errors carry line and column") {
    try {
      parse_model("{\n  \"alphabet\": [\"a\",\n  ]\n}");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(e.column() >= 1);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_model(temp_file("does_not_exist.json")), ParseError);
  }
  SUBCASE("geometric gap distributions are truncated and renormalized") {
    j["gap_dists"] = nlohmann::json::array({{{"id", "geo"}, {"geometric", 0.5}}});
    const auto b = parse_model(j.dump());
    const auto& g = b.gaps.at(0);
    double total = 0.0;
    for (const auto& [len, p] : g.mass) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    // cumulative 1 - 0.5^(L+1) >= 1 - 1e-9 first holds at L = 29
    CHECK(g.max_length() == 29);
  }
}

TEST_CASE("trace files parse items, comments and blank lines") {
  const auto items = parse_trace("# header\nevt a\n\n  gap g1   # missed\npeek p1\n");
  REQUIRE(items.size() == 3);
  CHECK(items[0] == NamedItem{ItemKind::kEvent, "a"});
  CHECK(items[1] == NamedItem{ItemKind::kGap, "g1"});
  CHECK(items[1].line == 4);
  CHECK(items[2] == NamedItem{ItemKind::kPeek, "p1"});
  CHECK(parse_trace(format_trace(items)) == items);

  try {
    parse_trace("evt a\nfoo b\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_trace("evt\n"), ParseError);
  CHECK_THROWS_AS(parse_trace("evt a b\n"), ParseError);
}

TEST_CASE("trace resolution against a bundle") {
  auto b = m1_d1();
  const auto items = parse_trace("evt a\ngap g1\npeek p1\ngap point:3\n");
  CHECK_THROWS_AS(resolve_trace(b, items), UnknownLabel);
  declare_builtin_gaps(b, items);
  const auto resolved = resolve_trace(b, items);
  REQUIRE(resolved.size() == 4);
  CHECK(resolved[0] == TraceItem::event(0));
  CHECK(resolved[1] == TraceItem::gap(0));
  CHECK(resolved[2] == TraceItem::peek(1));
  CHECK(b.gaps.at(resolved[3].index) == GapDist::point("point:3", 3));
  CHECK_FALSE(builtin_gap("point:x").has_value());
  CHECK_THROWS_AS(resolve_trace(b, parse_trace("evt z\n")), UnknownLabel);
}
