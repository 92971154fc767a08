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

#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

namespace gapmon::testing {

namespace {

Dfsm d1_over(const Alphabet& sigma) {
  Dfsm d;
  d.states = {"s0", "s1"};
  d.alphabet = sigma;
  d.initial = 0;
  d.verdict = {Verdict::kAccepting, Verdict::kPending};
  const std::size_t k = sigma.size();
  d.delta.resize(2 * k);
  for (std::size_t o = 0; o < k; ++o) {
    d.delta[0 * k + o] = 0;
    d.delta[1 * k + o] = 1;
  }
  d.delta[0 * k + *sigma.index_of("a")] = 1;
  d.delta[1 * k + *sigma.index_of("c")] = 0;
  return d;
}

void random_row(std::span<double> row, SplitMix64& rng, double sparsity) {
  const std::size_t keep = static_cast<std::size_t>(rng.uniform() * static_cast<double>(row.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const bool zero = i != keep && rng.uniform() < sparsity;
    row[i] = zero ? 0.0 : -std::log(1.0 - rng.uniform()) + 1e-3;
    total += row[i];
  }
  for (double& v : row) v /= total;
}

std::size_t pick(SplitMix64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)));
}

}  // namespace

ModelBundle m1_d1() {
  ModelBundle b;
  b.hmm.alphabet.symbols = {"a", "c"};
  b.hmm.pi = {1.0, 0.0};
  b.hmm.A = Matrix(2, 2, {0.5, 0.5, 0.5, 0.5});
  b.hmm.B = Matrix(2, 2, {1.0, 0.0, 0.0, 1.0});
  b.dfsm = d1_over(b.hmm.alphabet);
  b.peek = PeekModel{{"p0", "p1"}, Matrix(2, 2, {1.0, 0.0, 0.0, 1.0})};
  b.gaps = {GapDist::point("g1", 1), GapDist{"g12", {{1, 0.5}, {2, 0.5}}}};
  return b;
}

ModelBundle d1_four_symbols() {
  ModelBundle b;
  b.hmm.alphabet.symbols = {"a", "b", "c", "d"};
  b.hmm.pi = {1.0, 0.0};
  b.hmm.A = Matrix(2, 2, {0.5, 0.5, 0.5, 0.5});
  b.hmm.B = Matrix(2, 4, {0.8, 0.1, 0.0, 0.1, 0.0, 0.1, 0.8, 0.1});
  b.dfsm = d1_over(b.hmm.alphabet);
  b.gaps = {GapDist{"g", {{1, 0.25}, {2, 0.5}, {3, 0.25}}}};
  return b;
}

ModelBundle random_model(SplitMix64& rng, const RandomModelSpec& spec) {
  ModelBundle b;
  for (std::size_t o = 0; o < spec.symbols; ++o) {
    b.hmm.alphabet.symbols.push_back(std::string(1, static_cast<char>('a' + o)));
  }
  const std::size_t n = spec.hidden;
  const std::size_t q = spec.monitor;
  const std::size_t k = spec.symbols;
  b.hmm.pi.resize(n);
  random_row(b.hmm.pi, rng, 0.0);
  b.hmm.A = Matrix(n, n);
  b.hmm.B = Matrix(n, k);
  for (std::size_t x = 0; x < n; ++x) random_row(b.hmm.A.row(x), rng, spec.sparsity);
  for (std::size_t x = 0; x < n; ++x) random_row(b.hmm.B.row(x), rng, spec.sparsity);

  auto& d = b.dfsm;
  d.alphabet = b.hmm.alphabet;
  for (std::size_t m = 0; m < q; ++m) d.states.push_back("q" + std::to_string(m));
  d.initial = 0;
  d.verdict.resize(q);
  for (std::size_t m = 0; m < q; ++m) {
    const std::size_t r = pick(rng, spec.violations ? 3 : 2);
    d.verdict[m] = static_cast<Verdict>(r);
  }
  d.verdict[0] = Verdict::kAccepting;
  d.absorbing_violations = spec.violations;
  d.delta.resize(q * k);
  for (std::size_t m = 0; m < q; ++m) {
    for (std::size_t o = 0; o < k; ++o) {
      d.delta[m * k + o] = d.verdict[m] == Verdict::kViolated
                               ? static_cast<std::uint32_t>(m)
                               : static_cast<std::uint32_t>(pick(rng, q));
    }
  }

  if (spec.peek) {
    PeekModel p;
    for (std::size_t v = 0; v < spec.peek_values; ++v) p.values.push_back("v" + std::to_string(v));
    p.C = Matrix(n, spec.peek_values);
    for (std::size_t x = 0; x < n; ++x) random_row(p.C.row(x), rng, 0.0);
    b.peek = std::move(p);
  }
  for (std::size_t g = 0; g < spec.gap_dists; ++g) {
    GapDist dist{"g" + std::to_string(g), {}};
    std::vector<double> probs(spec.max_gap + 1);
    random_row(probs, rng, 0.3);
    for (std::size_t len = 0; len <= spec.max_gap; ++len) {
      if (probs[len] > 0.0) dist.mass.emplace_back(len, probs[len]);
    }
    double total = 0.0;
    for (auto& [len, p] : dist.mass) total += p;
    for (auto& [len, p] : dist.mass) p /= total;
    b.gaps.push_back(std::move(dist));
  }
  return b;
}

std::vector<TraceItem> random_trace(SplitMix64& rng, const ModelBundle& bundle,
                                    std::size_t items, std::size_t max_total_gap,
                                    bool peeks) {
  std::vector<TraceItem> trace;
  std::size_t gap_budget = max_total_gap;
  for (std::size_t i = 0; i < items; ++i) {
    const double u = rng.uniform();
    if (u < 0.25 && !bundle.gaps.empty()) {
      const std::size_t g = pick(rng, bundle.gaps.size());
      const std::size_t len = bundle.gaps[g].max_length();
      if (len <= gap_budget) {
        gap_budget -= len;
        trace.push_back(TraceItem::gap(g));
        if (peeks && bundle.peek && rng.uniform() < 0.7) {
          trace.push_back(TraceItem::peek(pick(rng, bundle.peek->values.size())));
        }
        continue;
      }
    }
    trace.push_back(TraceItem::event(pick(rng, bundle.alphabet().size())));
  }
  return trace;
}

// Random models whose exact unfolding is finite: every A row is the same
// distribution, the monitor target depends only on the symbol, and peeks read
// a deterministic function of the hidden state. Beliefs then depend only on a
// bounded suffix of the trace as long as gaps have no zero-length mass.
ModelBundle finite_unfolding_model(SplitMix64& rng) {
  RandomModelSpec spec;
  spec.hidden = 2 + rng() % 2;
  spec.monitor = 2 + rng() % 2;
  spec.symbols = 2 + rng() % 2;
  spec.max_gap = 3;
  auto b = random_model(rng, spec);
  const std::size_t n = b.hmm.num_states();
  const std::size_t k = b.hmm.alphabet.size();
  for (std::size_t x = 1; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) b.hmm.A(x, y) = b.hmm.A(0, y);
  }
  for (std::size_t o = 0; o < k; ++o) {
    const auto target = static_cast<std::uint32_t>(rng() % b.dfsm.states.size());
    for (std::size_t m = 0; m < b.dfsm.states.size(); ++m) b.dfsm.delta[m * k + o] = target;
  }
  b.dfsm.absorbing_violations = false;
  // A zero-length component would mix the old belief back in after each gap.
  for (auto& g : b.gaps) {
    for (auto& [len, p] : g.mass) ++len;
  }
  if (b.peek) {
    auto& c = b.peek->C;
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t v = rng() % c.cols();
      for (std::size_t w = 0; w < c.cols(); ++w) c(x, w) = w == v ? 1.0 : 0.0;
    }
  }
  validate_model(b);
  return b;
}

ModelBundle phase_model(SplitMix64& rng, const RandomModelSpec& spec, std::size_t phases) {
  auto b = random_model(rng, spec);
  const std::size_t n = spec.hidden;
  Matrix base(phases, n);
  for (std::size_t r = 0; r < phases; ++r) random_row(base.row(r), rng, spec.sparsity);
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<double> w(phases);
    random_row(w, rng, 0.0);
    for (std::size_t y = 0; y < n; ++y) {
      double v = 0.0;
      for (std::size_t r = 0; r < phases; ++r) v += w[r] * base(r, y);
      b.hmm.A(x, y) = v;
    }
  }
  return b;
}

ModelBundle bench_fixture(std::uint64_t seed) {
  SplitMix64 rng(seed);
  RandomModelSpec spec;
  spec.hidden = 16;
  spec.monitor = 4;
  spec.symbols = 8;
  spec.peek = false;
  spec.gap_dists = 1;
  spec.max_gap = 4;
  spec.sparsity = 0.5;
  spec.violations = false;
  return phase_model(rng, spec, 2);
}

double max_cell_error(const BeliefState& a, const BeliefState& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.alpha.size(); ++i) {
    worst = std::max(worst, std::abs(a.alpha.flat()[i] - b.alpha.flat()[i]));
  }
  return worst;
}

}  // namespace gapmon::testing
