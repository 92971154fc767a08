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

#include "gapmon/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "gapmon/errors.hpp"

namespace gapmon {

namespace {

template <typename Range>
std::optional<std::size_t> find_name(const Range& names, std::string_view name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

std::string indexed(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

void check_names(const std::vector<std::string>& names, const std::string& loc) {
  if (names.empty()) throw InvalidModel(loc, "must not be empty");
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) throw InvalidModel(indexed(loc, i), "empty name");
    if (!seen.insert(names[i]).second) {
      throw InvalidModel(indexed(loc, i), "duplicate name '" + names[i] + "'");
    }
  }
}

void check_distribution(std::span<const double> row, const std::string& loc) {
  double sum = 0.0;
  for (double v : row) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidModel(loc, "entry " + std::to_string(v) + " outside [0,1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    throw InvalidModel(loc, "sums to " + std::to_string(sum));
  }
}

void check_stochastic(const Matrix& m, std::size_t rows, std::size_t cols,
                      const std::string& loc) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InvalidModel(loc, "expected " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " matrix, got " +
                                std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    check_distribution(m.row(r), loc + ".row[" + std::to_string(r) + "]");
  }
}

}  // namespace

std::optional<std::size_t> Alphabet::index_of(std::string_view name) const {
  return find_name(symbols, name);
}

std::optional<std::size_t> PeekModel::index_of(std::string_view name) const {
  return find_name(values, name);
}

std::optional<std::size_t> Dfsm::index_of(std::string_view name) const {
  return find_name(states, name);
}

std::optional<std::size_t> ModelBundle::gap_index(std::string_view id) const {
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (gaps[i].id == id) return i;
  }
  return std::nullopt;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kAccepting: return "accepting";
    case Verdict::kPending: return "pending";
    case Verdict::kViolated: return "violated";
  }
  return "?";
}

std::optional<Verdict> parse_verdict(std::string_view s) {
  for (Verdict v : kAllVerdicts) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::string_view to_string(ItemKind k) {
  switch (k) {
    case ItemKind::kEvent: return "evt";
    case ItemKind::kGap: return "gap";
    case ItemKind::kPeek: return "peek";
  }
  return "?";
}

GapDist GapDist::point(std::string id, std::size_t length) {
  return GapDist{std::move(id), {{length, 1.0}}};
}

GapDist GapDist::geometric(std::string id, double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw InvalidArgument("geometric gap parameter must be in (0,1], got " +
                          std::to_string(p));
  }
  GapDist g{std::move(id), {}};
  double cumulative = 0.0;
  double term = p;
  for (std::size_t len = 0;; ++len) {
    g.mass.emplace_back(len, term);
    cumulative += term;
    if (cumulative >= 1.0 - 1e-9) break;
    term *= (1.0 - p);
  }
  for (auto& [len, prob] : g.mass) prob /= cumulative;
  return g;
}

void validate_gap_dist(const GapDist& g, const std::string& loc) {
  if (g.id.empty()) throw InvalidModel(loc + ".id", "empty id");
  if (g.mass.empty()) throw InvalidModel(loc + ".mass", "empty support");
  double sum = 0.0;
  for (std::size_t i = 0; i < g.mass.size(); ++i) {
    const auto& [len, prob] = g.mass[i];
    if (i > 0 && len <= g.mass[i - 1].first) {
      throw InvalidModel(indexed(loc + ".mass", i),
                         "lengths must be strictly increasing");
    }
    if (!(prob >= 0.0 && prob <= 1.0)) {
      throw InvalidModel(indexed(loc + ".mass", i),
                         "probability " + std::to_string(prob) + " outside [0,1]");
    }
    sum += prob;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    throw InvalidModel(loc + ".mass", "sums to " + std::to_string(sum));
  }
}

void validate_model(const Hmm& hmm, const Dfsm& dfsm, const PeekModel* peek,
                    std::span<const GapDist> gaps) {
  check_names(hmm.alphabet.symbols, "alphabet");
  const std::size_t n = hmm.num_states();
  const std::size_t k = hmm.alphabet.size();
  if (n == 0) throw InvalidModel("hmm.pi", "no hidden states");
  check_distribution(hmm.pi, "hmm.pi");
  check_stochastic(hmm.A, n, n, "hmm.A");
  check_stochastic(hmm.B, n, k, "hmm.B");

  check_names(dfsm.states, "dfsm.states");
  if (dfsm.alphabet != hmm.alphabet) {
    throw InvalidModel("dfsm.alphabet", "differs from the hmm alphabet");
  }
  const std::size_t q = dfsm.num_states();
  if (dfsm.initial >= q) throw InvalidModel("dfsm.initial", "out of range");
  if (dfsm.verdict.size() != q) {
    throw InvalidModel("dfsm.verdict", "expected one verdict per state");
  }
  if (dfsm.delta.size() != q * k) {
    throw InvalidModel("dfsm.delta", "expected |states| x |alphabet| cells");
  }
  for (std::size_t m = 0; m < q; ++m) {
    for (std::size_t o = 0; o < k; ++o) {
      const auto target = dfsm.delta[m * k + o];
      const std::string loc = "dfsm.delta[" + std::to_string(m) + "][" +
                              hmm.alphabet.symbols[o] + "]";
      if (target == Dfsm::kNoState) throw InvalidModel(loc, "missing transition");
      if (target >= q) throw InvalidModel(loc, "target state out of range");
      if (dfsm.absorbing_violations && dfsm.verdict[m] == Verdict::kViolated &&
          dfsm.verdict[target] != Verdict::kViolated) {
        throw InvalidModel(loc, "violated state leaves the violated set");
      }
    }
  }

  if (peek != nullptr) {
    check_names(peek->values, "peek.values");
    check_stochastic(peek->C, n, peek->values.size(), "peek.C");
  }

  std::set<std::string_view> ids;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const std::string loc = indexed("gap_dists", i);
    validate_gap_dist(gaps[i], loc);
    if (!ids.insert(gaps[i].id).second) {
      throw InvalidModel(loc + ".id", "duplicate id '" + gaps[i].id + "'");
    }
  }
}

void validate_model(const ModelBundle& bundle) {
  validate_model(bundle.hmm, bundle.dfsm,
                 bundle.peek ? &*bundle.peek : nullptr, bundle.gaps);
}

std::uint32_t dfsm_step(const Dfsm& dfsm, std::uint32_t m, std::size_t symbol) {
  return dfsm.step(m, symbol);
}

DfsmRun run_dfsm(const Dfsm& dfsm, std::span<const std::size_t> symbols) {
  std::uint32_t m = dfsm.initial;
  for (std::size_t o : symbols) m = dfsm.step(m, o);
  return {m, dfsm.verdict[m]};
}

VerdictProbs verdict_probabilities(const BeliefState& belief, const Dfsm& dfsm) {
  VerdictProbs out;
  const auto marginal = monitor_marginal(belief);
  for (std::size_t m = 0; m < marginal.size(); ++m) {
    out[dfsm.verdict[m]] += marginal[m];
  }
  return out;
}

std::vector<double> monitor_marginal(const BeliefState& belief) {
  std::vector<double> out(belief.num_monitor(), 0.0);
  for (std::size_t x = 0; x < belief.num_hidden(); ++x) {
    const auto row = belief.alpha.row(x);
    for (std::size_t m = 0; m < row.size(); ++m) out[m] += row[m];
  }
  return out;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace gapmon
