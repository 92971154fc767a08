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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gapmon/matrix.hpp"

namespace gapmon {

/// Tolerance used when checking that probability vectors sum to one.
inline constexpr double kProbabilityTolerance = 1e-9;

/// Ordered event vocabulary. Position fixes the column index of a symbol in
/// every matrix that is indexed by symbol.
struct Alphabet {
  std::vector<std::string> symbols;

  std::size_t size() const noexcept { return symbols.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  friend bool operator==(const Alphabet&, const Alphabet&) = default;
};

/// Hidden-state program model.
///
/// `pi` is the distribution of a silent state at time 0 that emits nothing;
/// every emitted symbol comes from the destination state of a transition, so
/// the first observed event is drawn from B[x1] with x1 ~ pi * A.
struct Hmm {
  Alphabet alphabet;
  std::vector<double> pi;
  Matrix A;  // n x n, A(i, j) = Pr(j at t+1 | i at t)
  Matrix B;  // n x |alphabet|, B(j, o) = Pr(emit o | j)

  std::size_t num_states() const noexcept { return pi.size(); }

  friend bool operator==(const Hmm&, const Hmm&) = default;
};

/// Cheap partial observation of the hidden state.
struct PeekModel {
  std::vector<std::string> values;
  Matrix C;  // n x |values|, C(x, v) = Pr(peek reads v | x)

  std::optional<std::size_t> index_of(std::string_view name) const;

  friend bool operator==(const PeekModel&, const PeekModel&) = default;
};

enum class Verdict : std::uint8_t { kAccepting = 0, kPending = 1, kViolated = 2 };

inline constexpr std::array<Verdict, 3> kAllVerdicts = {
    Verdict::kAccepting, Verdict::kPending, Verdict::kViolated};

std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view s);

/// Deterministic monitor with verdict-labelled states.
struct Dfsm {
  /// Marks an unfilled transition cell; only ever present before validation.
  static constexpr std::uint32_t kNoState = 0xffffffffu;

  std::vector<std::string> states;
  Alphabet alphabet;
  std::vector<std::uint32_t> delta;  // |states| x |alphabet|, row-major
  std::uint32_t initial = 0;
  std::vector<Verdict> verdict;
  bool absorbing_violations = false;

  std::size_t num_states() const noexcept { return states.size(); }
  std::uint32_t step(std::uint32_t m, std::size_t symbol) const {
    return delta[m * alphabet.size() + symbol];
  }
  std::optional<std::size_t> index_of(std::string_view name) const;

  friend bool operator==(const Dfsm&, const Dfsm&) = default;
};

/// Finite-support distribution of the number of events missed in one gap.
/// `mass` is sorted by length with distinct lengths.
struct GapDist {
  std::string id;
  std::vector<std::pair<std::size_t, double>> mass;

  std::size_t max_length() const noexcept {
    return mass.empty() ? 0 : mass.back().first;
  }

  static GapDist point(std::string id, std::size_t length);
  /// Pr(l) = p (1-p)^l for l >= 0, truncated at the smallest L whose
  /// cumulative mass reaches 1 - 1e-9 and renormalized.
  static GapDist geometric(std::string id, double p);

  friend bool operator==(const GapDist&, const GapDist&) = default;
};

/// Everything needed to run an estimator.
struct ModelBundle {
  Hmm hmm;
  Dfsm dfsm;
  std::optional<PeekModel> peek;
  std::vector<GapDist> gaps;

  const Alphabet& alphabet() const noexcept { return hmm.alphabet; }
  std::optional<std::size_t> gap_index(std::string_view id) const;

  friend bool operator==(const ModelBundle&, const ModelBundle&) = default;
};

enum class ItemKind : std::uint8_t { kEvent = 0, kGap = 1, kPeek = 2 };

std::string_view to_string(ItemKind k);

/// Trace item resolved against a bundle: `index` is a symbol index, an index
/// into ModelBundle::gaps, or a peek value index depending on `kind`.
struct TraceItem {
  ItemKind kind = ItemKind::kEvent;
  std::size_t index = 0;

  static TraceItem event(std::size_t symbol) { return {ItemKind::kEvent, symbol}; }
  static TraceItem gap(std::size_t dist) { return {ItemKind::kGap, dist}; }
  static TraceItem peek(std::size_t value) { return {ItemKind::kPeek, value}; }

  friend bool operator==(const TraceItem&, const TraceItem&) = default;
};

/// Joint distribution over (hidden state, monitor state).
struct BeliefState {
  Matrix alpha;  // num hidden states x num monitor states

  std::size_t num_hidden() const noexcept { return alpha.rows(); }
  std::size_t num_monitor() const noexcept { return alpha.cols(); }

  friend bool operator==(const BeliefState&, const BeliefState&) = default;
};

struct VerdictProbs {
  std::array<double, 3> p{0.0, 0.0, 0.0};

  double& operator[](Verdict v) { return p[static_cast<std::size_t>(v)]; }
  double operator[](Verdict v) const { return p[static_cast<std::size_t>(v)]; }
  double accepting() const { return p[0]; }
  double pending() const { return p[1]; }
  double violated() const { return p[2]; }
  /// Probability that the property is not (yet) satisfied.
  double non_accepting() const { return p[1] + p[2]; }
  double sum() const { return p[0] + p[1] + p[2]; }

  friend bool operator==(const VerdictProbs&, const VerdictProbs&) = default;
};

/// Throws InvalidModel naming the first violated constraint.
void validate_model(const Hmm& hmm, const Dfsm& dfsm, const PeekModel* peek,
                    std::span<const GapDist> gaps);
void validate_model(const ModelBundle& bundle);
void validate_gap_dist(const GapDist& g, const std::string& locator);

std::uint32_t dfsm_step(const Dfsm& dfsm, std::uint32_t m, std::size_t symbol);

struct DfsmRun {
  std::uint32_t state;
  Verdict verdict;
};

DfsmRun run_dfsm(const Dfsm& dfsm, std::span<const std::size_t> symbols);

VerdictProbs verdict_probabilities(const BeliefState& belief, const Dfsm& dfsm);

/// Marginal distribution over monitor states.
std::vector<double> monitor_marginal(const BeliefState& belief);

/// Shannon entropy in nats of a probability vector.
double entropy(std::span<const double> p);

}  // namespace gapmon
