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

#include <cstdint>
#include <vector>

#include "gapmon/model.hpp"
#include "gapmon/rng.hpp"

namespace gapmon::testing {

/// M1/D1: alphabet {a,c}; x0 always emits a, x1 always emits c; transitions
/// uniform; pi = [1,0]. D1 tracks "every a is eventually followed by c"
/// (s1 = obligation pending). Peek {p0,p1} reads the hidden state exactly.
/// Gap g1 is a point mass at length 1, g12 uniform over {1,2}.
ModelBundle m1_d1();

/// D1 over {a,b,c,d} with a 2-state HMM where b and d get small emission mass.
ModelBundle d1_four_symbols();

struct RandomModelSpec {
  std::size_t hidden = 3;
  std::size_t monitor = 3;
  std::size_t symbols = 3;
  bool peek = true;
  std::size_t peek_values = 2;
  std::size_t gap_dists = 2;
  std::size_t max_gap = 3;
  /// Probability that an A or B entry is forced to zero (rows keep >= 1 entry).
  double sparsity = 0.0;
  /// Allow Violated verdicts (absorbing).
  bool violations = true;
};

ModelBundle random_model(SplitMix64& rng, const RandomModelSpec& spec);

/// Random trace over the bundle's labels; total maximum gap length across
/// all gaps stays within `max_total_gap`. Traces are not guaranteed possible.
std::vector<TraceItem> random_trace(SplitMix64& rng, const ModelBundle& bundle,
                                    std::size_t items, std::size_t max_total_gap,
                                    bool peeks);

/// Random model (2-3 states, monitor states, symbols) whose exact unfolding is
/// finite: identical A rows, symbol-determined monitor targets, 0/1 peeks and
/// gaps without zero-length mass.
ModelBundle finite_unfolding_model(SplitMix64& rng);

/// Random model whose transition rows are mixtures of `phases` shared
/// distributions, so hidden predictions live on a low-dimensional face of
/// the simplex and precomputed tables stay small.
ModelBundle phase_model(SplitMix64& rng, const RandomModelSpec& spec, std::size_t phases);

/// 16 hidden states, 8 symbols, 4 monitor states, two-phase transitions.
ModelBundle bench_fixture(std::uint64_t seed = 16);

double max_cell_error(const BeliefState& a, const BeliefState& b);

}  // namespace gapmon::testing
