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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gapmon/model.hpp"

namespace gapmon {

/// Entries marked true are pinned to exactly zero during learning.
struct ZeroMask {
  std::vector<std::vector<bool>> A;  // n x n, empty = no pins
  std::vector<std::vector<bool>> B;  // n x k, empty = no pins
};

struct LearnOptions {
  std::size_t n_states = 1;
  std::size_t max_iters = 500;
  double tol = 1e-6;  // nats
  std::uint64_t seed = 0;
  std::size_t restarts = 5;
  std::optional<ZeroMask> zero_mask;
  bool parallel_restarts = true;
};

struct LearnResult {
  Hmm hmm;
  double log_likelihood = 0.0;
  std::size_t best_restart = 0;
  /// Training log-likelihood per iteration, one vector per restart.
  std::vector<std::vector<double>> histories;
  std::vector<std::string> warnings;
};

/// Baum-Welch over complete traces; keeps the restart with the highest final
/// log-likelihood (lowest index wins ties).
LearnResult baum_welch(std::span<const std::vector<std::size_t>> traces,
                       const Alphabet& alphabet, const LearnOptions& options);

/// log Pr(trace | hmm) via the scaled forward pass. Throws
/// ImpossibleObservation when some prefix has probability zero.
double log_likelihood(const Hmm& hmm, std::span<const std::size_t> trace);

/// Per-step scaling constants c_t = Pr(o_t | o_1..o_{t-1}).
std::vector<double> forward_scales(const Hmm& hmm, std::span<const std::size_t> trace);

/// Parses a mask document {"A": [[bool]], "B": [[bool]]}.
ZeroMask parse_zero_mask(std::string_view text);

}  // namespace gapmon
