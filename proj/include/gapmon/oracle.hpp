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
#include "gapmon/trace.hpp"

namespace gapmon {

/// How a simulated monitor switches observation off.
struct GapPolicy {
  enum class Kind { kNone, kDutyCycle, kBernoulli };

  Kind kind = Kind::kNone;
  std::size_t on_len = 1;   // duty cycle
  std::size_t off_len = 1;  // duty cycle
  double p_off = 0.0;       // bernoulli, per event
  std::string dist_id;      // bernoulli: gap distribution each gap declares

  static GapPolicy none() { return {}; }
  static GapPolicy duty_cycle(std::size_t on, std::size_t off);
  static GapPolicy bernoulli(double p_off, std::string dist_id);
  /// "none" | "dutycycle:<on>:<off>" | "bernoulli:<p_off>:<dist-id>"
  static GapPolicy parse(std::string_view spec);
};

struct GroundTruth {
  std::vector<std::uint32_t> hidden;    // x_1..x_T
  std::vector<std::size_t> symbols;     // o_1..o_T
  std::vector<std::uint32_t> monitor;   // m_0..m_T
  Verdict verdict = Verdict::kAccepting;
  std::vector<NamedItem> observed;
  /// Distributions referenced by the observed trace but absent from the bundle.
  std::vector<GapDist> declared;
};

/// Samples a run of length T from the model and applies the gap policy.
/// DutyCycle gaps declare `point:<L>` for their true length; Bernoulli gaps
/// declare the configured distribution. With a peek channel, one peek drawn
/// from the hidden state at the end of each gap follows the gap.
GroundTruth simulate(const ModelBundle& bundle, std::size_t length,
                     const GapPolicy& policy, std::uint64_t seed);

/// Number of completed traces the oracle would enumerate.
double oracle_enumerations(const ModelBundle& bundle, std::span<const TraceItem> trace);

/// Exhaustive marginalization over every gap filling; independent of the
/// estimator code paths. Throws BudgetExceeded above `budget` enumerations
/// and ImpossibleObservation when the trace has probability zero.
BeliefState brute_force_posterior(const ModelBundle& bundle,
                                  std::span<const TraceItem> trace,
                                  double budget = 1e6);

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_predicted = 0.0;
  double observed_frequency = 0.0;
};

struct Metrics {
  std::size_t cases = 0;
  double brier = 0.0;
  std::vector<CalibrationBin> calibration;  // 10 equal-width bins
  std::optional<double> rmse;               // on non-accepting probability
};

/// Brier score, pooled one-vs-rest calibration over all verdict labels, and
/// optionally RMSE of the non-accepting probability against `reference`.
Metrics score(std::span<const VerdictProbs> predictions, std::span<const Verdict> truths,
              std::span<const VerdictProbs> reference = {});

}  // namespace gapmon
