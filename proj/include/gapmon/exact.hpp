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

#include <span>
#include <vector>

#include "gapmon/kernels.hpp"
#include "gapmon/model.hpp"

namespace gapmon {

/// Belief after an evidence-bearing update together with Pr(observation).
struct BeliefStep {
  BeliefState belief;
  double likelihood;
};

BeliefState init_belief(const Hmm& hmm, const Dfsm& dfsm);

/// Forward update on one observed event. Throws ImpossibleObservation when
/// the event has probability zero.
BeliefStep observe_event(const Hmm& hmm, const Dfsm& dfsm,
                         const BeliefState& belief, std::size_t symbol,
                         Exec exec = Exec::kSerial);

/// One missed event, marginalized over the unseen symbol. Mass-preserving.
BeliefState gap_step(const Hmm& hmm, const Dfsm& dfsm, const BeliefState& belief,
                     Exec exec = Exec::kSerial);

/// Mixture over the gap's length distribution of repeated gap_step.
BeliefState observe_gap(const Hmm& hmm, const Dfsm& dfsm,
                        const BeliefState& belief, const GapDist& gap,
                        Exec exec = Exec::kSerial);

BeliefStep observe_peek(const PeekModel& peek, const BeliefState& belief,
                        std::size_t value);

enum class OnImpossible { kError, kUniformReset };

struct ExactOptions {
  OnImpossible on_impossible = OnImpossible::kError;
  Exec exec = Exec::kSerial;
  /// Keep the full belief matrix of every step (tests, small traces).
  bool keep_beliefs = false;
};

struct ExactStepReport {
  VerdictProbs verdicts;
  std::vector<double> monitor_marginal;
  double log_likelihood = 0.0;  // cumulative over events and peeks
  bool reset = false;
};

struct ExactRun {
  std::vector<ExactStepReport> steps;
  std::vector<BeliefState> beliefs;  // only with keep_beliefs
  BeliefState final_belief;
  VerdictProbs final_verdicts;
  double log_likelihood = 0.0;
};

/// Applies the update matching one trace item; gaps contribute no likelihood.
BeliefStep apply_item(const ModelBundle& bundle, const BeliefState& belief,
                      const TraceItem& item, Exec exec = Exec::kSerial);

ExactRun run_exact(const ModelBundle& bundle, std::span<const TraceItem> trace,
                   const ExactOptions& options = {});

}  // namespace gapmon
