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

#include "gapmon/exact.hpp"

#include <cmath>

#include "gapmon/errors.hpp"

namespace gapmon {

namespace {

DeltaView delta_view(const Dfsm& dfsm) {
  return {dfsm.delta, dfsm.alphabet.size()};
}

void predict(const Matrix& A, const Matrix& alpha, Matrix& out, Exec exec) {
  if (exec == Exec::kParallel) {
    kernels::omp::predict(A, alpha, out);
  } else {
    kernels::serial::predict(A, alpha, out);
  }
}

void scale(Matrix& m, double factor) {
  for (double& v : m.flat()) v *= factor;
}

// Keeps the monitor marginal (advanced by `symbol` when given) and spreads
// each monitor state's mass uniformly over hidden states.
BeliefState uniform_reset(const Dfsm& dfsm, const BeliefState& belief,
                          std::optional<std::size_t> symbol) {
  const auto marginal = monitor_marginal(belief);
  const std::size_t n = belief.num_hidden();
  BeliefState out{Matrix(n, belief.num_monitor())};
  for (std::size_t m = 0; m < marginal.size(); ++m) {
    const std::size_t to = symbol ? dfsm.step(static_cast<std::uint32_t>(m), *symbol) : m;
    for (std::size_t x = 0; x < n; ++x) out.alpha(x, to) += marginal[m] / static_cast<double>(n);
  }
  return out;
}

}  // namespace

BeliefState init_belief(const Hmm& hmm, const Dfsm& dfsm) {
  BeliefState b{Matrix(hmm.num_states(), dfsm.num_states())};
  for (std::size_t x = 0; x < hmm.num_states(); ++x) b.alpha(x, dfsm.initial) = hmm.pi[x];
  return b;
}

BeliefStep observe_event(const Hmm& hmm, const Dfsm& dfsm,
                         const BeliefState& belief, std::size_t symbol,
                         Exec exec) {
  Matrix pred(belief.num_hidden(), belief.num_monitor());
  predict(hmm.A, belief.alpha, pred, exec);
  BeliefStep out{BeliefState{Matrix(belief.num_hidden(), belief.num_monitor())}, 0.0};
  if (exec == Exec::kParallel) {
    kernels::omp::emit_event(pred, hmm.B, delta_view(dfsm), symbol, out.belief.alpha);
  } else {
    kernels::serial::emit_event(pred, hmm.B, delta_view(dfsm), symbol, out.belief.alpha);
  }
  out.likelihood = out.belief.alpha.sum();
  if (!(out.likelihood > 0.0)) {
    throw ImpossibleObservation("event '" + hmm.alphabet.symbols[symbol] +
                                "' has probability zero under the model");
  }
  scale(out.belief.alpha, 1.0 / out.likelihood);
  return out;
}

BeliefState gap_step(const Hmm& hmm, const Dfsm& dfsm, const BeliefState& belief,
                     Exec exec) {
  Matrix pred(belief.num_hidden(), belief.num_monitor());
  predict(hmm.A, belief.alpha, pred, exec);
  BeliefState out{Matrix(belief.num_hidden(), belief.num_monitor())};
  if (exec == Exec::kParallel) {
    kernels::omp::emit_any(pred, hmm.B, delta_view(dfsm), out.alpha);
  } else {
    kernels::serial::emit_any(pred, hmm.B, delta_view(dfsm), out.alpha);
  }
  return out;
}

BeliefState observe_gap(const Hmm& hmm, const Dfsm& dfsm,
                        const BeliefState& belief, const GapDist& gap,
                        Exec exec) {
  BeliefState acc{Matrix(belief.num_hidden(), belief.num_monitor())};
  BeliefState cur = belief;
  std::size_t len = 0;
  for (const auto& [target, prob] : gap.mass) {
    while (len < target) {
      cur = gap_step(hmm, dfsm, cur, exec);
      ++len;
    }
    if (prob == 0.0) continue;
    auto dst = acc.alpha.flat();
    const auto src = cur.alpha.flat();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += prob * src[i];
  }
  return acc;
}

BeliefStep observe_peek(const PeekModel& peek, const BeliefState& belief,
                        std::size_t value) {
  BeliefStep out{belief, 0.0};
  for (std::size_t x = 0; x < belief.num_hidden(); ++x) {
    const double c = peek.C(x, value);
    for (double& v : out.belief.alpha.row(x)) v *= c;
  }
  out.likelihood = out.belief.alpha.sum();
  if (!(out.likelihood > 0.0)) {
    throw ImpossibleObservation("peek '" + peek.values[value] +
                                "' has probability zero under the current belief");
  }
  scale(out.belief.alpha, 1.0 / out.likelihood);
  return out;
}

BeliefStep apply_item(const ModelBundle& bundle, const BeliefState& belief,
                      const TraceItem& item, Exec exec) {
  switch (item.kind) {
    case ItemKind::kEvent:
      return observe_event(bundle.hmm, bundle.dfsm, belief, item.index, exec);
    case ItemKind::kGap:
      return {observe_gap(bundle.hmm, bundle.dfsm, belief, bundle.gaps.at(item.index), exec),
              1.0};
    case ItemKind::kPeek:
      if (!bundle.peek) throw InvalidArgument("trace has peeks but model has no peek channel");
      return observe_peek(*bundle.peek, belief, item.index);
  }
  throw InvalidArgument("unknown trace item kind");
}

ExactRun run_exact(const ModelBundle& bundle, std::span<const TraceItem> trace,
                   const ExactOptions& options) {
  ExactRun run;
  BeliefState belief = init_belief(bundle.hmm, bundle.dfsm);
  double log_lik = 0.0;
  run.steps.reserve(trace.size());
  for (const auto& item : trace) {
    bool reset = false;
    try {
      BeliefStep step = apply_item(bundle, belief, item, options.exec);
      if (item.kind != ItemKind::kGap) log_lik += std::log(step.likelihood);
      belief = std::move(step.belief);
    } catch (const ImpossibleObservation&) {
      if (options.on_impossible == OnImpossible::kError) throw;
      std::optional<std::size_t> symbol;
      if (item.kind == ItemKind::kEvent) symbol = item.index;
      belief = uniform_reset(bundle.dfsm, belief, symbol);
      reset = true;
    }
    ExactStepReport rec;
    rec.verdicts = verdict_probabilities(belief, bundle.dfsm);
    rec.monitor_marginal = monitor_marginal(belief);
    rec.log_likelihood = log_lik;
    rec.reset = reset;
    run.steps.push_back(std::move(rec));
    if (options.keep_beliefs) run.beliefs.push_back(belief);
  }
  run.final_verdicts = verdict_probabilities(belief, bundle.dfsm);
  run.final_belief = std::move(belief);
  run.log_likelihood = log_lik;
  return run;
}

}  // namespace gapmon
