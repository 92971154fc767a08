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
#include <span>
#include <vector>

#include "gapmon/kernels.hpp"
#include "gapmon/model.hpp"

namespace gapmon {

/// Weighted particles over (hidden state, monitor state).
///
/// Randomness is drawn from SplitMix64::keyed(seed, step, particle), and
/// `step` advances once per random operation, so a run is a pure function of
/// the seed regardless of Exec mode.
struct ParticleSet {
  std::vector<std::uint32_t> hidden;
  std::vector<std::uint32_t> monitor;
  std::vector<double> weights;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;

  std::size_t size() const noexcept { return weights.size(); }
};

struct PfStepInfo {
  double evidence = 1.0;  // weighted mean multiplier, estimates Pr(observation)
  double ess = 0.0;       // before any resampling
  bool resampled = false;
};

double effective_sample_size(const ParticleSet& ps);

/// Systematic resampling with offset u0 in [0, 1/N); returns the ancestor
/// index of every new particle and resets weights to 1/N.
std::vector<std::size_t> systematic_resample(ParticleSet& ps, double u0);

/// Resamples when ESS < ratio * N, drawing u0 from the set's stream.
bool resample_if_needed(ParticleSet& ps, double threshold_ratio);

VerdictProbs pf_estimate(const ParticleSet& ps, const Dfsm& dfsm);

/// Sequential-importance-resampling filter bound to one model.
class ParticleFilter {
 public:
  ParticleFilter(const ModelBundle& bundle, double ess_ratio = 0.5,
                 Exec exec = Exec::kSerial);

  /// Every particle draws x ~ pi and starts at the initial monitor state.
  ParticleSet init(std::size_t count, std::uint64_t seed) const;

  /// Proposal q(x') ∝ A(x,x') B(x',o); weight multiplier sum_x' A(x,x') B(x',o).
  PfStepInfo step_event(ParticleSet& ps, std::size_t symbol) const;
  /// Prior simulation of an independently drawn gap length per particle.
  PfStepInfo step_gap(ParticleSet& ps, const GapDist& gap) const;
  PfStepInfo step_peek(ParticleSet& ps, std::size_t value) const;
  PfStepInfo step(ParticleSet& ps, const TraceItem& item) const;

  const ModelBundle& bundle() const noexcept { return bundle_; }
  double ess_ratio() const noexcept { return ess_ratio_; }

 private:
  PfStepInfo reweight(ParticleSet& ps, std::span<const double> multiplier,
                      const char* what) const;

  const ModelBundle& bundle_;
  double ess_ratio_;
  Exec exec_;
  SamplingTables tables_;
  std::vector<double> cum_pi_;
};

struct PfOptions {
  std::size_t particles = 10000;
  std::uint64_t seed = 0;
  double ess_ratio = 0.5;
  Exec exec = Exec::kSerial;
};

struct PfStepReport {
  VerdictProbs verdicts;
  double log_likelihood = 0.0;  // cumulative estimate
  double ess = 0.0;
  bool resampled = false;
};

struct PfRun {
  std::vector<PfStepReport> steps;
  VerdictProbs final_verdicts;
  double log_likelihood = 0.0;
  std::size_t resample_count = 0;
  ParticleSet final_set;
};

PfRun run_pf(const ModelBundle& bundle, std::span<const TraceItem> trace,
             const PfOptions& options);

}  // namespace gapmon
