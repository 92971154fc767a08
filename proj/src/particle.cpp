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

#include "gapmon/particle.hpp"

#include <cmath>

#include "gapmon/errors.hpp"
#include "gapmon/rng.hpp"

namespace gapmon {

namespace {

// Stream ids separate the resampling offset from per-particle draws, which
// use the particle index as the stream key.
constexpr std::uint64_t kResampleStream = ~std::uint64_t{0};

ParticleView view(ParticleSet& ps) { return {ps.hidden, ps.monitor}; }

}  // namespace

double effective_sample_size(const ParticleSet& ps) {
  double sq = 0.0;
  for (double w : ps.weights) sq += w * w;
  return sq > 0.0 ? 1.0 / sq : 0.0;
}

std::vector<std::size_t> systematic_resample(ParticleSet& ps, double u0) {
  const std::size_t n = ps.size();
  std::vector<std::size_t> ancestors(n);
  const double step = 1.0 / static_cast<double>(n);
  double cumulative = ps.weights.empty() ? 0.0 : ps.weights[0];
  std::size_t i = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double point = u0 + static_cast<double>(k) * step;
    while (point >= cumulative && i + 1 < n) cumulative += ps.weights[++i];
    ancestors[k] = i;
  }
  std::vector<std::uint32_t> hidden(n), monitor(n);
  for (std::size_t k = 0; k < n; ++k) {
    hidden[k] = ps.hidden[ancestors[k]];
    monitor[k] = ps.monitor[ancestors[k]];
  }
  ps.hidden = std::move(hidden);
  ps.monitor = std::move(monitor);
  std::fill(ps.weights.begin(), ps.weights.end(), step);
  return ancestors;
}

bool resample_if_needed(ParticleSet& ps, double threshold_ratio) {
  const double n = static_cast<double>(ps.size());
  if (!(effective_sample_size(ps) < threshold_ratio * n)) return false;
  auto rng = SplitMix64::keyed(ps.seed, ps.step++, kResampleStream);
  systematic_resample(ps, rng.uniform() / n);
  return true;
}

VerdictProbs pf_estimate(const ParticleSet& ps, const Dfsm& dfsm) {
  VerdictProbs out;
  for (std::size_t i = 0; i < ps.size(); ++i) out[dfsm.verdict[ps.monitor[i]]] += ps.weights[i];
  // Divide by the class total so a set concentrated on one class reports
  // exactly 1 despite round-off in the weights.
  const double total = out.sum();
  if (total > 0.0) {
    for (double& p : out.p) p /= total;
  }
  return out;
}

ParticleFilter::ParticleFilter(const ModelBundle& bundle, double ess_ratio, Exec exec)
    : bundle_(bundle),
      ess_ratio_(ess_ratio),
      exec_(exec),
      tables_(build_sampling_tables(bundle.hmm.A, bundle.hmm.B)) {
  if (!(ess_ratio >= 0.0 && ess_ratio <= 1.0)) {
    throw InvalidArgument("ess ratio must be in [0,1]");
  }
  double acc = 0.0;
  for (double p : bundle.hmm.pi) cum_pi_.push_back(acc += p);
}

ParticleSet ParticleFilter::init(std::size_t count, std::uint64_t seed) const {
  if (count == 0) throw InvalidArgument("particle count must be positive");
  ParticleSet ps;
  ps.seed = seed;
  ps.hidden.resize(count);
  ps.monitor.assign(count, bundle_.dfsm.initial);
  ps.weights.assign(count, 1.0 / static_cast<double>(count));
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = SplitMix64::keyed(seed, ps.step, i);
    ps.hidden[i] = static_cast<std::uint32_t>(
        kernels::sample_cumulative(cum_pi_, rng.uniform() * cum_pi_.back()));
  }
  ++ps.step;
  return ps;
}

PfStepInfo ParticleFilter::reweight(ParticleSet& ps, std::span<const double> multiplier,
                                    const char* what) const {
  PfStepInfo info;
  double total = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ps.weights[i] *= multiplier[i];
    total += ps.weights[i];
  }
  if (!(total > 0.0)) {
    throw ImpossibleObservation(std::string(what) + " has zero weight on every particle");
  }
  info.evidence = total;
  for (double& w : ps.weights) w /= total;
  info.ess = effective_sample_size(ps);
  info.resampled = resample_if_needed(ps, ess_ratio_);
  return info;
}

PfStepInfo ParticleFilter::step_event(ParticleSet& ps, std::size_t symbol) const {
  std::vector<double> multiplier(ps.size());
  const DeltaView delta{bundle_.dfsm.delta, bundle_.alphabet().size()};
  if (exec_ == Exec::kParallel) {
    kernels::omp::advance_event(tables_, delta, symbol, view(ps), multiplier, ps.seed, ps.step);
  } else {
    kernels::serial::advance_event(tables_, delta, symbol, view(ps), multiplier, ps.seed, ps.step);
  }
  ++ps.step;
  return reweight(ps, multiplier, "event");
}

PfStepInfo ParticleFilter::step_gap(ParticleSet& ps, const GapDist& gap) const {
  std::vector<double> cum;
  std::vector<std::size_t> lengths;
  double acc = 0.0;
  for (const auto& [len, p] : gap.mass) {
    cum.push_back(acc += p);
    lengths.push_back(len);
  }
  const DeltaView delta{bundle_.dfsm.delta, bundle_.alphabet().size()};
  if (exec_ == Exec::kParallel) {
    kernels::omp::advance_gap(tables_, delta, cum, lengths, view(ps), ps.seed, ps.step);
  } else {
    kernels::serial::advance_gap(tables_, delta, cum, lengths, view(ps), ps.seed, ps.step);
  }
  ++ps.step;
  return {1.0, effective_sample_size(ps), false};
}

PfStepInfo ParticleFilter::step_peek(ParticleSet& ps, std::size_t value) const {
  if (!bundle_.peek) throw InvalidArgument("model has no peek channel");
  std::vector<double> multiplier(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) multiplier[i] = bundle_.peek->C(ps.hidden[i], value);
  return reweight(ps, multiplier, "peek");
}

PfStepInfo ParticleFilter::step(ParticleSet& ps, const TraceItem& item) const {
  switch (item.kind) {
    case ItemKind::kEvent: return step_event(ps, item.index);
    case ItemKind::kGap: return step_gap(ps, bundle_.gaps.at(item.index));
    case ItemKind::kPeek: return step_peek(ps, item.index);
  }
  throw InvalidArgument("unknown trace item kind");
}

PfRun run_pf(const ModelBundle& bundle, std::span<const TraceItem> trace,
             const PfOptions& options) {
  ParticleFilter filter(bundle, options.ess_ratio, options.exec);
  PfRun run;
  run.final_set = filter.init(options.particles, options.seed);
  run.steps.reserve(trace.size());
  for (const auto& item : trace) {
    const auto info = filter.step(run.final_set, item);
    if (item.kind != ItemKind::kGap) run.log_likelihood += std::log(info.evidence);
    run.resample_count += info.resampled ? 1 : 0;
    run.steps.push_back({pf_estimate(run.final_set, bundle.dfsm), run.log_likelihood,
                         info.ess, info.resampled});
  }
  run.final_verdicts = pf_estimate(run.final_set, bundle.dfsm);
  return run;
}

}  // namespace gapmon
