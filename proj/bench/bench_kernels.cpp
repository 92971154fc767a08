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

// Serial versus OpenMP kernels, and per-event cost of the three estimators.

#include <benchmark/benchmark.h>

#include "gapmon/exact.hpp"
#include "gapmon/kernels.hpp"
#include "gapmon/oracle.hpp"
#include "gapmon/particle.hpp"
#include "gapmon/table.hpp"
#include "gapmon/trace.hpp"
#include "support/fixtures.hpp"

namespace {

using namespace gapmon;

struct KernelInputs {
  Matrix A, B, alpha, pred, out;
  std::vector<std::uint32_t> delta;
  std::size_t k;
};

KernelInputs make_inputs(std::size_t n, std::size_t q, std::size_t k) {
  SplitMix64 rng(n * 1000 + q);
  testing::RandomModelSpec spec;
  spec.hidden = n;
  spec.monitor = q;
  spec.symbols = k;
  spec.peek = false;
  spec.gap_dists = 0;
  spec.violations = false;
  const auto b = testing::random_model(rng, spec);
  KernelInputs in{b.hmm.A, b.hmm.B, Matrix(n, q, 1.0 / static_cast<double>(n * q)),
                  Matrix(n, q), Matrix(n, q), b.dfsm.delta, k};
  return in;
}

template <bool Parallel>
void BM_GapStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto in = make_inputs(n, 8, 8);
  const DeltaView delta{in.delta, in.k};
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::omp::predict(in.A, in.alpha, in.pred);
      in.out.fill(0.0);
      kernels::omp::emit_any(in.pred, in.B, delta, in.out);
    } else {
      kernels::serial::predict(in.A, in.alpha, in.pred);
      in.out.fill(0.0);
      kernels::serial::emit_any(in.pred, in.B, delta, in.out);
    }
    benchmark::DoNotOptimize(in.out.flat().data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GapStep<false>)->Name("gap_step/serial")->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_GapStep<true>)->Name("gap_step/omp")->RangeMultiplier(4)->Range(16, 1024);

template <bool Parallel>
void BM_AdvanceEvent(benchmark::State& state) {
  const auto count = static_cast<std::size_t>(state.range(0));
  auto in = make_inputs(16, 4, 8);
  const auto tables = build_sampling_tables(in.A, in.B);
  const DeltaView delta{in.delta, in.k};
  std::vector<std::uint32_t> hidden(count, 0), monitor(count, 0);
  std::vector<double> mult(count);
  std::uint64_t step = 0;
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::omp::advance_event(tables, delta, 1, {hidden, monitor}, mult, 1, step++);
    } else {
      kernels::serial::advance_event(tables, delta, 1, {hidden, monitor}, mult, 1, step++);
    }
    benchmark::DoNotOptimize(mult.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(count));
}
BENCHMARK(BM_AdvanceEvent<false>)->Name("advance_event/serial")->Range(1 << 10, 1 << 17);
BENCHMARK(BM_AdvanceEvent<true>)->Name("advance_event/omp")->Range(1 << 10, 1 << 17);

struct EstimatorInputs {
  ModelBundle bundle = testing::bench_fixture();
  std::vector<NamedItem> named;
  std::vector<TraceItem> trace;
  PrecomputedTable table;

  EstimatorInputs() {
    named = simulate(bundle, 2000, GapPolicy::bernoulli(0.1, bundle.gaps[0].id), 16).observed;
    trace = resolve_trace(bundle, named);
    PrecomputeOptions po;
    po.epsilon = 0.1;
    table = precompute(bundle, po);
  }
};

const EstimatorInputs& estimator_inputs() {
  static const EstimatorInputs inputs;
  return inputs;
}

void BM_RunExact(benchmark::State& state) {
  const auto& in = estimator_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(run_exact(in.bundle, in.trace));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.trace.size()));
}
BENCHMARK(BM_RunExact)->Name("estimator/exact");

void BM_RunTable(benchmark::State& state) {
  const auto& in = estimator_inputs();
  const auto labels = in.table.resolve(in.named);
  for (auto _ : state) benchmark::DoNotOptimize(run_table(in.table, labels));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.trace.size()));
}
BENCHMARK(BM_RunTable)->Name("estimator/table_eps0.1");

void BM_RunPf(benchmark::State& state) {
  const auto& in = estimator_inputs();
  PfOptions po;
  po.particles = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_pf(in.bundle, in.trace, po));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.trace.size()));
}
BENCHMARK(BM_RunPf)->Name("estimator/pf")->RangeMultiplier(10)->Range(100, 10000);

}  // namespace

BENCHMARK_MAIN();
