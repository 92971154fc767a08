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

#include "gapmon/bench_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "gapmon/errors.hpp"
#include "gapmon/exact.hpp"
#include "gapmon/particle.hpp"
#include "gapmon/table.hpp"
#include "gapmon/trace.hpp"

namespace gapmon {

namespace {

template <typename F>
double time_ns(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::nano>(stop - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Keeps results observable so the optimizer cannot drop a timed run.
volatile double g_sink = 0.0;

}  // namespace

std::string AlgoSpec::name() const {
  switch (kind) {
    case Kind::kExact: return "exact";
    case Kind::kTable: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "table:%g", epsilon);
      return buf;
    }
    case Kind::kPf: return "pf:" + std::to_string(particles);
  }
  return "?";
}

AlgoSpec AlgoSpec::parse(std::string_view spec) {
  AlgoSpec a;
  if (spec == "exact") return a;
  const auto colon = spec.find(':');
  const std::string head(spec.substr(0, colon));
  const std::string arg = colon == std::string_view::npos ? "" : std::string(spec.substr(colon + 1));
  char* end = nullptr;
  if (head == "table") {
    a.kind = Kind::kTable;
    a.epsilon = arg.empty() ? 0.0 : std::strtod(arg.c_str(), &end);
    if (!arg.empty() && end != arg.c_str() + arg.size()) {
      throw InvalidArgument("bad algorithm '" + std::string(spec) + "'");
    }
    return a;
  }
  if (head == "pf") {
    a.kind = Kind::kPf;
    const long long n = arg.empty() ? 10000 : std::strtoll(arg.c_str(), &end, 10);
    if ((!arg.empty() && end != arg.c_str() + arg.size()) || n <= 0) {
      throw InvalidArgument("bad algorithm '" + std::string(spec) + "'");
    }
    a.particles = static_cast<std::size_t>(n);
    return a;
  }
  throw InvalidArgument("unknown algorithm '" + std::string(spec) +
                        "' (expected exact | table:EPS | pf:N)");
}

std::vector<AlgoSpec> AlgoSpec::parse_list(std::string_view csv) {
  std::vector<AlgoSpec> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    auto next = csv.find(',', pos);
    if (next == std::string_view::npos) next = csv.size();
    if (next > pos) out.push_back(parse(csv.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

BenchResult bench(const ModelBundle& bundle, std::span<const TraceItem> trace,
                  std::span<const AlgoSpec> algos, const BenchOptions& opts) {
  if (opts.repetitions == 0) throw InvalidArgument("repetitions must be positive");
  BenchResult result;
  std::optional<double> exact_ns;
  std::optional<double> table_ns;
  for (const auto& algo : algos) {
    BenchRow row;
    row.algo = algo.name();
    row.events = trace.size();
    std::function<void()> run_once;

    std::optional<PrecomputedTable> table;
    std::vector<std::size_t> labels;
    switch (algo.kind) {
      case AlgoSpec::Kind::kExact:
        row.memory_bytes = 2 * bundle.hmm.num_states() * bundle.dfsm.num_states() * sizeof(double);
        run_once = [&] {
          ExactOptions eo;
          eo.exec = opts.exec;
          g_sink = g_sink + run_exact(bundle, trace, eo).final_verdicts.accepting();
        };
        break;
      case AlgoSpec::Kind::kTable: {
        PrecomputeOptions po;
        po.epsilon = algo.epsilon;
        po.max_nodes = opts.max_nodes;
        po.exec = opts.exec;
        table = precompute(bundle, po);
        row.memory_bytes = table->memory_bytes();
        row.table_nodes = table->num_nodes();
        for (const auto& item : trace) {
          const auto name = describe(bundle, item);
          labels.push_back(table->label_of(item.kind, name.substr(name.find(' ') + 1)));
        }
        run_once = [&] {
          g_sink = g_sink + run_table(*table, std::span<const std::size_t>(labels))
                                .final_verdicts.accepting();
        };
        break;
      }
      case AlgoSpec::Kind::kPf:
        row.memory_bytes = algo.particles * (2 * sizeof(std::uint32_t) + sizeof(double));
        run_once = [&] {
          PfOptions po;
          po.particles = algo.particles;
          po.seed = opts.seed;
          po.ess_ratio = opts.ess_ratio;
          po.exec = opts.exec;
          g_sink = g_sink + run_pf(bundle, trace, po).final_verdicts.accepting();
        };
        break;
    }

    if (!trace.empty()) {
      for (std::size_t w = 0; w < opts.warmup; ++w) run_once();
      for (std::size_t r = 0; r < opts.repetitions; ++r) row.samples_ns.push_back(time_ns(run_once));
      row.ns_per_event = median(row.samples_ns) / static_cast<double>(trace.size());
      if (algo.kind == AlgoSpec::Kind::kExact && !exact_ns) exact_ns = row.ns_per_event;
      if (algo.kind == AlgoSpec::Kind::kTable && !table_ns) table_ns = row.ns_per_event;
    }
    result.rows.push_back(std::move(row));
  }
  if (exact_ns && table_ns && *table_ns > 0.0) result.table_speedup = *exact_ns / *table_ns;
  return result;
}

}  // namespace gapmon
