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

#include "gapmon/kernels.hpp"
#include "gapmon/model.hpp"

namespace gapmon {

/// Estimator selector shared by `compare` and `bench`:
/// "exact" | "table:<epsilon>" | "pf:<particles>".
struct AlgoSpec {
  enum class Kind { kExact, kTable, kPf };
  Kind kind = Kind::kExact;
  double epsilon = 0.0;
  std::size_t particles = 0;

  std::string name() const;
  static AlgoSpec parse(std::string_view spec);
  static std::vector<AlgoSpec> parse_list(std::string_view csv);
};

struct BenchOptions {
  std::size_t warmup = 1;
  std::size_t repetitions = 5;
  std::size_t max_nodes = 100000;
  std::uint64_t seed = 0;
  double ess_ratio = 0.5;
  Exec exec = Exec::kSerial;
};

struct BenchRow {
  std::string algo;
  std::size_t events = 0;
  std::optional<double> ns_per_event;  // nullopt for an empty trace
  std::vector<double> samples_ns;      // per repetition, whole trace
  std::size_t memory_bytes = 0;
  std::size_t table_nodes = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  /// exact ns/event divided by table ns/event when both were measured.
  std::optional<double> table_speedup;
};

/// Times each estimator over the trace: warmup runs, then `repetitions`
/// timed runs, reporting the median. Table construction is not timed.
BenchResult bench(const ModelBundle& bundle, std::span<const TraceItem> trace,
                  std::span<const AlgoSpec> algos, const BenchOptions& options = {});

}  // namespace gapmon
