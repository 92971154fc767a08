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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gapmon/matrix.hpp"

// Data-parallel inner loops of the estimators. Every kernel exists as a
// serial reference and an OpenMP version; both compute each output row with
// the same summation order, so their results are bit-identical.

namespace gapmon {

enum class Exec { kSerial, kParallel };

/// Read-only view of a monitor transition table.
struct DeltaView {
  std::span<const std::uint32_t> cells;  // num_monitor x num_symbols
  std::size_t num_symbols;

  std::uint32_t operator()(std::size_t m, std::size_t o) const {
    return cells[m * num_symbols + o];
  }
};

/// Per-particle state for the particle kernels. Weights are not touched by
/// the advancement kernels except through `multiplier`.
struct ParticleView {
  std::span<std::uint32_t> hidden;
  std::span<std::uint32_t> monitor;
};

/// Cumulative tables used to sample hidden transitions and emissions.
/// `cond_event` holds, for each symbol o and source state x, the running sum
/// over x' of A(x,x') * B(x',o); its last entry is the evidence of o from x.
struct SamplingTables {
  Matrix cum_A;  // n x n
  Matrix cum_B;  // n x k
  std::vector<Matrix> cond_event;  // k matrices of n x n
};

SamplingTables build_sampling_tables(const Matrix& A, const Matrix& B);

namespace kernels {

namespace serial {

/// out(x', m) = sum_x alpha(x, m) * A(x, x').
void predict(const Matrix& A, const Matrix& alpha, Matrix& out);
/// out(x', delta(m, o)) += pred(x', m) * B(x', o) for the observed o.
void emit_event(const Matrix& pred, const Matrix& B, DeltaView delta,
                std::size_t o, Matrix& out);
/// Same as emit_event summed over every symbol o.
void emit_any(const Matrix& pred, const Matrix& B, DeltaView delta, Matrix& out);

/// Advances every particle by one observed event; writes the per-particle
/// evidence sum_x' A(x,x') B(x',o) to `multiplier`.
void advance_event(const SamplingTables& t, DeltaView delta, std::size_t o,
                   ParticleView ps, std::span<double> multiplier,
                   std::uint64_t seed, std::uint64_t step);
/// Advances every particle through an independently sampled gap length.
void advance_gap(const SamplingTables& t, DeltaView delta,
                 std::span<const double> cum_gap,
                 std::span<const std::size_t> gap_lengths, ParticleView ps,
                 std::uint64_t seed, std::uint64_t step);

}  // namespace serial

namespace omp {

void predict(const Matrix& A, const Matrix& alpha, Matrix& out);
void emit_event(const Matrix& pred, const Matrix& B, DeltaView delta,
                std::size_t o, Matrix& out);
void emit_any(const Matrix& pred, const Matrix& B, DeltaView delta, Matrix& out);
void advance_event(const SamplingTables& t, DeltaView delta, std::size_t o,
                   ParticleView ps, std::span<double> multiplier,
                   std::uint64_t seed, std::uint64_t step);
void advance_gap(const SamplingTables& t, DeltaView delta,
                 std::span<const double> cum_gap,
                 std::span<const std::size_t> gap_lengths, ParticleView ps,
                 std::uint64_t seed, std::uint64_t step);

}  // namespace omp

/// Index of the first entry of a cumulative vector strictly greater than
/// `target`; clamps to the last positive-mass entry.
std::size_t sample_cumulative(std::span<const double> cum, double target);

}  // namespace kernels
}  // namespace gapmon
