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

#include <omp.h>

#include <cstdint>

#include "gapmon/kernels.hpp"
#include "kernels_impl.hpp"

namespace gapmon::kernels::omp {

namespace {

// Below this many output cells the fork/join cost dominates.
constexpr std::size_t kMinParallelCells = 4096;

bool worth_it(std::size_t cells) { return cells >= kMinParallelCells; }

}  // namespace

void predict(const Matrix& A, const Matrix& alpha, Matrix& out) {
  const auto n = static_cast<std::int64_t>(alpha.rows());
#pragma omp parallel for schedule(static) if (worth_it(alpha.size() * alpha.rows()))
  for (std::int64_t to = 0; to < n; ++to) {
    detail::predict_row(A, alpha, out, static_cast<std::size_t>(to));
  }
}

void emit_event(const Matrix& pred, const Matrix& B, DeltaView delta,
                std::size_t o, Matrix& out) {
  const auto n = static_cast<std::int64_t>(pred.rows());
#pragma omp parallel for schedule(static) if (worth_it(pred.size()))
  for (std::int64_t x = 0; x < n; ++x) {
    detail::emit_event_row(pred, B, delta, o, out, static_cast<std::size_t>(x));
  }
}

void emit_any(const Matrix& pred, const Matrix& B, DeltaView delta, Matrix& out) {
  const auto n = static_cast<std::int64_t>(pred.rows());
#pragma omp parallel for schedule(static) if (worth_it(pred.size() * B.cols()))
  for (std::int64_t x = 0; x < n; ++x) {
    detail::emit_any_row(pred, B, delta, out, static_cast<std::size_t>(x));
  }
}

void advance_event(const SamplingTables& t, DeltaView delta, std::size_t o,
                   ParticleView ps, std::span<double> multiplier,
                   std::uint64_t seed, std::uint64_t step) {
  const auto count = static_cast<std::int64_t>(ps.hidden.size());
#pragma omp parallel for schedule(static) if (worth_it(ps.hidden.size()))
  for (std::int64_t i = 0; i < count; ++i) {
    detail::advance_event_particle(t, delta, o, ps, multiplier, seed, step,
                                   static_cast<std::size_t>(i));
  }
}

void advance_gap(const SamplingTables& t, DeltaView delta,
                 std::span<const double> cum_gap,
                 std::span<const std::size_t> gap_lengths, ParticleView ps,
                 std::uint64_t seed, std::uint64_t step) {
  const auto count = static_cast<std::int64_t>(ps.hidden.size());
  // Gap lengths vary per particle, so hand out work dynamically.
#pragma omp parallel for schedule(dynamic, 1024) if (worth_it(ps.hidden.size()))
  for (std::int64_t i = 0; i < count; ++i) {
    detail::advance_gap_particle(t, delta, cum_gap, gap_lengths, ps, seed, step,
                                 static_cast<std::size_t>(i));
  }
}

}  // namespace gapmon::kernels::omp
