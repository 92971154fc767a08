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

// Row- and particle-level bodies shared by the serial and OpenMP kernels.

#pragma once

#include "gapmon/kernels.hpp"
#include "gapmon/rng.hpp"

namespace gapmon::kernels::detail {

inline void predict_row(const Matrix& A, const Matrix& alpha, Matrix& out,
                        std::size_t to) {
  const std::size_t n = alpha.rows();
  const std::size_t q = alpha.cols();
  auto dst = out.row(to);
  std::fill(dst.begin(), dst.end(), 0.0);
  for (std::size_t from = 0; from < n; ++from) {
    const double a = A(from, to);
    if (a == 0.0) continue;
    const auto src = alpha.row(from);
    for (std::size_t m = 0; m < q; ++m) dst[m] += src[m] * a;
  }
}

inline void emit_event_row(const Matrix& pred, const Matrix& B, DeltaView delta,
                           std::size_t o, Matrix& out, std::size_t x) {
  auto dst = out.row(x);
  std::fill(dst.begin(), dst.end(), 0.0);
  const double b = B(x, o);
  if (b == 0.0) return;
  const auto src = pred.row(x);
  for (std::size_t m = 0; m < src.size(); ++m) dst[delta(m, o)] += src[m] * b;
}

inline void emit_any_row(const Matrix& pred, const Matrix& B, DeltaView delta,
                         Matrix& out, std::size_t x) {
  auto dst = out.row(x);
  std::fill(dst.begin(), dst.end(), 0.0);
  const auto src = pred.row(x);
  const auto emit = B.row(x);
  for (std::size_t m = 0; m < src.size(); ++m) {
    if (src[m] == 0.0) continue;
    for (std::size_t o = 0; o < emit.size(); ++o) {
      if (emit[o] == 0.0) continue;
      dst[delta(m, o)] += src[m] * emit[o];
    }
  }
}

// Stream layout per (seed, step, particle): draws are consumed in order.
inline void advance_event_particle(const SamplingTables& t, DeltaView delta,
                                   std::size_t o, ParticleView ps,
                                   std::span<double> multiplier,
                                   std::uint64_t seed, std::uint64_t step,
                                   std::size_t i) {
  const auto row = t.cond_event[o].row(ps.hidden[i]);
  const double total = row.back();
  multiplier[i] = total;
  if (total > 0.0) {
    auto rng = SplitMix64::keyed(seed, step, i);
    ps.hidden[i] = static_cast<std::uint32_t>(sample_cumulative(row, rng.uniform() * total));
  }
  ps.monitor[i] = delta(ps.monitor[i], o);
}

inline void advance_gap_particle(const SamplingTables& t, DeltaView delta,
                                 std::span<const double> cum_gap,
                                 std::span<const std::size_t> gap_lengths,
                                 ParticleView ps, std::uint64_t seed,
                                 std::uint64_t step, std::size_t i) {
  auto rng = SplitMix64::keyed(seed, step, i);
  const std::size_t len =
      gap_lengths[sample_cumulative(cum_gap, rng.uniform() * cum_gap.back())];
  std::uint32_t x = ps.hidden[i];
  std::uint32_t m = ps.monitor[i];
  for (std::size_t s = 0; s < len; ++s) {
    const auto arow = t.cum_A.row(x);
    x = static_cast<std::uint32_t>(sample_cumulative(arow, rng.uniform() * arow.back()));
    const auto brow = t.cum_B.row(x);
    const std::size_t o = sample_cumulative(brow, rng.uniform() * brow.back());
    m = delta(m, o);
  }
  ps.hidden[i] = x;
  ps.monitor[i] = m;
}

}  // namespace gapmon::kernels::detail
