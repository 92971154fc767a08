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

#include <algorithm>

#include "gapmon/kernels.hpp"
#include "kernels_impl.hpp"

namespace gapmon {

namespace {

Matrix cumulative_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      acc += m(r, c);
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

SamplingTables build_sampling_tables(const Matrix& A, const Matrix& B) {
  SamplingTables t;
  t.cum_A = cumulative_rows(A);
  t.cum_B = cumulative_rows(B);
  const std::size_t n = A.rows();
  for (std::size_t o = 0; o < B.cols(); ++o) {
    Matrix joint(n, n);
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t to = 0; to < n; ++to) joint(x, to) = A(x, to) * B(to, o);
    }
    t.cond_event.push_back(cumulative_rows(joint));
  }
  return t;
}

namespace kernels {

std::size_t sample_cumulative(std::span<const double> cum, double target) {
  auto it = std::upper_bound(cum.begin(), cum.end(), target);
  if (it != cum.end()) return static_cast<std::size_t>(it - cum.begin());
  // Rounding pushed the target past the end: take the last entry with mass.
  std::size_t i = cum.size() - 1;
  while (i > 0 && cum[i] == cum[i - 1]) --i;
  return i;
}

namespace serial {

void predict(const Matrix& A, const Matrix& alpha, Matrix& out) {
  for (std::size_t to = 0; to < alpha.rows(); ++to) {
    detail::predict_row(A, alpha, out, to);
  }
}

void emit_event(const Matrix& pred, const Matrix& B, DeltaView delta,
                std::size_t o, Matrix& out) {
  for (std::size_t x = 0; x < pred.rows(); ++x) {
    detail::emit_event_row(pred, B, delta, o, out, x);
  }
}

void emit_any(const Matrix& pred, const Matrix& B, DeltaView delta, Matrix& out) {
  for (std::size_t x = 0; x < pred.rows(); ++x) {
    detail::emit_any_row(pred, B, delta, out, x);
  }
}

void advance_event(const SamplingTables& t, DeltaView delta, std::size_t o,
                   ParticleView ps, std::span<double> multiplier,
                   std::uint64_t seed, std::uint64_t step) {
  for (std::size_t i = 0; i < ps.hidden.size(); ++i) {
    detail::advance_event_particle(t, delta, o, ps, multiplier, seed, step, i);
  }
}

void advance_gap(const SamplingTables& t, DeltaView delta,
                 std::span<const double> cum_gap,
                 std::span<const std::size_t> gap_lengths, ParticleView ps,
                 std::uint64_t seed, std::uint64_t step) {
  for (std::size_t i = 0; i < ps.hidden.size(); ++i) {
    detail::advance_gap_particle(t, delta, cum_gap, gap_lengths, ps, seed, step, i);
  }
}

}  // namespace serial
}  // namespace kernels
}  // namespace gapmon
