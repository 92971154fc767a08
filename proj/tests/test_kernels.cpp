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

#include <doctest.h>
#include <omp.h>

#include <cmath>

#include "gapmon/kernels.hpp"
#include "gapmon/rng.hpp"
#include "support/fixtures.hpp"

using namespace gapmon;

namespace {

Matrix random_stochastic(SplitMix64& rng, std::size_t rows, std::size_t cols, double zero_p) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = rng.uniform() < zero_p ? 0.0 : rng.uniform();
      m(r, c) = v;
      s += v;
    }
    if (s == 0.0) {
      m(r, 0) = 1.0;
      s = 1.0;
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) /= s;
  }
  return m;
}

struct Fixture {
  std::size_t n, q, k;
  Matrix A, B, alpha;
  std::vector<std::uint32_t> delta;

  Fixture(SplitMix64& rng, std::size_t n_, std::size_t q_, std::size_t k_)
      : n(n_), q(q_), k(k_) {
    A = random_stochastic(rng, n, n, 0.3);
    B = random_stochastic(rng, n, k, 0.3);
    alpha = random_stochastic(rng, 1, n * q, 0.5);
    alpha = Matrix(n, q, std::vector<double>(alpha.flat().begin(), alpha.flat().end()));
    for (std::size_t i = 0; i < q * k; ++i) delta.push_back(static_cast<std::uint32_t>(rng() % q));
  }
  DeltaView view() const { return {delta, k}; }
};

// Written directly from the update formulas, without the row helpers.
Matrix naive_predict(const Matrix& A, const Matrix& alpha) {
  Matrix out(alpha.rows(), alpha.cols());
  for (std::size_t x = 0; x < alpha.rows(); ++x)
    for (std::size_t m = 0; m < alpha.cols(); ++m)
      for (std::size_t y = 0; y < alpha.rows(); ++y) out(y, m) += alpha(x, m) * A(x, y);
  return out;
}

Matrix naive_emit(const Matrix& pred, const Matrix& B, DeltaView delta, std::size_t o_lo,
                  std::size_t o_hi) {
  Matrix out(pred.rows(), pred.cols());
  for (std::size_t x = 0; x < pred.rows(); ++x)
    for (std::size_t m = 0; m < pred.cols(); ++m)
      for (std::size_t o = o_lo; o < o_hi; ++o) out(x, delta(m, o)) += pred(x, m) * B(x, o);
  return out;
}

double max_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.flat()[i] - b.flat()[i]));
  return d;
}

}  // namespace

TEST_CASE("serial kernels agree with the defining formulas") {
  SplitMix64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Fixture f(rng, 1 + rng() % 6, 1 + rng() % 5, 1 + rng() % 4);
    Matrix pred(f.n, f.q);
    kernels::serial::predict(f.A, f.alpha, pred);
    CHECK(max_diff(pred, naive_predict(f.A, f.alpha)) <= 1e-15);

    for (std::size_t o = 0; o < f.k; ++o) {
      Matrix out(f.n, f.q);
      kernels::serial::emit_event(pred, f.B, f.view(), o, out);
      CHECK(max_diff(out, naive_emit(pred, f.B, f.view(), o, o + 1)) <= 1e-15);
    }
    Matrix any(f.n, f.q);
    kernels::serial::emit_any(pred, f.B, f.view(), any);
    CHECK(max_diff(any, naive_emit(pred, f.B, f.view(), 0, f.k)) <= 1e-15);
    CHECK(std::abs(any.sum() - f.alpha.sum()) <= 1e-12);
  }
}

TEST_CASE("OpenMP matrix kernels are bit-identical to the serial ones") {
  omp_set_num_threads(4);
  SplitMix64 rng(2);
  for (auto [n, q, k] : {std::array<std::size_t, 3>{3, 2, 2}, {90, 60, 5}, {130, 40, 8}}) {
    Fixture f(rng, n, q, k);
    Matrix ps(n, q), po(n, q);
    kernels::serial::predict(f.A, f.alpha, ps);
    kernels::omp::predict(f.A, f.alpha, po);
    CHECK(ps == po);

    Matrix es(n, q), eo(n, q);
    kernels::serial::emit_event(ps, f.B, f.view(), k - 1, es);
    kernels::omp::emit_event(ps, f.B, f.view(), k - 1, eo);
    CHECK(es == eo);

    Matrix as(n, q), ao(n, q);
    kernels::serial::emit_any(ps, f.B, f.view(), as);
    kernels::omp::emit_any(ps, f.B, f.view(), ao);
    CHECK(as == ao);
  }
}

TEST_CASE("OpenMP particle kernels are bit-identical to the serial ones") {
  omp_set_num_threads(4);
  SplitMix64 rng(3);
  Fixture f(rng, 6, 4, 3);
  const auto tables = build_sampling_tables(f.A, f.B);
  const std::size_t count = 20000;
  std::vector<std::uint32_t> hidden(count), monitor(count);
  for (std::size_t i = 0; i < count; ++i) {
    hidden[i] = static_cast<std::uint32_t>(rng() % f.n);
    monitor[i] = static_cast<std::uint32_t>(rng() % f.q);
  }

  auto h1 = hidden, m1 = monitor, h2 = hidden, m2 = monitor;
  std::vector<double> w1(count), w2(count);
  kernels::serial::advance_event(tables, f.view(), 1, {h1, m1}, w1, 7, 0);
  kernels::omp::advance_event(tables, f.view(), 1, {h2, m2}, w2, 7, 0);
  CHECK(h1 == h2);
  CHECK(m1 == m2);
  CHECK(w1 == w2);
  for (std::size_t i = 0; i < count; ++i) {
    // Proposal never picks a state that cannot emit the observed symbol.
    if (w1[i] > 0) CHECK(f.B(h1[i], 1) > 0.0);
  }

  const std::vector<double> cum_gap{0.2, 0.7, 1.0};
  const std::vector<std::size_t> lengths{0, 2, 5};
  kernels::serial::advance_gap(tables, f.view(), cum_gap, lengths, {h1, m1}, 7, 1);
  kernels::omp::advance_gap(tables, f.view(), cum_gap, lengths, {h2, m2}, 7, 1);
  CHECK(h1 == h2);
  CHECK(m1 == m2);
}

TEST_CASE("sample_cumulative picks the first entry above the target") {
  const std::vector<double> cum{0.25, 0.25, 0.75, 1.0};
  CHECK(kernels::sample_cumulative(cum, 0.0) == 0);
  CHECK(kernels::sample_cumulative(cum, 0.25) == 2);
  CHECK(kernels::sample_cumulative(cum, 0.8) == 3);
  // Round-off can leave the total slightly below 1.
  const std::vector<double> short_total{0.5, 0.999999, 0.999999};
  CHECK(kernels::sample_cumulative(short_total, 0.9999995) == 1);
}

TEST_CASE("sampling tables") {
  const Matrix A(2, 2, {0.5, 0.5, 0.25, 0.75});
  const Matrix B(2, 2, {1.0, 0.0, 0.5, 0.5});
  const auto t = build_sampling_tables(A, B);
  CHECK(t.cum_A(1, 0) == 0.25);
  CHECK(t.cum_A(1, 1) == 1.0);
  CHECK(t.cum_B(1, 0) == 0.5);
  // From x=1 under symbol 0: A*B = [0.25, 0.375], running sum [0.25, 0.625].
  CHECK(t.cond_event[0](1, 0) == 0.25);
  CHECK(t.cond_event[0](1, 1) == 0.625);
}
