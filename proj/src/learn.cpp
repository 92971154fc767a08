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

#include "gapmon/learn.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include "gapmon/errors.hpp"
#include "gapmon/model_io.hpp"
#include "gapmon/rng.hpp"

namespace gapmon {

namespace {

struct Params {
  std::vector<double> pi;
  Matrix A;
  Matrix B;
};

struct Counts {
  std::vector<double> pi;
  Matrix A;
  Matrix B;
  double log_likelihood = 0.0;
  bool impossible = false;
};

bool masked(const std::vector<std::vector<bool>>& mask, std::size_t r, std::size_t c) {
  return !mask.empty() && mask[r][c];
}

void check_mask(const std::vector<std::vector<bool>>& mask, std::size_t rows,
                std::size_t cols, const char* name) {
  if (mask.empty()) return;
  if (mask.size() != rows) {
    throw InvalidArgument(std::string("zero mask for ") + name + " has wrong row count");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask[r].size() != cols) {
      throw InvalidArgument(std::string("zero mask for ") + name + " has wrong column count");
    }
    bool any_free = false;
    for (bool pinned : mask[r]) any_free |= !pinned;
    if (!any_free) {
      throw InvalidArgument(std::string("zero mask pins every entry of ") + name +
                            " row " + std::to_string(r));
    }
  }
}

// Symmetric Dirichlet(1) over the unmasked entries of one row.
void dirichlet_row(std::span<double> row, const std::vector<std::vector<bool>>& mask,
                   std::size_t r, SplitMix64& rng) {
  double total = 0.0;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (masked(mask, r, c)) {
      row[c] = 0.0;
      continue;
    }
    double e = -std::log(1.0 - rng.uniform());
    if (!(e > 0.0)) e = std::numeric_limits<double>::min();
    row[c] = e;
    total += e;
  }
  for (double& v : row) v /= total;
}

Params random_params(std::size_t n, std::size_t k, const ZeroMask& mask,
                     SplitMix64& rng) {
  Params p{std::vector<double>(n), Matrix(n, n), Matrix(n, k)};
  dirichlet_row(p.pi, {}, 0, rng);
  for (std::size_t r = 0; r < n; ++r) dirichlet_row(p.A.row(r), mask.A, r, rng);
  for (std::size_t r = 0; r < n; ++r) dirichlet_row(p.B.row(r), mask.B, r, rng);
  return p;
}

// Scaled forward-backward with the silent time-0 convention: alpha_0 = pi,
// alpha_t(j) = sum_i alpha_{t-1}(i) A(i,j) B(j,o_t) for t = 1..T.
void accumulate(const Params& p, std::span<const std::size_t> trace, Counts& counts) {
  const std::size_t n = p.pi.size();
  const std::size_t len = trace.size();
  Matrix alpha(len + 1, n);
  Matrix beta(len + 1, n);
  std::vector<double> scale(len + 1, 1.0);
  for (std::size_t i = 0; i < n; ++i) alpha(0, i) = p.pi[i];

  for (std::size_t t = 1; t <= len; ++t) {
    const std::size_t o = trace[t - 1];
    double c = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += alpha(t - 1, i) * p.A(i, j);
      s *= p.B(j, o);
      alpha(t, j) = s;
      c += s;
    }
    if (!(c > 0.0)) {
      counts.impossible = true;
      return;
    }
    for (std::size_t j = 0; j < n; ++j) alpha(t, j) /= c;
    scale[t] = c;
    counts.log_likelihood += std::log(c);
  }

  for (std::size_t i = 0; i < n; ++i) beta(len, i) = 1.0;
  for (std::size_t t = len; t-- > 0;) {
    const std::size_t o = trace[t];
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += p.A(i, j) * p.B(j, o) * beta(t + 1, j);
      beta(t, i) = s / scale[t + 1];
    }
  }

  for (std::size_t i = 0; i < n; ++i) counts.pi[i] += alpha(0, i) * beta(0, i);
  for (std::size_t t = 0; t < len; ++t) {
    const std::size_t o = trace[t];
    const double inv = 1.0 / scale[t + 1];
    for (std::size_t i = 0; i < n; ++i) {
      const double a = alpha(t, i) * inv;
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        counts.A(i, j) += a * p.A(i, j) * p.B(j, o) * beta(t + 1, j);
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      counts.B(j, o) += alpha(t + 1, j) * beta(t + 1, j);
    }
  }
}

Counts e_step(const Params& p, std::span<const std::vector<std::size_t>> traces) {
  const std::size_t n = p.pi.size();
  Counts counts{std::vector<double>(n, 0.0), Matrix(n, n), Matrix(n, p.B.cols())};
  for (const auto& trace : traces) {
    accumulate(p, trace, counts);
    if (counts.impossible) break;
  }
  return counts;
}

void normalize_row(std::span<double> row, const std::vector<std::vector<bool>>& mask,
                   std::size_t r, const std::string& what,
                   std::vector<std::string>& warnings) {
  double total = 0.0;
  for (double v : row) total += v;
  if (total > 0.0) {
    for (double& v : row) v /= total;
    return;
  }
  std::size_t free = 0;
  for (std::size_t c = 0; c < row.size(); ++c) free += masked(mask, r, c) ? 0 : 1;
  for (std::size_t c = 0; c < row.size(); ++c) {
    row[c] = masked(mask, r, c) ? 0.0 : 1.0 / static_cast<double>(free);
  }
  warnings.push_back(what + " row " + std::to_string(r) +
                     " received no expected counts; reset to uniform");
}

Params m_step(Counts counts, const ZeroMask& mask, std::vector<std::string>& warnings) {
  Params p{std::move(counts.pi), std::move(counts.A), std::move(counts.B)};
  normalize_row(p.pi, {}, 0, "pi", warnings);
  for (std::size_t r = 0; r < p.A.rows(); ++r) normalize_row(p.A.row(r), mask.A, r, "A", warnings);
  for (std::size_t r = 0; r < p.B.rows(); ++r) normalize_row(p.B.row(r), mask.B, r, "B", warnings);
  return p;
}

struct RestartResult {
  Params params;
  std::vector<double> history;
  std::vector<std::string> warnings;
};

RestartResult run_restart(std::span<const std::vector<std::size_t>> traces,
                          std::size_t k, const LearnOptions& opts,
                          const ZeroMask& mask, std::size_t restart) {
  auto rng = SplitMix64::keyed(opts.seed, restart);
  RestartResult r{random_params(opts.n_states, k, mask, rng), {}, {}};
  for (std::size_t iter = 0;; ++iter) {
    Counts counts = e_step(r.params, traces);
    if (counts.impossible) {
      throw DegenerateInput(iter == 0
                                ? "zero mask makes a training trace impossible"
                                : "training trace became impossible during learning");
    }
    r.history.push_back(counts.log_likelihood);
    const std::size_t m = r.history.size();
    if (m > 1 && r.history[m - 1] - r.history[m - 2] < opts.tol) break;
    if (iter == opts.max_iters) break;
    r.params = m_step(std::move(counts), mask, r.warnings);
  }
  return r;
}

}  // namespace

LearnResult baum_welch(std::span<const std::vector<std::size_t>> traces,
                       const Alphabet& alphabet, const LearnOptions& opts) {
  if (opts.n_states == 0) throw InvalidArgument("n_states must be positive");
  if (opts.restarts == 0) throw InvalidArgument("restarts must be positive");
  if (opts.max_iters == 0) throw InvalidArgument("max_iters must be positive");
  if (traces.empty()) throw InvalidArgument("no training traces");
  const std::size_t k = alphabet.size();
  for (const auto& t : traces) {
    if (t.empty()) throw InvalidArgument("training traces must be non-empty");
    for (std::size_t o : t) {
      if (o >= k) throw InvalidArgument("training symbol outside the alphabet");
    }
  }
  const ZeroMask mask = opts.zero_mask.value_or(ZeroMask{});
  check_mask(mask.A, opts.n_states, opts.n_states, "A");
  check_mask(mask.B, opts.n_states, k, "B");

  const auto restarts = static_cast<std::int64_t>(opts.restarts);
  std::vector<RestartResult> results(opts.restarts);
  std::vector<std::exception_ptr> errors(opts.restarts);
#pragma omp parallel for schedule(dynamic, 1) if (opts.parallel_restarts)
  for (std::int64_t r = 0; r < restarts; ++r) {
    try {
      results[r] = run_restart(traces, k, opts, mask, static_cast<std::size_t>(r));
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  LearnResult out;
  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].history.back() > results[best].history.back()) best = r;
  }
  for (std::size_t r = 0; r < results.size(); ++r) {
    out.histories.push_back(results[r].history);
    for (auto& w : results[r].warnings) {
      out.warnings.push_back("restart " + std::to_string(r) + ": " + w);
    }
  }
  out.best_restart = best;
  out.log_likelihood = results[best].history.back();
  out.hmm.alphabet = alphabet;
  out.hmm.pi = std::move(results[best].params.pi);
  out.hmm.A = std::move(results[best].params.A);
  out.hmm.B = std::move(results[best].params.B);
  return out;
}

std::vector<double> forward_scales(const Hmm& hmm, std::span<const std::size_t> trace) {
  const std::size_t n = hmm.num_states();
  std::vector<double> alpha = hmm.pi;
  std::vector<double> next(n);
  std::vector<double> scales;
  scales.reserve(trace.size());
  for (std::size_t o : trace) {
    double c = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += alpha[i] * hmm.A(i, j);
      next[j] = s * hmm.B(j, o);
      c += next[j];
    }
    scales.push_back(c);
    if (!(c > 0.0)) break;
    for (std::size_t j = 0; j < n; ++j) alpha[j] = next[j] / c;
  }
  return scales;
}

double log_likelihood(const Hmm& hmm, std::span<const std::size_t> trace) {
  double ll = 0.0;
  const auto scales = forward_scales(hmm, trace);
  for (std::size_t t = 0; t < scales.size(); ++t) {
    if (!(scales[t] > 0.0)) {
      throw ImpossibleObservation("trace prefix of length " + std::to_string(t + 1) +
                                  " has probability zero");
    }
    ll += std::log(scales[t]);
  }
  return ll;
}

ZeroMask parse_zero_mask(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(line, col, e.what());
  }
  auto read = [&](const char* key) {
    std::vector<std::vector<bool>> m;
    if (!j.is_object() || !j.contains(key)) return m;
    try {
      m = j.at(key).get<std::vector<std::vector<bool>>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(0, 0, std::string("mask.") + key + ": " + e.what());
    }
    return m;
  };
  return ZeroMask{read("A"), read("B")};
}

}  // namespace gapmon
