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

#include "gapmon/oracle.hpp"

#include <charconv>
#include <cmath>
#include <functional>

#include "gapmon/errors.hpp"
#include "gapmon/rng.hpp"

namespace gapmon {

namespace {

std::size_t draw(std::span<const double> probs, SplitMix64& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::size_t parse_count(std::string_view s, std::string_view spec) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InvalidArgument("bad gap policy '" + std::string(spec) + "'");
  }
  return v;
}

}  // namespace

GapPolicy GapPolicy::duty_cycle(std::size_t on, std::size_t off) {
  if (on == 0 || off == 0) throw InvalidArgument("duty cycle lengths must be >= 1");
  GapPolicy p;
  p.kind = Kind::kDutyCycle;
  p.on_len = on;
  p.off_len = off;
  return p;
}

GapPolicy GapPolicy::bernoulli(double p_off, std::string dist_id) {
  if (!(p_off >= 0.0 && p_off < 1.0)) throw InvalidArgument("p_off must be in [0,1)");
  if (dist_id.empty()) throw InvalidArgument("bernoulli policy needs a gap distribution id");
  GapPolicy p;
  p.kind = Kind::kBernoulli;
  p.p_off = p_off;
  p.dist_id = std::move(dist_id);
  return p;
}

GapPolicy GapPolicy::parse(std::string_view spec) {
  if (spec == "none") return none();
  const auto parts = split(spec, ':');
  if (parts.size() == 3 && parts[0] == "dutycycle") {
    return duty_cycle(parse_count(parts[1], spec), parse_count(parts[2], spec));
  }
  if (parts.size() >= 3 && parts[0] == "bernoulli") {
    const std::string p(parts[1]);
    char* end = nullptr;
    const double p_off = std::strtod(p.c_str(), &end);
    if (end != p.c_str() + p.size()) throw InvalidArgument("bad gap policy '" + std::string(spec) + "'");
    // The id itself may contain ':' (e.g. point:3).
    const auto id_start = parts[0].size() + parts[1].size() + 2;
    return bernoulli(p_off, std::string(spec.substr(id_start)));
  }
  throw InvalidArgument("bad gap policy '" + std::string(spec) +
                        "' (expected none | dutycycle:ON:OFF | bernoulli:P:ID)");
}

GroundTruth simulate(const ModelBundle& bundle, std::size_t length,
                     const GapPolicy& policy, std::uint64_t seed) {
  const auto& hmm = bundle.hmm;
  const auto& dfsm = bundle.dfsm;
  auto rng = SplitMix64::keyed(seed, 0);
  auto gap_rng = SplitMix64::keyed(seed, 1);
  auto peek_rng = SplitMix64::keyed(seed, 2);

  if (policy.kind == GapPolicy::Kind::kBernoulli && !bundle.gap_index(policy.dist_id) &&
      !builtin_gap(policy.dist_id)) {
    throw InvalidArgument("gap distribution '" + policy.dist_id + "' is not declared");
  }

  GroundTruth gt;
  std::uint32_t x = static_cast<std::uint32_t>(draw(hmm.pi, rng));
  std::uint32_t m = dfsm.initial;
  gt.monitor.push_back(m);
  std::vector<char> on(length, 1);
  for (std::size_t t = 0; t < length; ++t) {
    x = static_cast<std::uint32_t>(draw(hmm.A.row(x), rng));
    const std::size_t o = draw(hmm.B.row(x), rng);
    m = dfsm.step(m, o);
    gt.hidden.push_back(x);
    gt.symbols.push_back(o);
    gt.monitor.push_back(m);
    switch (policy.kind) {
      case GapPolicy::Kind::kNone: break;
      case GapPolicy::Kind::kDutyCycle:
        on[t] = (t % (policy.on_len + policy.off_len)) < policy.on_len;
        break;
      case GapPolicy::Kind::kBernoulli: on[t] = !(gap_rng.uniform() < policy.p_off); break;
    }
  }
  gt.verdict = dfsm.verdict[m];

  for (std::size_t t = 0; t < length;) {
    if (on[t]) {
      gt.observed.push_back({ItemKind::kEvent, hmm.alphabet.symbols[gt.symbols[t]], 0});
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end < length && !on[end]) ++end;
    std::string id = policy.kind == GapPolicy::Kind::kDutyCycle
                         ? "point:" + std::to_string(end - t)
                         : policy.dist_id;
    if (!bundle.gap_index(id)) {
      bool known = false;
      for (const auto& g : gt.declared) known |= g.id == id;
      if (!known) gt.declared.push_back(*builtin_gap(id));
    }
    gt.observed.push_back({ItemKind::kGap, id, 0});
    if (bundle.peek) {
      const std::size_t v = draw(bundle.peek->C.row(gt.hidden[end - 1]), peek_rng);
      gt.observed.push_back({ItemKind::kPeek, bundle.peek->values[v], 0});
    }
    t = end;
  }
  return gt;
}

double oracle_enumerations(const ModelBundle& bundle, std::span<const TraceItem> trace) {
  const double k = static_cast<double>(bundle.alphabet().size());
  double total = 1.0;
  for (const auto& item : trace) {
    if (item.kind != ItemKind::kGap) continue;
    double fillings = 0.0;
    for (const auto& [len, p] : bundle.gaps.at(item.index).mass) {
      if (p > 0.0) fillings += std::pow(k, static_cast<double>(len));
    }
    total *= fillings;
  }
  return total;
}

BeliefState brute_force_posterior(const ModelBundle& bundle,
                                  std::span<const TraceItem> trace, double budget) {
  const double work = oracle_enumerations(bundle, trace);
  if (work > budget) {
    throw BudgetExceeded("oracle needs " + std::to_string(work) +
                         " gap fillings, budget is " + std::to_string(budget));
  }
  const auto& hmm = bundle.hmm;
  const auto& dfsm = bundle.dfsm;
  const std::size_t n = hmm.num_states();
  const std::size_t q = dfsm.num_states();
  const std::size_t k = hmm.alphabet.size();

  // Unnormalized joint weight of (hidden, monitor) after one emitted symbol.
  auto emit = [&](const Matrix& alpha, std::size_t o) {
    Matrix out(n, q);
    for (std::size_t from = 0; from < n; ++from) {
      for (std::size_t mon = 0; mon < q; ++mon) {
        const double w = alpha(from, mon);
        if (w == 0.0) continue;
        const std::size_t next_mon = dfsm.delta[mon * k + o];
        for (std::size_t to = 0; to < n; ++to) {
          out(to, next_mon) += w * hmm.A(from, to) * hmm.B(to, o);
        }
      }
    }
    return out;
  };

  Matrix acc(n, q);
  std::function<void(std::size_t, const Matrix&)> walk;
  std::function<void(std::size_t, const Matrix&, std::size_t)> fill;
  walk = [&](std::size_t pos, const Matrix& alpha) {
    if (pos == trace.size()) {
      for (std::size_t i = 0; i < acc.size(); ++i) acc.flat()[i] += alpha.flat()[i];
      return;
    }
    const auto& item = trace[pos];
    switch (item.kind) {
      case ItemKind::kEvent: walk(pos + 1, emit(alpha, item.index)); break;
      case ItemKind::kPeek: {
        Matrix out = alpha;
        for (std::size_t x = 0; x < n; ++x) {
          for (std::size_t mon = 0; mon < q; ++mon) out(x, mon) *= bundle.peek->C(x, item.index);
        }
        walk(pos + 1, out);
        break;
      }
      case ItemKind::kGap:
        for (const auto& [len, p] : bundle.gaps.at(item.index).mass) {
          if (p == 0.0) continue;
          Matrix weighted = alpha;
          for (double& v : weighted.flat()) v *= p;
          fill(pos, weighted, len);
        }
        break;
    }
  };
  // Enumerates every symbol sequence of the remaining gap length.
  fill = [&](std::size_t pos, const Matrix& alpha, std::size_t remaining) {
    if (remaining == 0) {
      walk(pos + 1, alpha);
      return;
    }
    for (std::size_t o = 0; o < k; ++o) fill(pos, emit(alpha, o), remaining - 1);
  };

  Matrix start(n, q);
  for (std::size_t x = 0; x < n; ++x) start(x, dfsm.initial) = hmm.pi[x];
  walk(0, start);

  const double total = acc.sum();
  if (!(total > 0.0)) throw ImpossibleObservation("trace has probability zero");
  for (double& v : acc.flat()) v /= total;
  return BeliefState{std::move(acc)};
}

Metrics score(std::span<const VerdictProbs> predictions, std::span<const Verdict> truths,
              std::span<const VerdictProbs> reference) {
  if (predictions.size() != truths.size()) {
    throw InvalidArgument("predictions and truths differ in length");
  }
  if (!reference.empty() && reference.size() != predictions.size()) {
    throw InvalidArgument("reference and predictions differ in length");
  }
  Metrics out;
  out.cases = predictions.size();
  out.calibration.resize(10);
  std::vector<double> hits(10, 0.0);
  for (std::size_t b = 0; b < 10; ++b) {
    out.calibration[b].lower = static_cast<double>(b) / 10.0;
    out.calibration[b].upper = static_cast<double>(b + 1) / 10.0;
  }
  double brier = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (Verdict v : kAllVerdicts) {
      const double p = predictions[i][v];
      const double outcome = truths[i] == v ? 1.0 : 0.0;
      brier += (p - outcome) * (p - outcome);
      const auto b = std::min<std::size_t>(9, static_cast<std::size_t>(std::max(0.0, p) * 10.0));
      out.calibration[b].count += 1;
      out.calibration[b].mean_predicted += p;
      hits[b] += outcome;
    }
  }
  out.brier = predictions.empty() ? 0.0 : brier / static_cast<double>(predictions.size());
  for (std::size_t b = 0; b < 10; ++b) {
    auto& bin = out.calibration[b];
    if (bin.count == 0) continue;
    bin.mean_predicted /= static_cast<double>(bin.count);
    bin.observed_frequency = hits[b] / static_cast<double>(bin.count);
  }
  if (!reference.empty()) {
    double se = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const double d = predictions[i].non_accepting() - reference[i].non_accepting();
      se += d * d;
    }
    out.rmse = predictions.empty() ? 0.0 : std::sqrt(se / static_cast<double>(predictions.size()));
  }
  return out;
}

}  // namespace gapmon
