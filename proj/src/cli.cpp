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

#include "gapmon/cli.hpp"

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gapmon/bench_harness.hpp"
#include "gapmon/errors.hpp"
#include "gapmon/exact.hpp"
#include "gapmon/learn.hpp"
#include "gapmon/model_io.hpp"
#include "gapmon/oracle.hpp"
#include "gapmon/particle.hpp"
#include "gapmon/table.hpp"
#include "gapmon/trace.hpp"

namespace gapmon {

using nlohmann::json;

namespace {

json verdict_json(const VerdictProbs& v) {
  return {{"accepting", v.accepting()}, {"pending", v.pending()}, {"violated", v.violated()}};
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kImpossibleObservation: return kExitImpossible;
    case ErrorKind::kTableLimitExceeded:
    case ErrorKind::kBudgetExceeded: return kExitResourceLimit;
    default: return kExitInvalidInput;
  }
}

// Linf distance between two verdict distributions.
double divergence(const VerdictProbs& a, const VerdictProbs& b) {
  double d = 0.0;
  for (Verdict v : kAllVerdicts) d = std::max(d, std::abs(a[v] - b[v]));
  return d;
}

struct RunArgs {
  std::string algo = "exact";
  std::string model;
  std::string table;
  std::string trace;
  std::string report = "per-step";
  std::string on_impossible = "error";
  std::size_t particles = 10000;
  std::uint64_t seed = 0;
  double ess_ratio = 0.5;
  bool parallel = false;
  bool timing = false;
  bool summary = false;
};

struct Row {
  std::string item;
  VerdictProbs verdicts;
  json extra = json::object();
};

void emit_rows(const std::vector<Row>& rows, const json& final_line, const RunArgs& args,
               std::ostream& out) {
  if (args.summary) {
    out << std::left << std::setw(6) << "step" << std::setw(18) << "item" << std::right
        << std::setw(12) << "accepting" << std::setw(12) << "pending" << std::setw(12)
        << "violated" << "\n";
    out << std::fixed << std::setprecision(6);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out << std::left << std::setw(6) << i << std::setw(18) << rows[i].item << std::right
          << std::setw(12) << rows[i].verdicts.accepting() << std::setw(12)
          << rows[i].verdicts.pending() << std::setw(12) << rows[i].verdicts.violated() << "\n";
    }
    out << "final: " << final_line.at("verdicts").dump() << "\n";
    out.unsetf(std::ios::floatfield);
    return;
  }
  if (args.report == "per-step") {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      json line = {{"index", i}, {"item", rows[i].item}, {"verdicts", verdict_json(rows[i].verdicts)}};
      line.update(rows[i].extra);
      out << line.dump() << "\n";
    }
  }
  out << final_line.dump() << "\n";
}

int cmd_run(const RunArgs& args, std::ostream& out) {
  if (args.report != "per-step" && args.report != "final") {
    throw InvalidArgument("--report must be per-step or final");
  }
  const auto named = load_trace(args.trace);
  const Exec exec = args.parallel ? Exec::kParallel : Exec::kSerial;
  std::vector<Row> rows;
  json final_line = {{"summary", true}, {"algo", args.algo}, {"items", named.size()}};
  const auto start = std::chrono::steady_clock::now();

  if (args.algo == "table") {
    if (args.table.empty()) throw InvalidArgument("--algo table needs --table");
    std::optional<ModelBundle> bundle;
    if (!args.model.empty()) bundle = load_model(args.model);
    const auto table = load_table(args.table, bundle ? &*bundle : nullptr);
    const auto run = run_table(table, std::span<const NamedItem>(named));
    for (std::size_t i = 0; i < run.steps.size(); ++i) {
      rows.push_back({describe(named[i]), run.steps[i].verdicts, {{"node", run.steps[i].node}}});
    }
    final_line["verdicts"] = verdict_json(run.final_verdicts);
    final_line["final_node"] = run.final_node;
  } else {
    if (args.model.empty()) throw InvalidArgument("--algo " + args.algo + " needs --model");
    auto bundle = load_model(args.model);
    declare_builtin_gaps(bundle, named);
    const auto trace = resolve_trace(bundle, named);
    if (args.algo == "exact") {
      ExactOptions eo;
      eo.exec = exec;
      if (args.on_impossible == "uniform-reset") {
        eo.on_impossible = OnImpossible::kUniformReset;
      } else if (args.on_impossible != "error") {
        throw InvalidArgument("--on-impossible must be error or uniform-reset");
      }
      const auto run = run_exact(bundle, trace, eo);
      for (std::size_t i = 0; i < run.steps.size(); ++i) {
        const auto& s = run.steps[i];
        json extra = {{"log_likelihood", s.log_likelihood}, {"monitor", s.monitor_marginal}};
        if (s.reset) extra["reset"] = true;
        rows.push_back({describe(named[i]), s.verdicts, std::move(extra)});
      }
      final_line["verdicts"] = verdict_json(run.final_verdicts);
      final_line["log_likelihood"] = run.log_likelihood;
    } else if (args.algo == "pf") {
      PfOptions po;
      po.particles = args.particles;
      po.seed = args.seed;
      po.ess_ratio = args.ess_ratio;
      po.exec = exec;
      const auto run = run_pf(bundle, trace, po);
      for (std::size_t i = 0; i < run.steps.size(); ++i) {
        const auto& s = run.steps[i];
        rows.push_back({describe(named[i]), s.verdicts,
                        {{"log_likelihood", s.log_likelihood},
                         {"ess", s.ess},
                         {"resampled", s.resampled}}});
      }
      final_line["verdicts"] = verdict_json(run.final_verdicts);
      final_line["log_likelihood"] = run.log_likelihood;
      final_line["resamples"] = run.resample_count;
      final_line["particles"] = args.particles;
    } else {
      throw InvalidArgument("--algo must be exact, table or pf");
    }
  }

  if (args.timing) {
    const double ns = std::chrono::duration<double, std::nano>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    final_line["wall_time_ns"] = ns;
    final_line["events_per_sec"] = ns > 0.0 ? static_cast<double>(named.size()) * 1e9 / ns : 0.0;
  }
  emit_rows(rows, final_line, args, out);
  return kExitOk;
}

struct LearnArgs {
  std::vector<std::string> traces;
  std::size_t states = 0;
  std::string mask;
  std::string template_model;
  std::uint64_t seed = 0;
  std::size_t restarts = 5;
  std::size_t max_iters = 500;
  double tol = 1e-6;
  std::string output;
};

int cmd_learn(const LearnArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<std::vector<NamedItem>> named;
  for (const auto& path : args.traces) named.push_back(load_trace(path));

  std::optional<ModelBundle> templ;
  Alphabet alphabet;
  if (!args.template_model.empty()) {
    templ = load_model(args.template_model);
    alphabet = templ->alphabet();
  } else {
    for (const auto& t : named) {
      for (const auto& item : t) {
        if (!alphabet.index_of(item.name)) alphabet.symbols.push_back(item.name);
      }
    }
    std::sort(alphabet.symbols.begin(), alphabet.symbols.end());
  }
  std::vector<std::vector<std::size_t>> traces;
  for (const auto& t : named) traces.push_back(resolve_events(alphabet, t));

  LearnOptions opts;
  opts.n_states = args.states;
  opts.seed = args.seed;
  opts.restarts = args.restarts;
  opts.max_iters = args.max_iters;
  opts.tol = args.tol;
  if (!args.mask.empty()) opts.zero_mask = parse_zero_mask(read_file(args.mask));

  const auto result = baum_welch(traces, alphabet, opts);
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";

  if (templ) {
    ModelBundle bundle = *templ;
    bundle.hmm = result.hmm;
    if (bundle.peek && bundle.peek->C.rows() != result.hmm.num_states()) {
      err << "warning: template peek channel dropped (state count differs)\n";
      bundle.peek.reset();
    }
    validate_model(bundle);
    save_model(bundle, args.output);
  } else {
    write_file(args.output, to_json(result.hmm).dump(2) + "\n");
  }
  out << json{{"log_likelihood", result.log_likelihood},
              {"best_restart", result.best_restart},
              {"iterations", result.histories[result.best_restart].size()},
              {"states", args.states},
              {"output", args.output}}
             .dump()
      << "\n";
  return kExitOk;
}

struct SimulateArgs {
  std::string model;
  std::size_t length = 0;
  std::string policy = "none";
  std::uint64_t seed = 0;
  std::string output;
  std::string truth;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out) {
  const auto bundle = load_model(args.model);
  const auto gt = simulate(bundle, args.length, GapPolicy::parse(args.policy), args.seed);
  save_trace(gt.observed, args.output);
  json truth = {{"verdict", std::string(to_string(gt.verdict))},
                {"length", args.length},
                {"seed", args.seed},
                {"policy", args.policy}};
  json symbols = json::array();
  for (auto o : gt.symbols) symbols.push_back(bundle.alphabet().symbols[o]);
  json monitor = json::array();
  for (auto m : gt.monitor) monitor.push_back(bundle.dfsm.states[m]);
  truth["hidden"] = gt.hidden;
  truth["symbols"] = symbols;
  truth["monitor"] = monitor;
  json declared = json::array();
  for (const auto& g : gt.declared) declared.push_back(g.id);
  truth["declared_gaps"] = declared;
  if (!args.truth.empty()) write_file(args.truth, truth.dump(2) + "\n");
  out << json{{"items", gt.observed.size()},
              {"verdict", truth["verdict"]},
              {"output", args.output}}
             .dump()
      << "\n";
  return kExitOk;
}

struct PrecomputeArgs {
  std::string model;
  double epsilon = 0.0;
  std::size_t max_nodes = 100000;
  std::string output;
  bool parallel = false;
};

int cmd_precompute(const PrecomputeArgs& args, std::ostream& out) {
  const auto bundle = load_model(args.model);
  PrecomputeOptions po;
  po.epsilon = args.epsilon;
  po.max_nodes = args.max_nodes;
  po.exec = args.parallel ? Exec::kParallel : Exec::kSerial;
  const auto table = precompute(bundle, po);
  save_table(table, args.output);
  out << json{{"nodes", table.num_nodes()},
              {"edges", table.num_nodes() * table.num_labels()},
              {"labels", table.num_labels()},
              {"epsilon", table.epsilon()},
              {"model_digest", table.digest()},
              {"output", args.output}}
             .dump()
      << "\n";
  return kExitOk;
}

struct CompareArgs {
  std::string model;
  std::string trace;
  std::string algos = "exact";
  double oracle_budget = 1e6;
  std::string truth;
  std::size_t max_nodes = 100000;
  std::uint64_t seed = 0;
  double ess_ratio = 0.5;
};

int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  auto bundle = load_model(args.model);
  const auto named = load_trace(args.trace);
  declare_builtin_gaps(bundle, named);
  const auto trace = resolve_trace(bundle, named);
  const auto algos = AlgoSpec::parse_list(args.algos);

  const auto reference = run_exact(bundle, trace);
  json report = {{"items", trace.size()}};

  std::optional<VerdictProbs> oracle;
  json oracle_json = {{"enumerations", oracle_enumerations(bundle, trace)},
                      {"budget", args.oracle_budget}};
  try {
    const auto posterior = brute_force_posterior(bundle, trace, args.oracle_budget);
    oracle = verdict_probabilities(posterior, bundle.dfsm);
    oracle_json["verdicts"] = verdict_json(*oracle);
  } catch (const BudgetExceeded& e) {
    err << "note: " << e.what() << "; oracle comparison skipped\n";
    oracle_json["verdicts"] = nullptr;
  }
  report["oracle"] = oracle_json;

  std::optional<Verdict> truth;
  if (!args.truth.empty()) {
    const auto doc = json::parse(read_file(args.truth), nullptr, false);
    if (doc.is_discarded() || !doc.contains("verdict")) {
      throw ParseError(0, 0, "truth file needs a 'verdict' field");
    }
    truth = parse_verdict(doc.at("verdict").get<std::string>());
    if (!truth) throw ParseError(0, 0, "truth file has an unknown verdict");
    report["truth"] = std::string(to_string(*truth));
  }

  json rows = json::array();
  for (const auto& algo : algos) {
    std::vector<VerdictProbs> steps;
    VerdictProbs final_verdicts;
    json row = {{"algo", algo.name()}};
    const auto start = std::chrono::steady_clock::now();
    switch (algo.kind) {
      case AlgoSpec::Kind::kExact:
        for (const auto& s : reference.steps) steps.push_back(s.verdicts);
        final_verdicts = reference.final_verdicts;
        break;
      case AlgoSpec::Kind::kTable: {
        PrecomputeOptions po;
        po.epsilon = algo.epsilon;
        po.max_nodes = args.max_nodes;
        const auto table = precompute(bundle, po);
        const auto run = run_table(table, std::span<const NamedItem>(named));
        for (const auto& s : run.steps) steps.push_back(s.verdicts);
        final_verdicts = run.final_verdicts;
        row["table_nodes"] = table.num_nodes();
        break;
      }
      case AlgoSpec::Kind::kPf: {
        PfOptions po;
        po.particles = algo.particles;
        po.seed = args.seed;
        po.ess_ratio = args.ess_ratio;
        const auto run = run_pf(bundle, trace, po);
        for (const auto& s : run.steps) steps.push_back(s.verdicts);
        final_verdicts = run.final_verdicts;
        row["resamples"] = run.resample_count;
        break;
      }
    }
    row["wall_time_ns"] = std::chrono::duration<double, std::nano>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    double worst = 0.0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      worst = std::max(worst, divergence(steps[i], reference.steps[i].verdicts));
    }
    row["final_verdicts"] = verdict_json(final_verdicts);
    row["max_step_divergence_vs_exact"] = worst;
    row["final_error_vs_oracle"] =
        oracle ? json(divergence(final_verdicts, *oracle)) : json(nullptr);
    if (truth) {
      const std::vector<VerdictProbs> p{final_verdicts};
      const std::vector<Verdict> t{*truth};
      row["brier"] = score(p, t).brier;
    }
    rows.push_back(std::move(row));
  }
  report["algos"] = rows;
  out << report.dump() << "\n";
  return kExitOk;
}

struct BenchArgs {
  std::string model;
  std::string trace;
  std::string algos = "exact,table:0.01,pf:1000";
  std::size_t repetitions = 5;
  std::size_t max_nodes = 100000;
  std::uint64_t seed = 0;
  bool parallel = false;
};

int cmd_bench(const BenchArgs& args, std::ostream& out) {
  auto bundle = load_model(args.model);
  const auto named = load_trace(args.trace);
  declare_builtin_gaps(bundle, named);
  const auto trace = resolve_trace(bundle, named);
  const auto algos = AlgoSpec::parse_list(args.algos);
  BenchOptions bo;
  bo.repetitions = args.repetitions;
  bo.max_nodes = args.max_nodes;
  bo.seed = args.seed;
  bo.exec = args.parallel ? Exec::kParallel : Exec::kSerial;
  const auto result = bench(bundle, trace, algos, bo);
  for (const auto& row : result.rows) {
    json line = {{"algo", row.algo},
                 {"events", row.events},
                 {"ns_per_event", row.ns_per_event ? json(*row.ns_per_event) : json("n/a")},
                 {"memory_bytes", row.memory_bytes}};
    if (row.table_nodes) line["table_nodes"] = row.table_nodes;
    out << line.dump() << "\n";
  }
  out << json{{"summary", true},
              {"table_speedup_vs_exact",
               result.table_speedup ? json(*result.table_speedup) : json("n/a")}}
             .dump()
      << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"gapmon: runtime verification over traces with monitoring gaps"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Estimate verdict probabilities over a trace");
  run_cmd->add_option("--algo", run.algo, "exact | table | pf")->envname("GAPMON_ALGO");
  run_cmd->add_option("--model", run.model, "Model bundle (JSON)")->envname("GAPMON_MODEL");
  run_cmd->add_option("--table", run.table, "Precomputed table (table algorithm)");
  run_cmd->add_option("--trace", run.trace, "Trace file")->required();
  run_cmd->add_option("--report", run.report, "per-step | final");
  run_cmd->add_option("--on-impossible", run.on_impossible, "error | uniform-reset (exact)");
  run_cmd->add_option("--particles", run.particles, "Particle count (pf)")
      ->envname("GAPMON_PARTICLES");
  run_cmd->add_option("--seed", run.seed, "PRNG seed (pf)")->envname("GAPMON_SEED");
  run_cmd->add_option("--ess-ratio", run.ess_ratio, "Resample when ESS < ratio * N (pf)")
      ->envname("GAPMON_ESS_RATIO");
  run_cmd->add_flag("--parallel", run.parallel, "Use the OpenMP kernels");
  run_cmd->add_flag("--timing", run.timing, "Add wall time to the final record");
  run_cmd->add_flag("--summary", run.summary, "Print a human-readable table");

  LearnArgs learn;
  auto* learn_cmd = app.add_subcommand("learn", "Learn an HMM from complete traces");
  learn_cmd->add_option("--traces", learn.traces, "Training traces (evt lines only)")
      ->required();
  learn_cmd->add_option("--states", learn.states, "Number of hidden states")->required();
  learn_cmd->add_option("--mask", learn.mask, "Zero mask JSON {\"A\":[[bool]],\"B\":[[bool]]}");
  learn_cmd->add_option("--template", learn.template_model,
                        "Bundle supplying alphabet, monitor, peeks and gaps");
  learn_cmd->add_option("--seed", learn.seed, "PRNG seed")->envname("GAPMON_SEED");
  learn_cmd->add_option("--restarts", learn.restarts, "Random restarts");
  learn_cmd->add_option("--max-iters", learn.max_iters, "Baum-Welch iterations per restart");
  learn_cmd->add_option("--tol", learn.tol, "Stop when the log-likelihood gain is below this");
  learn_cmd->add_option("-o,--output", learn.output, "Output model file")->required();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Sample a ground-truth run with gaps");
  sim_cmd->add_option("--model", sim.model, "Model bundle")->required()->envname("GAPMON_MODEL");
  sim_cmd->add_option("--length", sim.length, "Number of emitted events")->required();
  sim_cmd->add_option("--policy", sim.policy,
                      "none | dutycycle:ON:OFF | bernoulli:P_OFF:DIST_ID");
  sim_cmd->add_option("--seed", sim.seed, "PRNG seed")->envname("GAPMON_SEED");
  sim_cmd->add_option("-o,--output", sim.output, "Observed trace file")->required();
  sim_cmd->add_option("--truth", sim.truth, "Ground truth JSON file");

  PrecomputeArgs pre;
  auto* pre_cmd = app.add_subcommand("precompute", "Build an approximate precomputed table");
  pre_cmd->add_option("--model", pre.model, "Model bundle")->required()->envname("GAPMON_MODEL");
  pre_cmd->add_option("--epsilon", pre.epsilon, "Node reuse radius (1-norm)")
      ->envname("GAPMON_EPSILON");
  pre_cmd->add_option("--max-nodes", pre.max_nodes, "Node limit")->envname("GAPMON_MAX_NODES");
  pre_cmd->add_option("-o,--output", pre.output, "Table file")->required();
  pre_cmd->add_flag("--parallel", pre.parallel, "Expand frontier layers with OpenMP");

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare estimators against exact and oracle");
  cmp_cmd->add_option("--model", cmp.model, "Model bundle")->required()->envname("GAPMON_MODEL");
  cmp_cmd->add_option("--trace", cmp.trace, "Trace file")->required();
  cmp_cmd->add_option("--algos", cmp.algos, "Comma list of exact | table:EPS | pf:N");
  cmp_cmd->add_option("--oracle-budget", cmp.oracle_budget, "Max gap fillings to enumerate")
      ->envname("GAPMON_ORACLE_BUDGET");
  cmp_cmd->add_option("--truth", cmp.truth, "Ground truth JSON (adds Brier score)");
  cmp_cmd->add_option("--max-nodes", cmp.max_nodes, "Table node limit")
      ->envname("GAPMON_MAX_NODES");
  cmp_cmd->add_option("--seed", cmp.seed, "PRNG seed (pf)")->envname("GAPMON_SEED");
  cmp_cmd->add_option("--ess-ratio", cmp.ess_ratio, "Resampling threshold (pf)");

  BenchArgs bch;
  auto* bench_cmd = app.add_subcommand("bench", "Time estimators per event");
  bench_cmd->add_option("--model", bch.model, "Model bundle")->required()->envname("GAPMON_MODEL");
  bench_cmd->add_option("--trace", bch.trace, "Trace file")->required();
  bench_cmd->add_option("--algos", bch.algos, "Comma list of exact | table:EPS | pf:N");
  bench_cmd->add_option("--reps", bch.repetitions, "Timed repetitions (median reported)");
  bench_cmd->add_option("--max-nodes", bch.max_nodes, "Table node limit");
  bench_cmd->add_option("--seed", bch.seed, "PRNG seed (pf)");
  bench_cmd->add_flag("--parallel", bch.parallel, "Use the OpenMP kernels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }

  try {
    if (*run_cmd) return cmd_run(run, out);
    if (*learn_cmd) return cmd_learn(learn, out, err);
    if (*sim_cmd) return cmd_simulate(sim, out);
    if (*pre_cmd) return cmd_precompute(pre, out);
    if (*cmp_cmd) return cmd_compare(cmp, out, err);
    if (*bench_cmd) return cmd_bench(bch, out);
  } catch (const Error& e) {
    err << "gapmon: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "gapmon: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace gapmon
