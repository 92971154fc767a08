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

#include "gapmon/table.hpp"

#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <unordered_map>

#include "json.hpp"

#include "gapmon/errors.hpp"
#include "gapmon/exact.hpp"
#include "gapmon/model_io.hpp"

namespace gapmon {

using nlohmann::json;

namespace {

// Nodes expanded per parallel batch; bounds the memory of pending successors.
constexpr std::size_t kBatchNodes = 1024;

// 1-norm distance with early exit once the bound is exceeded. Partial sums
// of non-negative terms only grow, so the verdict matches the full sum.
bool within(std::span<const double> a, std::span<const double> b, double eps) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += std::abs(a[i] - b[i]);
    if (d > eps) return false;
  }
  return true;
}

// Finds the lowest-id stored node within epsilon of a query belief.
//
// Grid mode buckets nodes by the sums of up to three contiguous coordinate
// blocks. Each block sum moves by at most the 1-norm distance, so every node
// within epsilon lies in a neighbouring cell of width > epsilon. Epsilon 0
// degenerates to an exact-match hash.
class NodeFinder {
 public:
  NodeFinder(NodeIndex mode, double eps, std::size_t dim,
             const std::vector<double>& store)
      : mode_(mode), eps_(eps), dim_(dim), store_(store) {
    blocks_ = dim_ > 1 ? std::min<std::size_t>(3, dim_ - 1) : 0;
    width_ = eps_ * (1.0 + 1e-6) + 1e-12;
  }

  std::optional<std::uint32_t> find(std::span<const double> v) const {
    if (mode_ == NodeIndex::kLinearScan) {
      const std::size_t count = store_.size() / dim_;
      for (std::size_t id = 0; id < count; ++id) {
        if (within(node(id), v, eps_)) return static_cast<std::uint32_t>(id);
      }
      return std::nullopt;
    }
    if (eps_ == 0.0) {
      auto it = exact_.find(hash_exact(v));
      if (it == exact_.end()) return std::nullopt;
      for (std::uint32_t id : it->second) {
        if (within(node(id), v, 0.0)) return id;
      }
      return std::nullopt;
    }
    const auto base = cell(v);
    std::optional<std::uint32_t> best;
    std::array<std::int64_t, 3> key{};
    const std::size_t combos = pow3(blocks_);
    for (std::size_t c = 0; c < combos; ++c) {
      std::size_t rest = c;
      for (std::size_t b = 0; b < blocks_; ++b) {
        key[b] = base[b] + static_cast<std::int64_t>(rest % 3) - 1;
        rest /= 3;
      }
      auto it = grid_.find(pack(key));
      if (it == grid_.end()) continue;
      for (std::uint32_t id : it->second) {
        if (best && id >= *best) break;  // ids ascend within a bucket
        if (within(node(id), v, eps_)) {
          best = id;
          break;
        }
      }
    }
    return best;
  }

  void insert(std::uint32_t id) {
    if (mode_ == NodeIndex::kLinearScan) return;
    const auto v = node(id);
    if (eps_ == 0.0) {
      exact_[hash_exact(v)].push_back(id);
    } else {
      grid_[pack(cell(v))].push_back(id);
    }
  }

 private:
  std::span<const double> node(std::size_t id) const {
    return {store_.data() + id * dim_, dim_};
  }

  static std::size_t pow3(std::size_t e) {
    std::size_t r = 1;
    while (e--) r *= 3;
    return r;
  }

  std::array<std::int64_t, 3> cell(std::span<const double> v) const {
    std::array<std::int64_t, 3> key{};
    const std::size_t span = dim_ / (blocks_ + 1);
    for (std::size_t b = 0; b < blocks_; ++b) {
      double s = 0.0;
      for (std::size_t i = b * span; i < (b + 1) * span; ++i) s += v[i];
      key[b] = static_cast<std::int64_t>(std::floor(s / width_));
    }
    return key;
  }

  static std::uint64_t pack(const std::array<std::int64_t, 3>& key) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::int64_t k : key) {
      h ^= static_cast<std::uint64_t>(k);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  static std::uint64_t hash_exact(std::span<const double> v) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double x : v) {
      const double canon = x + 0.0;  // folds -0.0 into +0.0
      std::uint64_t bits;
      std::memcpy(&bits, &canon, sizeof bits);
      h ^= bits;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  NodeIndex mode_;
  double eps_;
  std::size_t dim_;
  const std::vector<double>& store_;
  std::size_t blocks_ = 0;
  double width_ = 0.0;
  // Hash collisions only merge buckets; membership is rechecked exactly.
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> exact_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid_;
};

std::optional<ItemKind> parse_kind(std::string_view s) {
  if (s == "evt") return ItemKind::kEvent;
  if (s == "gap") return ItemKind::kGap;
  if (s == "peek") return ItemKind::kPeek;
  return std::nullopt;
}

}  // namespace

std::vector<InputLabel> all_labels(const ModelBundle& bundle) {
  std::vector<InputLabel> out;
  const auto& sigma = bundle.alphabet().symbols;
  for (std::size_t i = 0; i < sigma.size(); ++i) out.push_back({ItemKind::kEvent, i, sigma[i]});
  for (std::size_t i = 0; i < bundle.gaps.size(); ++i) {
    out.push_back({ItemKind::kGap, i, bundle.gaps[i].id});
  }
  if (bundle.peek) {
    for (std::size_t i = 0; i < bundle.peek->values.size(); ++i) {
      out.push_back({ItemKind::kPeek, i, bundle.peek->values[i]});
    }
  }
  return out;
}

BeliefState label_step(const ModelBundle& bundle, const BeliefState& belief,
                       const InputLabel& label, Exec exec) {
  return apply_item(bundle, belief, TraceItem{label.kind, label.index}, exec).belief;
}

BeliefState PrecomputedTable::node(std::size_t id) const {
  const auto v = node_values(id);
  return BeliefState{Matrix(num_hidden_, num_monitor_, std::vector<double>(v.begin(), v.end()))};
}

std::size_t PrecomputedTable::memory_bytes() const noexcept {
  return beliefs_.size() * sizeof(double) + edges_.size() * sizeof(std::uint32_t) +
         node_verdicts_.size() * sizeof(VerdictProbs);
}

void PrecomputedTable::finish_node_verdicts() {
  const std::size_t d = num_hidden_ * num_monitor_;
  const std::size_t count = d == 0 ? 0 : beliefs_.size() / d;
  node_verdicts_.assign(count, VerdictProbs{});
  for (std::size_t id = 0; id < count; ++id) {
    const auto v = node_values(id);
    for (std::size_t x = 0; x < num_hidden_; ++x) {
      for (std::size_t m = 0; m < num_monitor_; ++m) {
        node_verdicts_[id][verdicts_[m]] += v[x * num_monitor_ + m];
      }
    }
  }
}

std::size_t PrecomputedTable::label_of(ItemKind kind, std::string_view name) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].kind == kind && labels_[i].name == name) return i;
  }
  throw UnknownLabel(std::string(to_string(kind)) + " " + std::string(name) +
                     " (not in the precomputed label set)");
}

std::vector<std::size_t> PrecomputedTable::resolve(std::span<const NamedItem> items) const {
  std::vector<std::size_t> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(label_of(item.kind, item.name));
  return out;
}

PrecomputedTable precompute(const ModelBundle& bundle, const PrecomputeOptions& opts) {
  if (!(opts.epsilon >= 0.0)) throw InvalidArgument("epsilon must be >= 0");
  if (opts.max_nodes == 0) throw InvalidArgument("max_nodes must be positive");

  PrecomputedTable t;
  t.num_hidden_ = bundle.hmm.num_states();
  t.num_monitor_ = bundle.dfsm.num_states();
  t.epsilon_ = opts.epsilon;
  t.max_nodes_ = opts.max_nodes;
  t.digest_ = model_digest(bundle);
  t.labels_ = opts.labels ? *opts.labels : all_labels(bundle);
  t.verdicts_ = bundle.dfsm.verdict;
  for (const auto& l : t.labels_) {
    const bool ok = (l.kind == ItemKind::kEvent && l.index < bundle.alphabet().size()) ||
                    (l.kind == ItemKind::kGap && l.index < bundle.gaps.size()) ||
                    (l.kind == ItemKind::kPeek && bundle.peek &&
                     l.index < bundle.peek->values.size());
    if (!ok) throw InvalidArgument("label '" + l.name + "' does not resolve in the model");
  }

  const std::size_t dim = t.num_hidden_ * t.num_monitor_;
  const std::size_t num_labels = t.labels_.size();
  NodeFinder finder(opts.index, opts.epsilon, dim, t.beliefs_);

  const auto init = init_belief(bundle.hmm, bundle.dfsm);
  t.beliefs_.assign(init.alpha.flat().begin(), init.alpha.flat().end());
  finder.insert(0);

  std::size_t expanded = 0;
  std::vector<std::vector<double>> successors;
  std::vector<char> possible;
  while (expanded < t.beliefs_.size() / dim) {
    const std::size_t count = t.beliefs_.size() / dim;
    const std::size_t end = std::min(count, expanded + kBatchNodes);
    const std::size_t pairs = (end - expanded) * num_labels;
    successors.assign(pairs, {});
    possible.assign(pairs, 0);
    std::vector<std::exception_ptr> errors(pairs);

    const auto total = static_cast<std::int64_t>(pairs);
#pragma omp parallel for schedule(dynamic, 16) if (opts.exec == Exec::kParallel)
    for (std::int64_t p = 0; p < total; ++p) {
      const std::size_t id = expanded + static_cast<std::size_t>(p) / num_labels;
      const std::size_t l = static_cast<std::size_t>(p) % num_labels;
      try {
        auto next = label_step(bundle, t.node(id), t.labels_[l]);
        const auto flat = next.alpha.flat();
        successors[p].assign(flat.begin(), flat.end());
        possible[p] = 1;
      } catch (const ImpossibleObservation&) {
        possible[p] = 0;
      } catch (...) {
        errors[p] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    t.edges_.resize(end * num_labels, PrecomputedTable::kImpossible);
    for (std::size_t p = 0; p < pairs; ++p) {
      const std::size_t id = expanded + p / num_labels;
      const std::size_t l = p % num_labels;
      if (!possible[p]) continue;
      auto hit = finder.find(successors[p]);
      if (!hit) {
        const std::size_t fresh = t.beliefs_.size() / dim;
        if (fresh >= opts.max_nodes) throw TableLimitExceeded(opts.max_nodes);
        t.beliefs_.insert(t.beliefs_.end(), successors[p].begin(), successors[p].end());
        finder.insert(static_cast<std::uint32_t>(fresh));
        hit = static_cast<std::uint32_t>(fresh);
      }
      t.edges_[id * num_labels + l] = *hit;
    }
    expanded = end;
  }
  t.finish_node_verdicts();
  return t;
}

TableRun run_table(const PrecomputedTable& table, std::span<const std::size_t> labels) {
  TableRun run;
  run.steps.reserve(labels.size());
  std::uint32_t node = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint32_t next = table.edge(node, labels[i]);
    if (next == PrecomputedTable::kImpossible) {
      throw ImpossibleObservation("item " + std::to_string(i) + " (" +
                                  table.labels()[labels[i]].name +
                                  ") has probability zero at table node " +
                                  std::to_string(node));
    }
    node = next;
    run.steps.push_back({node, table.node_verdicts(node)});
  }
  run.final_node = node;
  run.final_verdicts = table.node_verdicts(node);
  return run;
}

TableRun run_table(const PrecomputedTable& table, std::span<const NamedItem> trace) {
  const auto labels = table.resolve(trace);
  return run_table(table, std::span<const std::size_t>(labels));
}

double max_edge_error(const ModelBundle& bundle, const PrecomputedTable& table) {
  double worst = 0.0;
  for (std::size_t id = 0; id < table.num_nodes(); ++id) {
    const auto belief = table.node(id);
    for (std::size_t l = 0; l < table.num_labels(); ++l) {
      const auto target = table.edge(id, l);
      try {
        const auto next = label_step(bundle, belief, table.labels()[l]);
        if (target == PrecomputedTable::kImpossible) {
          return std::numeric_limits<double>::infinity();
        }
        worst = std::max(worst, l1_distance(next.alpha.flat(), table.node_values(target)));
      } catch (const ImpossibleObservation&) {
        if (target != PrecomputedTable::kImpossible) {
          return std::numeric_limits<double>::infinity();
        }
      }
    }
  }
  return worst;
}

std::string serialize_table(const PrecomputedTable& t) {
  json labels = json::array();
  for (const auto& l : t.labels()) {
    labels.push_back({{"kind", std::string(to_string(l.kind))}, {"name", l.name}, {"index", l.index}});
  }
  json verdicts = json::array();
  for (Verdict v : t.monitor_verdicts()) verdicts.push_back(std::string(to_string(v)));
  json nodes = json::array();
  for (std::size_t id = 0; id < t.num_nodes(); ++id) {
    const auto v = t.node_values(id);
    nodes.push_back(std::vector<double>(v.begin(), v.end()));
  }
  json edges = json::array();
  for (std::size_t id = 0; id < t.num_nodes(); ++id) {
    for (std::size_t l = 0; l < t.num_labels(); ++l) {
      const auto to = t.edge(id, l);
      edges.push_back(json::array(
          {id, l, to == PrecomputedTable::kImpossible ? json(nullptr) : json(to)}));
    }
  }
  json doc = {
      {"format", "gapmon-table"},
      {"version", 1},
      {"meta",
       {{"epsilon", t.epsilon()},
        {"max_nodes", t.max_nodes()},
        {"model_digest", t.digest()},
        {"num_nodes", t.num_nodes()},
        {"num_edges", t.num_nodes() * t.num_labels()},
        {"num_hidden", t.num_hidden()},
        {"num_monitor", t.num_monitor()}}},
      {"labels", labels},
      {"monitor_verdicts", verdicts},
      {"nodes", nodes},
      {"edges", edges},
  };
  return doc.dump() + "\n";
}

PrecomputedTable parse_table(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(line, col, e.what());
  }
  auto bad = [](const std::string& what) { return ParseError(0, 0, "table: " + what); };
  PrecomputedTable t;
  try {
    if (doc.at("format") != "gapmon-table") throw bad("not a gapmon table");
    const json& meta = doc.at("meta");
    t.epsilon_ = meta.at("epsilon").get<double>();
    t.max_nodes_ = meta.at("max_nodes").get<std::size_t>();
    t.digest_ = meta.at("model_digest").get<std::string>();
    t.num_hidden_ = meta.at("num_hidden").get<std::size_t>();
    t.num_monitor_ = meta.at("num_monitor").get<std::size_t>();
    const auto num_nodes = meta.at("num_nodes").get<std::size_t>();

    for (const auto& l : doc.at("labels")) {
      auto kind = parse_kind(l.at("kind").get<std::string>());
      if (!kind) throw bad("unknown label kind");
      t.labels_.push_back({*kind, l.at("index").get<std::size_t>(), l.at("name").get<std::string>()});
    }
    for (const auto& v : doc.at("monitor_verdicts")) {
      auto verdict = parse_verdict(v.get<std::string>());
      if (!verdict) throw bad("unknown verdict");
      t.verdicts_.push_back(*verdict);
    }
    if (t.verdicts_.size() != t.num_monitor_) throw bad("verdict count mismatch");

    const std::size_t dim = t.num_hidden_ * t.num_monitor_;
    const json& nodes = doc.at("nodes");
    if (nodes.size() != num_nodes || num_nodes == 0) throw bad("node count mismatch");
    t.beliefs_.reserve(num_nodes * dim);
    for (const auto& n : nodes) {
      auto v = n.get<std::vector<double>>();
      if (v.size() != dim) throw bad("node dimension mismatch");
      t.beliefs_.insert(t.beliefs_.end(), v.begin(), v.end());
    }

    const std::size_t num_labels = t.labels_.size();
    t.edges_.assign(num_nodes * num_labels, PrecomputedTable::kImpossible);
    std::vector<char> seen(t.edges_.size(), 0);
    for (const auto& e : doc.at("edges")) {
      const auto from = e.at(0).get<std::size_t>();
      const auto label = e.at(1).get<std::size_t>();
      if (from >= num_nodes || label >= num_labels) throw bad("edge out of range");
      const std::size_t cell = from * num_labels + label;
      if (seen[cell]) throw bad("duplicate edge");
      seen[cell] = 1;
      if (!e.at(2).is_null()) {
        const auto to = e.at(2).get<std::uint32_t>();
        if (to >= num_nodes) throw bad("edge target out of range");
        t.edges_[cell] = to;
      }
    }
    for (char s : seen) {
      if (!s) throw bad("edge map is not total");
    }
  } catch (const json::exception& e) {
    throw bad(e.what());
  }
  t.finish_node_verdicts();
  return t;
}

void save_table(const PrecomputedTable& table, const std::filesystem::path& path) {
  write_file(path, serialize_table(table));
}

PrecomputedTable load_table(const std::filesystem::path& path, const ModelBundle* bundle) {
  auto t = parse_table(read_file(path));
  if (bundle) {
    const auto actual = model_digest(*bundle);
    if (actual != t.digest()) throw DigestMismatch(t.digest(), actual);
  }
  return t;
}

}  // namespace gapmon
