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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gapmon/kernels.hpp"
#include "gapmon/model.hpp"
#include "gapmon/trace.hpp"

namespace gapmon {

/// One input label of a precomputed table, resolved against the bundle that
/// built it. `name` is kept so traces can be resolved against the table alone.
struct InputLabel {
  ItemKind kind = ItemKind::kEvent;
  std::size_t index = 0;
  std::string name;

  friend bool operator==(const InputLabel&, const InputLabel&) = default;
};

/// All symbols, then all gap ids, then all peek values, in bundle order.
std::vector<InputLabel> all_labels(const ModelBundle& bundle);

/// Candidate search used when merging a new belief into existing nodes.
/// Both strategies return the first node in creation order within epsilon.
enum class NodeIndex { kGrid, kLinearScan };

struct PrecomputeOptions {
  double epsilon = 0.0;
  std::size_t max_nodes = 100000;
  std::optional<std::vector<InputLabel>> labels;  // default: all_labels()
  Exec exec = Exec::kSerial;
  NodeIndex index = NodeIndex::kGrid;
};

class PrecomputedTable {
 public:
  /// Edge target for a label whose observation has probability zero.
  static constexpr std::uint32_t kImpossible = 0xffffffffu;

  std::size_t num_nodes() const noexcept { return node_verdicts_.size(); }
  std::size_t num_labels() const noexcept { return labels_.size(); }
  std::size_t num_hidden() const noexcept { return num_hidden_; }
  std::size_t num_monitor() const noexcept { return num_monitor_; }
  double epsilon() const noexcept { return epsilon_; }
  std::size_t max_nodes() const noexcept { return max_nodes_; }
  const std::string& digest() const noexcept { return digest_; }
  const std::vector<InputLabel>& labels() const noexcept { return labels_; }
  const std::vector<Verdict>& monitor_verdicts() const noexcept { return verdicts_; }

  BeliefState node(std::size_t id) const;
  std::span<const double> node_values(std::size_t id) const {
    const std::size_t d = num_hidden_ * num_monitor_;
    return {beliefs_.data() + id * d, d};
  }
  const VerdictProbs& node_verdicts(std::size_t id) const { return node_verdicts_[id]; }
  std::uint32_t edge(std::size_t node, std::size_t label) const {
    return edges_[node * labels_.size() + label];
  }
  std::size_t memory_bytes() const noexcept;

  /// Label position for a trace item; throws UnknownLabel.
  std::size_t label_of(ItemKind kind, std::string_view name) const;
  std::vector<std::size_t> resolve(std::span<const NamedItem> items) const;

  friend bool operator==(const PrecomputedTable&, const PrecomputedTable&) = default;

 private:
  friend PrecomputedTable precompute(const ModelBundle&, const PrecomputeOptions&);
  friend PrecomputedTable parse_table(std::string_view);

  void finish_node_verdicts();

  std::size_t num_hidden_ = 0;
  std::size_t num_monitor_ = 0;
  double epsilon_ = 0.0;
  std::size_t max_nodes_ = 0;
  std::string digest_;
  std::vector<InputLabel> labels_;
  std::vector<Verdict> verdicts_;
  std::vector<double> beliefs_;  // num_nodes x (num_hidden * num_monitor)
  std::vector<std::uint32_t> edges_;  // num_nodes x num_labels
  std::vector<VerdictProbs> node_verdicts_;
};

/// Breadth-first unfolding from init_belief with first-fit node reuse under
/// the 1-norm. Throws TableLimitExceeded when more than max_nodes are needed.
PrecomputedTable precompute(const ModelBundle& bundle,
                            const PrecomputeOptions& options = {});

/// Exact successor of a belief under one label (the operation each edge
/// approximates). Throws ImpossibleObservation.
BeliefState label_step(const ModelBundle& bundle, const BeliefState& belief,
                       const InputLabel& label, Exec exec = Exec::kSerial);

struct TableStepReport {
  std::uint32_t node;
  VerdictProbs verdicts;
};

struct TableRun {
  std::vector<TableStepReport> steps;
  std::uint32_t final_node = 0;
  VerdictProbs final_verdicts;
};

/// Pure lookups; throws ImpossibleObservation on an impossible edge.
TableRun run_table(const PrecomputedTable& table, std::span<const std::size_t> labels);
TableRun run_table(const PrecomputedTable& table, std::span<const NamedItem> trace);

/// Largest 1-norm gap between an edge target and the exact successor of its
/// source; used to audit tables.
double max_edge_error(const ModelBundle& bundle, const PrecomputedTable& table);

std::string serialize_table(const PrecomputedTable& table);
PrecomputedTable parse_table(std::string_view text);
void save_table(const PrecomputedTable& table, const std::filesystem::path& path);
/// When `bundle` is given, its digest must match the table's.
PrecomputedTable load_table(const std::filesystem::path& path,
                            const ModelBundle* bundle = nullptr);

}  // namespace gapmon
