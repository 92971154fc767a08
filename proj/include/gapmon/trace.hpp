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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gapmon/model.hpp"

namespace gapmon {

/// Trace item as written in a trace file, before name resolution.
struct NamedItem {
  ItemKind kind = ItemKind::kEvent;
  std::string name;
  std::size_t line = 0;  // 1-based source line, 0 when synthesized

  friend bool operator==(const NamedItem& a, const NamedItem& b) {
    return a.kind == b.kind && a.name == b.name;
  }
};

/// Line format: `evt <symbol>` | `gap <dist-id>` | `peek <value>`; `#` starts
/// a comment and blank lines are skipped.
std::vector<NamedItem> parse_trace(std::string_view text);
std::vector<NamedItem> load_trace(const std::filesystem::path& path);
std::string format_trace(std::span<const NamedItem> items);
void save_trace(std::span<const NamedItem> items,
                const std::filesystem::path& path);

/// Gap ids of the form `point:<L>` denote a point mass at length L.
std::optional<GapDist> builtin_gap(std::string_view id);

/// Adds a built-in distribution to the bundle for every `point:<L>` gap the
/// trace uses that the bundle does not declare.
void declare_builtin_gaps(ModelBundle& bundle, std::span<const NamedItem> items);

/// Throws UnknownLabel for names missing from the bundle.
std::vector<TraceItem> resolve_trace(const ModelBundle& bundle,
                                     std::span<const NamedItem> items);

/// Symbol indices of an event-only trace; throws ParseError on other items
/// and UnknownLabel on unknown symbols.
std::vector<std::size_t> resolve_events(const Alphabet& alphabet,
                                        std::span<const NamedItem> items);

std::string describe(const ModelBundle& bundle, const TraceItem& item);
std::string describe(const NamedItem& item);

}  // namespace gapmon
