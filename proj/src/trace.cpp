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

#include "gapmon/trace.hpp"

#include <charconv>
#include <sstream>

#include "gapmon/errors.hpp"
#include "gapmon/model_io.hpp"

namespace gapmon {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<NamedItem> parse_trace(std::string_view text) {
  std::vector<NamedItem> items;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    pos = eol + 1;

    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const std::size_t lead = line.find_first_not_of(" \t\r");
    line = trim(line);
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    const std::size_t col = lead + 1;
    auto sep = line.find_first_of(" \t");
    if (sep == std::string_view::npos) {
      throw ParseError(line_no, col, "expected '<kind> <name>'");
    }
    const std::string_view kind = line.substr(0, sep);
    const std::string_view name = trim(line.substr(sep));
    if (name.find_first_of(" \t") != std::string_view::npos) {
      throw ParseError(line_no, col + sep + 1, "unexpected trailing text");
    }
    NamedItem item;
    if (kind == "evt") {
      item.kind = ItemKind::kEvent;
    } else if (kind == "gap") {
      item.kind = ItemKind::kGap;
    } else if (kind == "peek") {
      item.kind = ItemKind::kPeek;
    } else {
      throw ParseError(line_no, col, "unknown item kind '" + std::string(kind) + "'");
    }
    item.name = std::string(name);
    item.line = line_no;
    items.push_back(std::move(item));
    if (eol == text.size()) break;
  }
  return items;
}

std::vector<NamedItem> load_trace(const std::filesystem::path& path) {
  return parse_trace(read_file(path));
}

std::string format_trace(std::span<const NamedItem> items) {
  std::string out;
  for (const auto& item : items) {
    out += describe(item);
    out += '\n';
  }
  return out;
}

void save_trace(std::span<const NamedItem> items,
                const std::filesystem::path& path) {
  write_file(path, format_trace(items));
}

std::optional<GapDist> builtin_gap(std::string_view id) {
  constexpr std::string_view prefix = "point:";
  if (!id.starts_with(prefix)) return std::nullopt;
  const std::string_view digits = id.substr(prefix.size());
  std::size_t len = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), len);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
    return std::nullopt;
  }
  return GapDist::point(std::string(id), len);
}

void declare_builtin_gaps(ModelBundle& bundle, std::span<const NamedItem> items) {
  for (const auto& item : items) {
    if (item.kind != ItemKind::kGap || bundle.gap_index(item.name)) continue;
    if (auto g = builtin_gap(item.name)) bundle.gaps.push_back(std::move(*g));
  }
}

std::vector<TraceItem> resolve_trace(const ModelBundle& bundle,
                                     std::span<const NamedItem> items) {
  std::vector<TraceItem> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    std::optional<std::size_t> idx;
    switch (item.kind) {
      case ItemKind::kEvent: idx = bundle.alphabet().index_of(item.name); break;
      case ItemKind::kGap: idx = bundle.gap_index(item.name); break;
      case ItemKind::kPeek:
        if (bundle.peek) idx = bundle.peek->index_of(item.name);
        break;
    }
    if (!idx) {
      std::string where = item.line ? " (line " + std::to_string(item.line) + ")" : "";
      throw UnknownLabel(describe(item) + where);
    }
    out.push_back({item.kind, *idx});
  }
  return out;
}

std::vector<std::size_t> resolve_events(const Alphabet& alphabet,
                                        std::span<const NamedItem> items) {
  std::vector<std::size_t> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    if (item.kind != ItemKind::kEvent) {
      throw ParseError(item.line, 1, "training traces may only contain evt lines");
    }
    auto idx = alphabet.index_of(item.name);
    if (!idx) throw UnknownLabel(describe(item));
    out.push_back(*idx);
  }
  return out;
}

std::string describe(const ModelBundle& bundle, const TraceItem& item) {
  std::string out(to_string(item.kind));
  out += ' ';
  switch (item.kind) {
    case ItemKind::kEvent: out += bundle.alphabet().symbols.at(item.index); break;
    case ItemKind::kGap: out += bundle.gaps.at(item.index).id; break;
    case ItemKind::kPeek: out += bundle.peek.value().values.at(item.index); break;
  }
  return out;
}

std::string describe(const NamedItem& item) {
  return std::string(to_string(item.kind)) + " " + item.name;
}

}  // namespace gapmon
