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
#include <string>
#include <string_view>

#include "json.hpp"

#include "gapmon/model.hpp"

namespace gapmon {

/// Parses and validates a model bundle document. The schema is described in
/// docs/model_format.md.
ModelBundle parse_model(std::string_view text);
ModelBundle load_model(const std::filesystem::path& path);

nlohmann::json to_json(const ModelBundle& bundle);
nlohmann::json to_json(const Hmm& hmm);
Hmm hmm_from_json(const nlohmann::json& j);
void save_model(const ModelBundle& bundle, const std::filesystem::path& path);

/// "sha256:<hex>" over the canonical serialization.
std::string model_digest(const ModelBundle& bundle);

/// Reads a whole file; throws ParseError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Converts a byte offset into a 1-based (line, column) pair.
std::pair<std::size_t, std::size_t> line_column(std::string_view text,
                                                std::size_t offset);

}  // namespace gapmon
