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

#include "gapmon/model_io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gapmon/errors.hpp"

namespace gapmon {

using nlohmann::json;

namespace {

// Semantic errors carry the position of the first occurrence of the
// offending token after `anchor`, which is good enough to point an editor at.
class SourceText {
 public:
  explicit SourceText(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(std::string_view anchor, std::string_view token,
                         const std::string& detail) const {
    std::size_t from = 0;
    if (!anchor.empty()) {
      auto a = text_.find("\"" + std::string(anchor) + "\"");
      if (a != std::string_view::npos) from = a;
    }
    std::size_t at = std::string_view::npos;
    if (!token.empty()) at = text_.find("\"" + std::string(token) + "\"", from);
    if (at == std::string_view::npos) at = anchor.empty() ? 0 : from;
    if (at == std::string_view::npos || (anchor.empty() && token.empty())) {
      throw ParseError(0, 0, detail);
    }
    auto [line, col] = line_column(text_, at);
    throw ParseError(line, col, detail);
  }

 private:
  std::string_view text_;
};

const json& require(const SourceText& src, const json& obj, const char* key,
                    const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    src.fail(where, "", where + ": missing key '" + key + "'");
  }
  return obj.at(key);
}

std::vector<std::string> string_list(const SourceText& src, const json& j,
                                     const std::string& where) {
  if (!j.is_array()) src.fail(where, "", where + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) src.fail(where, "", where + ": expected strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

double number(const SourceText& src, const json& j, const std::string& where) {
  if (!j.is_number()) src.fail(where, "", where + ": expected a number");
  return j.get<double>();
}

std::vector<double> vector_of(const SourceText& src, const json& j,
                              const std::string& where) {
  if (!j.is_array()) src.fail(where, "", where + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(number(src, e, where));
  return out;
}

Matrix matrix_of(const SourceText& src, const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) {
    src.fail(where, "", where + ": expected a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  std::vector<double> data;
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = vector_of(src, j[r], where);
    if (r == 0) cols = row.size();
    if (row.size() != cols) src.fail(where, "", where + ": ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(rows, cols, std::move(data));
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Dfsm dfsm_from_json(const SourceText& src, const json& j, const Alphabet& sigma) {
  Dfsm d;
  d.alphabet = sigma;
  d.states = string_list(src, require(src, j, "states", "dfsm"), "states");
  const std::size_t q = d.states.size();
  const std::size_t k = sigma.size();

  const json& init = require(src, j, "initial", "dfsm");
  if (init.is_string()) {
    auto idx = d.index_of(init.get<std::string>());
    if (!idx) src.fail("initial", init.get<std::string>(), "dfsm.initial: unknown state");
    d.initial = static_cast<std::uint32_t>(*idx);
  } else if (init.is_number_unsigned()) {
    d.initial = init.get<std::uint32_t>();
  } else {
    src.fail("initial", "", "dfsm.initial: expected a state name");
  }

  const json& verdicts = require(src, j, "verdict", "dfsm");
  for (const auto& name : string_list(src, verdicts, "verdict")) {
    auto v = parse_verdict(name);
    if (!v) src.fail("verdict", name, "dfsm.verdict: unknown verdict '" + name + "'");
    d.verdict.push_back(*v);
  }

  d.delta.assign(q * k, Dfsm::kNoState);
  const json& delta = require(src, j, "delta", "dfsm");
  if (!delta.is_object()) src.fail("delta", "", "dfsm.delta: expected an object");
  for (const auto& [from, row] : delta.items()) {
    auto m = d.index_of(from);
    if (!m) src.fail("delta", from, "dfsm.delta: unknown state '" + from + "'");
    if (!row.is_object()) src.fail("delta", from, "dfsm.delta: expected an object");
    for (const auto& [sym, to] : row.items()) {
      auto o = sigma.index_of(sym);
      if (!o) src.fail("delta", sym, "dfsm.delta: unknown symbol '" + sym + "'");
      if (!to.is_string()) src.fail("delta", sym, "dfsm.delta: expected a state name");
      auto target = d.index_of(to.get<std::string>());
      if (!target) {
        src.fail("delta", to.get<std::string>(),
                 "dfsm.delta: unknown state '" + to.get<std::string>() + "'");
      }
      d.delta[*m * k + *o] = static_cast<std::uint32_t>(*target);
    }
  }

  if (j.contains("absorbing_violations")) {
    const json& a = j.at("absorbing_violations");
    if (!a.is_boolean()) src.fail("absorbing_violations", "", "expected a boolean");
    d.absorbing_violations = a.get<bool>();
  }
  return d;
}

GapDist gap_from_json(const SourceText& src, const json& j) {
  if (!j.is_object()) src.fail("gap_dists", "", "gap_dists: expected objects");
  const json& id = require(src, j, "id", "gap_dists");
  if (!id.is_string()) src.fail("gap_dists", "", "gap_dists.id: expected a string");
  GapDist g{id.get<std::string>(), {}};
  if (j.contains("geometric")) {
    const double p = number(src, j.at("geometric"), "geometric");
    if (!(p > 0.0 && p <= 1.0)) {
      throw InvalidModel("gap_dists[" + g.id + "].geometric", "p outside (0,1]");
    }
    return GapDist::geometric(g.id, p);
  }
  const json& mass = require(src, j, "mass", "gap_dists");
  if (!mass.is_array()) src.fail("mass", "", "gap_dists.mass: expected pairs");
  for (const auto& pair : mass) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer()) {
      src.fail(g.id, "", "gap_dists.mass: expected [length, probability] pairs");
    }
    const auto len = pair[0].get<std::int64_t>();
    if (len < 0) throw InvalidModel("gap_dists[" + g.id + "].mass", "negative length");
    g.mass.emplace_back(static_cast<std::size_t>(len), number(src, pair[1], g.id));
  }
  std::sort(g.mass.begin(), g.mass.end());
  return g;
}

}  // namespace

std::pair<std::size_t, std::size_t> line_column(std::string_view text,
                                                std::size_t offset) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

Hmm hmm_from_json(const json& j) {
  const std::string text = j.dump();
  SourceText src(text);
  Hmm h;
  h.alphabet.symbols = string_list(src, require(src, j, "alphabet", ""), "alphabet");
  const json& hj = require(src, j, "hmm", "");
  h.pi = vector_of(src, require(src, hj, "pi", "hmm"), "pi");
  h.A = matrix_of(src, require(src, hj, "A", "hmm"), "A");
  h.B = matrix_of(src, require(src, hj, "B", "hmm"), "B");
  return h;
}

ModelBundle parse_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(line, col, e.what());
  }
  SourceText src(text);
  if (!j.is_object()) src.fail("", "", "model: expected a JSON object");

  ModelBundle b;
  b.hmm.alphabet.symbols =
      string_list(src, require(src, j, "alphabet", ""), "alphabet");
  const json& hj = require(src, j, "hmm", "");
  b.hmm.pi = vector_of(src, require(src, hj, "pi", "hmm"), "pi");
  b.hmm.A = matrix_of(src, require(src, hj, "A", "hmm"), "A");
  b.hmm.B = matrix_of(src, require(src, hj, "B", "hmm"), "B");
  b.dfsm = dfsm_from_json(src, require(src, j, "dfsm", ""), b.hmm.alphabet);

  if (j.contains("peek") && !j.at("peek").is_null()) {
    const json& pj = j.at("peek");
    PeekModel p;
    p.values = string_list(src, require(src, pj, "values", "peek"), "values");
    p.C = matrix_of(src, require(src, pj, "C", "peek"), "C");
    b.peek = std::move(p);
  }
  if (j.contains("gap_dists")) {
    const json& gj = j.at("gap_dists");
    if (!gj.is_array()) src.fail("gap_dists", "", "gap_dists: expected an array");
    for (const auto& g : gj) b.gaps.push_back(gap_from_json(src, g));
  }
  validate_model(b);
  return b;
}

ModelBundle load_model(const std::filesystem::path& path) {
  return parse_model(read_file(path));
}

json to_json(const Hmm& hmm) {
  return json{{"alphabet", hmm.alphabet.symbols},
              {"hmm",
               {{"pi", hmm.pi}, {"A", matrix_to_json(hmm.A)}, {"B", matrix_to_json(hmm.B)}}}};
}

json to_json(const ModelBundle& b) {
  json j = to_json(b.hmm);
  const auto& d = b.dfsm;
  json delta = json::object();
  for (std::size_t m = 0; m < d.num_states(); ++m) {
    json row = json::object();
    for (std::size_t o = 0; o < d.alphabet.size(); ++o) {
      const auto t = d.delta[m * d.alphabet.size() + o];
      if (t != Dfsm::kNoState) row[d.alphabet.symbols[o]] = d.states[t];
    }
    delta[d.states[m]] = std::move(row);
  }
  json verdicts = json::array();
  for (Verdict v : d.verdict) verdicts.push_back(std::string(to_string(v)));
  j["dfsm"] = {{"states", d.states},
               {"initial", d.states.at(d.initial)},
               {"verdict", verdicts},
               {"delta", delta},
               {"absorbing_violations", d.absorbing_violations}};
  if (b.peek) {
    j["peek"] = {{"values", b.peek->values}, {"C", matrix_to_json(b.peek->C)}};
  }
  json gaps = json::array();
  for (const auto& g : b.gaps) {
    json mass = json::array();
    for (const auto& [len, p] : g.mass) mass.push_back(json::array({len, p}));
    gaps.push_back({{"id", g.id}, {"mass", mass}});
  }
  j["gap_dists"] = gaps;
  return j;
}

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) {
  write_file(path, to_json(bundle).dump(2) + "\n");
}

std::string model_digest(const ModelBundle& bundle) {
  const std::string canonical = to_json(bundle).dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(canonical.data(), canonical.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex = "sha256:";
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, 0, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << contents;
  if (!out) throw InvalidArgument("write failed: " + path.string());
}

}  // namespace gapmon
