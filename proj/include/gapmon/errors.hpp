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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gapmon {

enum class ErrorKind {
  kInvalidModel,
  kParse,
  kImpossibleObservation,
  kDegenerateInput,
  kTableLimitExceeded,
  kUnknownLabel,
  kDigestMismatch,
  kBudgetExceeded,
  kInvalidArgument,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// `locator` is a path into the bundle such as "hmm.A.row[2]".
class InvalidModel : public Error {
 public:
  InvalidModel(std::string locator, const std::string& detail)
      : Error(ErrorKind::kInvalidModel,
              "invalid model at " + locator + ": " + detail),
        locator_(std::move(locator)) {}
  const std::string& locator() const noexcept { return locator_; }

 private:
  std::string locator_;
};

// Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& detail)
      : Error(ErrorKind::kParse, "parse error at line " + std::to_string(line) +
                                     ", column " + std::to_string(column) +
                                     ": " + detail),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ImpossibleObservation : public Error {
 public:
  explicit ImpossibleObservation(const std::string& what)
      : Error(ErrorKind::kImpossibleObservation, what) {}
};

class DegenerateInput : public Error {
 public:
  explicit DegenerateInput(const std::string& what)
      : Error(ErrorKind::kDegenerateInput, what) {}
};

class TableLimitExceeded : public Error {
 public:
  explicit TableLimitExceeded(std::size_t max_nodes)
      : Error(ErrorKind::kTableLimitExceeded,
              "precomputed table exceeds max_nodes=" +
                  std::to_string(max_nodes)),
        max_nodes_(max_nodes) {}
  std::size_t max_nodes() const noexcept { return max_nodes_; }

 private:
  std::size_t max_nodes_;
};

class UnknownLabel : public Error {
 public:
  explicit UnknownLabel(const std::string& label)
      : Error(ErrorKind::kUnknownLabel, "unknown label: " + label) {}
};

class DigestMismatch : public Error {
 public:
  DigestMismatch(const std::string& expected, const std::string& actual)
      : Error(ErrorKind::kDigestMismatch, "model digest mismatch: table has " +
                                              expected + ", model has " +
                                              actual) {}
};

class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(const std::string& what)
      : Error(ErrorKind::kBudgetExceeded, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorKind::kInvalidArgument, what) {}
};

}  // namespace gapmon
