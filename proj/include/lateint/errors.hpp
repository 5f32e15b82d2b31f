// Copyright 2026 The lateint Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lateint {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LATEINT_DEFINE_ERROR(Name)   \
  class Name : public Error {        \
   public:                           \
    using Error::Error;              \
  };

LATEINT_DEFINE_ERROR(FormatError)
LATEINT_DEFINE_ERROR(DimMismatch)
LATEINT_DEFINE_ERROR(NonFiniteScore)
LATEINT_DEFINE_ERROR(EmptyStore)
LATEINT_DEFINE_ERROR(InsufficientTokens)
LATEINT_DEFINE_ERROR(BadCentroidId)
LATEINT_DEFINE_ERROR(DuplicateDocId)
LATEINT_DEFINE_ERROR(EmptyRanking)
LATEINT_DEFINE_ERROR(MissingRun)
LATEINT_DEFINE_ERROR(InsufficientCandidates)
LATEINT_DEFINE_ERROR(MissingTeacherScore)
LATEINT_DEFINE_ERROR(ConfigError)

#undef LATEINT_DEFINE_ERROR

class ZeroVectorRow : public Error {
 public:
  explicit ZeroVectorRow(std::ptrdiff_t row)
      : Error("zero vector at row " + std::to_string(row)), row_(row) {}
  std::ptrdiff_t row() const noexcept { return row_; }

 private:
  std::ptrdiff_t row_;
};

// Token count over the kind-specific limit.
class LengthError : public Error {
 public:
  LengthError(std::string id, std::ptrdiff_t tokens, std::ptrdiff_t limit)
      : Error("entry '" + id + "' has " + std::to_string(tokens) +
              " tokens, limit is " + std::to_string(limit)),
        id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace lateint
