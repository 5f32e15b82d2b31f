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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace lateint {

using Index = Eigen::Index;

// One row per token, row-major so a token is a contiguous span.
template <typename Scalar>
using TokenMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using TokenMatrixf = TokenMatrix<float>;
using TokenMatrixh = TokenMatrix<Eigen::half>;
using TokenMatrixd = TokenMatrix<double>;

enum class Precision : std::uint8_t { kFloat32 = 0, kFloat16 = 1 };

enum class TextKind { kDocument, kQuery };

inline constexpr Index kMaxDocumentTokens = 512;
inline constexpr Index kMaxQueryTokens = 64;

inline constexpr Index max_tokens(TextKind kind) {
  return kind == TextKind::kDocument ? kMaxDocumentTokens : kMaxQueryTokens;
}

std::string_view to_string(Precision p);
Precision parse_precision(std::string_view s);
std::string_view to_string(TextKind k);
TextKind parse_kind(std::string_view s);

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

// Descending score, ties by ascending document id.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

struct RankedList {
  std::string query_id;
  std::vector<ScoredDoc> entries;
};

// Sorts candidates by the ranking contract and keeps at most k of them.
void finalize_ranking(std::vector<ScoredDoc>& candidates, std::size_t k);

}  // namespace lateint
