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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lateint/errors.hpp"
#include "lateint/types.hpp"

namespace lateint {

inline constexpr double kZeroNormThreshold = 1e-12;

// Row-wise L2 normalization. Norms are accumulated in double.
template <typename Derived>
TokenMatrix<typename Derived::Scalar> normalize_matrix(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  TokenMatrix<Scalar> out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    const Eigen::RowVectorXd row = m.row(i).template cast<double>();
    const double norm = row.norm();
    if (!(norm >= kZeroNormThreshold)) throw ZeroVectorRow(i);
    out.row(i) = (row / norm).template cast<Scalar>();
  }
  return out;
}

// Rounds every value to the nearest value representable in `p`.
TokenMatrixf round_to_precision(const TokenMatrixf& m, Precision p);

struct CorpusRecord {
  std::string id;
  std::string text;
};

// JSONL with `id` and `text` per line. Ids must be non-empty and unique.
std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::vector<CorpusRecord>& records, const std::filesystem::path& path);

struct StoreManifest {
  std::string corpus;
  std::int64_t created_unix = 0;
  std::size_t entry_count = 0;
};

class EmbeddingStore {
 public:
  EmbeddingStore(Index dim, Precision precision, TextKind kind);

  // Validates dim, length limit and id uniqueness, normalizes rows that are not
  // already unit length, and rounds to the store precision.
  void add(std::string id, const TokenMatrixf& tokens);

  Index dim() const { return dim_; }
  Precision precision() const { return precision_; }
  TextKind kind() const { return kind_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  const std::string& id(std::size_t i) const { return ids_[i]; }
  const TokenMatrixf& matrix(std::size_t i) const { return matrices_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::optional<std::size_t> find(const std::string& id) const;
  Index total_tokens() const { return total_tokens_; }

  StoreManifest manifest() const;
  const std::string& corpus_name() const { return corpus_; }
  void set_corpus_name(std::string name) { corpus_ = std::move(name); }
  std::int64_t created_unix() const { return created_unix_; }
  void set_created_unix(std::int64_t t) { created_unix_ = t; }

  friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b);

 private:
  friend EmbeddingStore cast_precision(const EmbeddingStore&, Precision);

  Index dim_;
  Precision precision_;
  TextKind kind_;
  std::vector<std::string> ids_;
  std::vector<TokenMatrixf> matrices_;
  std::unordered_map<std::string, std::size_t> index_;
  Index total_tokens_ = 0;
  std::string corpus_;
  std::int64_t created_unix_ = 0;
};

EmbeddingStore cast_precision(const EmbeddingStore& store, Precision target);

// Binary embedding file: magic "LIEM", u32 version, u32 dim, u8 precision,
// u64 entry count, then per entry u16 id length, id bytes, u16 token count and
// token_count * dim row-major values. Little-endian throughout.
inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

EmbeddingStore ingest_embeddings(const std::filesystem::path& path, TextKind kind);
void write_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);

// A store directory holds `embeddings.bin` and `manifest.json`.
void save_store(const EmbeddingStore& store, const std::filesystem::path& dir);
EmbeddingStore load_store(const std::filesystem::path& dir);

// SOURCE_DATE_EPOCH when set, wall clock otherwise.
std::int64_t creation_timestamp();

}  // namespace lateint
