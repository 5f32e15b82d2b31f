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

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "lateint/embedding_store.hpp"
#include "lateint/scoring.hpp"

namespace lateint {

// Flat index holding every document matrix at storage type Scalar. Scores are
// always accumulated in double, whatever the storage type.
template <typename Scalar>
class FlatIndex {
 public:
  explicit FlatIndex(const EmbeddingStore& store) : dim_(store.dim()), ids_(store.ids()) {
    docs_.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) docs_.push_back(store.matrix(i).cast<Scalar>());
  }

  Index dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const TokenMatrix<Scalar>& matrix(std::size_t i) const { return docs_[i]; }

  template <typename Derived>
  RankedList search(const Eigen::MatrixBase<Derived>& q, std::size_t k, std::string query_id) const {
    if (q.cols() != dim_) {
      throw DimMismatch("query dim " + std::to_string(q.cols()) + " != index dim " +
                        std::to_string(dim_));
    }
    if (k == 0) throw Error("k must be >= 1");
    std::vector<ScoredDoc> scored;
    scored.reserve(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) scored.push_back({ids_[i], maxsim(q, docs_[i])});
    finalize_ranking(scored, k);
    return {std::move(query_id), std::move(scored)};
  }

 private:
  Index dim_;
  std::vector<std::string> ids_;
  std::vector<TokenMatrix<Scalar>> docs_;
};

class ExactIndex {
 public:
  ExactIndex(const EmbeddingStore& store, Precision precision);

  Precision precision() const;
  Index dim() const;
  std::size_t size() const;
  const std::vector<std::string>& ids() const;

  // Document i at float32 (exact widening of the stored values).
  TokenMatrixf document(std::size_t i) const;

  RankedList search(const TokenMatrixf& q, std::size_t k, std::string query_id = {}) const;

 private:
  std::variant<FlatIndex<float>, FlatIndex<Eigen::half>> impl_;
};

ExactIndex build_exact(const EmbeddingStore& store, Precision precision);

RankedList search_exact(const ExactIndex& index, const TokenMatrixf& q, std::size_t k,
                        std::string query_id = {});

// One ranked list per query in the store, in store order.
std::vector<RankedList> search_exact_all(const ExactIndex& index, const EmbeddingStore& queries,
                                         std::size_t k, std::size_t threads = 1);

// Directory with `embeddings.bin` at the index precision and `meta.json`.
void save_exact_index(const ExactIndex& index, const std::filesystem::path& dir);
ExactIndex load_exact_index(const std::filesystem::path& dir);

}  // namespace lateint
