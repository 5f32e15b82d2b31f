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
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lateint/embedding_store.hpp"
#include "lateint/tokenizer.hpp"
#include "lateint/types.hpp"

namespace lateint {

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
};

struct Bm25Posting {
  std::uint32_t doc = 0;
  std::uint32_t tf = 0;
};

inline constexpr const char* kIdfFormula = "ln((N - df + 0.5) / (df + 0.5) + 1)";

class Bm25Index {
 public:
  const Tokenizer& tokenizer() const { return tokenizer_; }
  const Bm25Params& params() const { return params_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::uint32_t doc_length(std::size_t doc) const { return lengths_[doc]; }
  double average_length() const { return avgdl_; }
  std::size_t vocabulary_size() const { return postings_.size(); }

  const std::vector<Bm25Posting>* postings(const std::string& term) const;
  std::size_t document_frequency(const std::string& term) const;
  double idf(const std::string& term) const;

  // Scores every document containing at least one query term. Repeated query
  // terms contribute once per occurrence.
  RankedList search(std::string_view query, std::size_t k, std::string query_id = {}) const;

 private:
  friend Bm25Index build_bm25(const std::vector<CorpusRecord>&, const Tokenizer&, Bm25Params);
  friend void save_bm25(const Bm25Index&, const std::filesystem::path&);
  friend Bm25Index load_bm25(const std::filesystem::path&);

  double term_weight(double idf, std::uint32_t tf, std::uint32_t length) const;

  Tokenizer tokenizer_;
  Bm25Params params_;
  std::vector<std::string> ids_;
  std::vector<std::uint32_t> lengths_;
  double avgdl_ = 0.0;
  std::unordered_map<std::string, std::vector<Bm25Posting>> postings_;
};

Bm25Index build_bm25(const std::vector<CorpusRecord>& corpus, const Tokenizer& tokenizer,
                     Bm25Params params = {});

// Throws when `tokenizer` differs from the one the index was built with.
RankedList search_bm25(const Bm25Index& index, std::string_view query, const Tokenizer& tokenizer,
                       std::size_t k, std::string query_id = {});

// Directory with postings.bin, doclens.bin and meta.json.
void save_bm25(const Bm25Index& index, const std::filesystem::path& dir);
Bm25Index load_bm25(const std::filesystem::path& dir);

}  // namespace lateint
