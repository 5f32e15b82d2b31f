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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lateint/embedding_store.hpp"
#include "lateint/kmeans.hpp"
#include "lateint/scoring.hpp"

namespace lateint {

inline constexpr int kResidualBits = 2;
inline constexpr int kBuckets = 1 << kResidualBits;
inline constexpr std::size_t kMaxResidualSample = std::size_t{1} << 20;

// Packs 2-bit codes four per byte, dimension j at bits 2*(j%4) of byte j/4.
std::vector<std::uint8_t> pack_codes(std::span<const std::uint8_t> codes);
std::vector<std::uint8_t> unpack_codes(std::span<const std::uint8_t> packed, Index dim);

inline constexpr std::size_t packed_size(Index dim) { return static_cast<std::size_t>((dim + 3) / 4); }

// Per-dimension residual quantizer shared by all tokens. Cutoffs are the
// quartiles of the residual sample, reconstruction values the 1/8, 3/8, 5/8
// and 7/8 quantiles (the median within each bucket). `lower`/`upper` bound
// every residual the index was built from, which closes the outer buckets.
struct BucketTable {
  Eigen::Matrix<float, kBuckets - 1, Eigen::Dynamic> cutoffs;
  Eigen::Matrix<float, kBuckets, Eigen::Dynamic> values;
  Eigen::RowVectorXf lower;
  Eigen::RowVectorXf upper;

  Index dim() const { return cutoffs.cols(); }
  std::uint8_t bucket(Index d, float residual) const;
  float width(Index d, int bucket) const;
  float lower_edge(Index d, int bucket) const;
  float upper_edge(Index d, int bucket) const;
};

// Quantile bucket table fitted to residual rows (rows x dim).
BucketTable fit_buckets(const Eigen::Ref<const TokenMatrixf>& residuals);

struct ResidualCode {
  std::uint32_t centroid = 0;
  std::vector<std::uint8_t> packed;
};

// centroid + per-dimension reconstruction values, before normalization.
Eigen::RowVectorXd reconstruct_residual(const ResidualCode& code, const Codebook& codebook,
                                        const BucketTable& buckets);

// Unit-normalized reconstruction of a token.
Eigen::RowVectorXf decompress(const ResidualCode& code, const Codebook& codebook,
                              const BucketTable& buckets);

struct Posting {
  std::uint32_t doc = 0;
  std::uint16_t position = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

struct CompressedSearchParams {
  std::size_t k = 10;
  std::size_t nprobe = 4;
  std::size_t candidate_cap = 8192;
};

class CompressedIndex {
 public:
  CompressedIndex() = default;

  const Codebook& codebook() const { return codebook_; }
  const BucketTable& buckets() const { return buckets_; }
  Index dim() const { return codebook_.dim(); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  Index total_tokens() const { return static_cast<Index>(centroid_ids_.size()); }
  Index token_count(std::size_t doc) const {
    return static_cast<Index>(doc_offsets_[doc + 1] - doc_offsets_[doc]);
  }

  ResidualCode code(std::size_t doc, Index position) const;
  std::uint32_t centroid_of(std::size_t doc, Index position) const {
    return centroid_ids_[doc_offsets_[doc] + static_cast<std::size_t>(position)];
  }
  TokenMatrixf decompress_document(std::size_t doc) const;
  std::span<const Posting> inverted_list(std::uint32_t centroid) const {
    return inverted_[centroid];
  }

  // Documents reached through the nprobe nearest centroids of each query token.
  std::vector<std::uint32_t> candidates(const TokenMatrixf& q, std::size_t nprobe) const;

  RankedList search(const TokenMatrixf& q, const CompressedSearchParams& params,
                    std::string query_id = {}) const;

 private:
  friend CompressedIndex compress(const EmbeddingStore&, const Codebook&, std::uint64_t);
  friend CompressedIndex load_compressed_index(const std::filesystem::path&);
  friend void save_compressed_index(const CompressedIndex&, const std::filesystem::path&,
                                    const std::string&);

  void rebuild_inverted_lists();

  Codebook codebook_;
  BucketTable buckets_;
  std::vector<std::string> ids_;
  std::vector<std::size_t> doc_offsets_{0};
  std::vector<std::uint32_t> centroid_ids_;
  std::vector<std::uint8_t> codes_;  // total_tokens * packed_size(dim)
  std::vector<std::vector<Posting>> inverted_;
};

// Maps every token to its nearest centroid and quantizes the residual. When the
// store has more than 2^20 tokens the bucket table is fitted on a seeded sample.
CompressedIndex compress(const EmbeddingStore& store, const Codebook& codebook,
                         std::uint64_t sample_seed = 0);

RankedList search_compressed(const CompressedIndex& index, const TokenMatrixf& q, std::size_t k,
                             std::size_t nprobe, std::size_t candidate_cap,
                             std::string query_id = {});

std::vector<RankedList> search_compressed_all(const CompressedIndex& index,
                                              const EmbeddingStore& queries,
                                              const CompressedSearchParams& params,
                                              std::size_t threads = 1);

// Fully decompressed copy of the index as a float32 document store.
EmbeddingStore decompress_store(const CompressedIndex& index);

// Writes codebook.bin, residuals.bin, ivf.bin and meta.json. `meta_json` is a
// serialized JSON object merged into meta.json.
void save_compressed_index(const CompressedIndex& index, const std::filesystem::path& dir,
                           const std::string& meta_json = "{}");
CompressedIndex load_compressed_index(const std::filesystem::path& dir);

}  // namespace lateint
