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

#include "lateint/compressed_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "binary_io.hpp"
#include "lateint/parallel.hpp"

namespace lateint {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint32_t kIndexFormatVersion = 1;

inline std::uint8_t code_at(const std::uint8_t* packed, Index d) {
  return static_cast<std::uint8_t>((packed[d >> 2] >> ((d & 3) * 2)) & 0x3);
}

Eigen::RowVectorXd reconstruct(const Codebook& codebook, const BucketTable& buckets,
                               std::uint32_t centroid, const std::uint8_t* packed) {
  Eigen::RowVectorXd v = codebook.centroids.row(centroid).cast<double>();
  for (Index d = 0; d < v.size(); ++d) v[d] += buckets.values(code_at(packed, d), d);
  return v;
}

Eigen::RowVectorXf normalized_or_centroid(const Eigen::RowVectorXd& v, const Codebook& codebook,
                                          std::uint32_t centroid) {
  const double norm = v.norm();
  if (norm < kZeroNormThreshold) return codebook.centroids.row(centroid);
  return (v / norm).cast<float>();
}

// Nearest-rank quantile of a sorted sample.
float quantile(const std::vector<float>& sorted, double p) {
  const auto idx = static_cast<std::size_t>(std::floor(p * static_cast<double>(sorted.size() - 1)));
  return sorted[idx];
}

}  // namespace

std::vector<std::uint8_t> pack_codes(std::span<const std::uint8_t> codes) {
  std::vector<std::uint8_t> packed((codes.size() + 3) / 4, 0);
  for (std::size_t j = 0; j < codes.size(); ++j) {
    if (codes[j] > 3) throw Error("2-bit code out of range: " + std::to_string(codes[j]));
    packed[j / 4] |= static_cast<std::uint8_t>(codes[j] << ((j % 4) * 2));
  }
  return packed;
}

std::vector<std::uint8_t> unpack_codes(std::span<const std::uint8_t> packed, Index dim) {
  if (packed.size() != packed_size(dim)) throw FormatError("packed code length does not match dim");
  std::vector<std::uint8_t> codes(static_cast<std::size_t>(dim));
  for (Index d = 0; d < dim; ++d) codes[static_cast<std::size_t>(d)] = code_at(packed.data(), d);
  return codes;
}

std::uint8_t BucketTable::bucket(Index d, float residual) const {
  std::uint8_t b = 0;
  while (b < kBuckets - 1 && residual > cutoffs(b, d)) ++b;
  return b;
}

float BucketTable::lower_edge(Index d, int b) const { return b == 0 ? lower[d] : cutoffs(b - 1, d); }

float BucketTable::upper_edge(Index d, int b) const {
  return b == kBuckets - 1 ? upper[d] : cutoffs(b, d);
}

float BucketTable::width(Index d, int b) const { return upper_edge(d, b) - lower_edge(d, b); }

BucketTable fit_buckets(const Eigen::Ref<const TokenMatrixf>& residuals) {
  if (residuals.rows() == 0) throw InsufficientTokens("no residuals to fit buckets on");
  const Index dim = residuals.cols();
  BucketTable table;
  table.cutoffs.resize(kBuckets - 1, dim);
  table.values.resize(kBuckets, dim);
  table.lower.resize(dim);
  table.upper.resize(dim);
  std::vector<float> column(static_cast<std::size_t>(residuals.rows()));
  for (Index d = 0; d < dim; ++d) {
    for (Index r = 0; r < residuals.rows(); ++r) column[static_cast<std::size_t>(r)] = residuals(r, d);
    std::sort(column.begin(), column.end());
    for (int b = 0; b < kBuckets - 1; ++b) {
      table.cutoffs(b, d) = quantile(column, static_cast<double>(b + 1) / kBuckets);
    }
    for (int b = 0; b < kBuckets; ++b) {
      table.values(b, d) = quantile(column, (2.0 * b + 1.0) / (2.0 * kBuckets));
    }
    table.lower[d] = column.front();
    table.upper[d] = column.back();
  }
  return table;
}

Eigen::RowVectorXd reconstruct_residual(const ResidualCode& code, const Codebook& codebook,
                                        const BucketTable& buckets) {
  if (code.centroid >= static_cast<std::uint32_t>(codebook.size())) {
    throw BadCentroidId("centroid id " + std::to_string(code.centroid) + " out of range [0, " +
                        std::to_string(codebook.size()) + ")");
  }
  if (code.packed.size() != packed_size(codebook.dim())) {
    throw FormatError("packed code length does not match codebook dim");
  }
  return reconstruct(codebook, buckets, code.centroid, code.packed.data());
}

Eigen::RowVectorXf decompress(const ResidualCode& code, const Codebook& codebook,
                              const BucketTable& buckets) {
  return normalized_or_centroid(reconstruct_residual(code, codebook, buckets), codebook,
                                code.centroid);
}

ResidualCode CompressedIndex::code(std::size_t doc, Index position) const {
  const std::size_t token = doc_offsets_[doc] + static_cast<std::size_t>(position);
  const std::size_t bytes = packed_size(dim());
  ResidualCode out;
  out.centroid = centroid_ids_[token];
  out.packed.assign(codes_.begin() + static_cast<std::ptrdiff_t>(token * bytes),
                    codes_.begin() + static_cast<std::ptrdiff_t>((token + 1) * bytes));
  return out;
}

TokenMatrixf CompressedIndex::decompress_document(std::size_t doc) const {
  const std::size_t bytes = packed_size(dim());
  const Index rows = token_count(doc);
  TokenMatrixf out(rows, dim());
  for (Index t = 0; t < rows; ++t) {
    const std::size_t token = doc_offsets_[doc] + static_cast<std::size_t>(t);
    const auto c = centroid_ids_[token];
    out.row(t) = normalized_or_centroid(reconstruct(codebook_, buckets_, c, &codes_[token * bytes]),
                                        codebook_, c);
  }
  return out;
}

void CompressedIndex::rebuild_inverted_lists() {
  inverted_.assign(static_cast<std::size_t>(codebook_.size()), {});
  for (std::size_t doc = 0; doc < ids_.size(); ++doc) {
    for (std::size_t t = doc_offsets_[doc]; t < doc_offsets_[doc + 1]; ++t) {
      inverted_[centroid_ids_[t]].push_back(
          {static_cast<std::uint32_t>(doc), static_cast<std::uint16_t>(t - doc_offsets_[doc])});
    }
  }
}

namespace {

// Top-`nprobe` centroid indices for one row of similarities, ties to the lower index.
std::vector<Index> top_centroids(const Eigen::Ref<const Eigen::RowVectorXd>& row, std::size_t nprobe) {
  std::vector<Index> order(static_cast<std::size_t>(row.size()));
  std::iota(order.begin(), order.end(), Index{0});
  const std::size_t keep = std::min(nprobe, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](Index a, Index b) { return row[a] != row[b] ? row[a] > row[b] : a < b; });
  order.resize(keep);
  return order;
}

}  // namespace

std::vector<std::uint32_t> CompressedIndex::candidates(const TokenMatrixf& q, std::size_t nprobe) const {
  if (q.cols() != dim()) {
    throw DimMismatch("query dim " + std::to_string(q.cols()) + " != index dim " + std::to_string(dim()));
  }
  if (nprobe == 0) throw Error("nprobe must be >= 1");
  const Eigen::MatrixXd sim = detail::similarity(q, codebook_.centroids);
  std::vector<char> hit(ids_.size(), 0);
  for (Index i = 0; i < q.rows(); ++i) {
    for (Index c : top_centroids(sim.row(i), nprobe)) {
      for (const Posting& p : inverted_[static_cast<std::size_t>(c)]) hit[p.doc] = 1;
    }
  }
  std::vector<std::uint32_t> docs;
  for (std::size_t d = 0; d < hit.size(); ++d) {
    if (hit[d]) docs.push_back(static_cast<std::uint32_t>(d));
  }
  return docs;
}

RankedList CompressedIndex::search(const TokenMatrixf& q, const CompressedSearchParams& params,
                                   std::string query_id) const {
  if (params.k == 0) throw Error("k must be >= 1");
  if (params.candidate_cap < params.k) throw Error("candidate_cap must be >= k");
  std::vector<std::uint32_t> docs = candidates(q, params.nprobe);

  if (docs.size() > params.candidate_cap) {
    // Centroid-only MaxSim as the approximate score.
    const Eigen::MatrixXd sim = detail::similarity(q, codebook_.centroids);
    std::vector<ScoredDoc> approx;
    approx.reserve(docs.size());
    std::vector<std::uint32_t> by_position;
    for (std::uint32_t doc : docs) {
      double total = 0.0;
      for (Index i = 0; i < q.rows(); ++i) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t t = doc_offsets_[doc]; t < doc_offsets_[doc + 1]; ++t) {
          top = std::max(top, sim(i, centroid_ids_[t]));
        }
        total += top;
      }
      approx.push_back({ids_[doc], total});
    }
    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(params.candidate_cap),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        return ranks_before(approx[a], approx[b]);
                      });
    order.resize(params.candidate_cap);
    std::vector<std::uint32_t> kept;
    kept.reserve(order.size());
    for (std::size_t i : order) kept.push_back(docs[i]);
    std::sort(kept.begin(), kept.end());
    docs = std::move(kept);
  }

  std::vector<ScoredDoc> scored;
  scored.reserve(docs.size());
  for (std::uint32_t doc : docs) scored.push_back({ids_[doc], maxsim(q, decompress_document(doc))});
  finalize_ranking(scored, params.k);
  return {std::move(query_id), std::move(scored)};
}

CompressedIndex compress(const EmbeddingStore& store, const Codebook& codebook,
                         std::uint64_t sample_seed) {
  if (store.dim() != codebook.dim()) {
    throw DimMismatch("store dim " + std::to_string(store.dim()) + " != codebook dim " +
                      std::to_string(codebook.dim()));
  }
  if (store.empty()) throw EmptyStore("cannot compress an empty store");
  const TokenMatrixf tokens = stack_tokens(store);
  const Index total = tokens.rows();
  const Index dim = tokens.cols();

  CompressedIndex index;
  index.codebook_ = codebook;
  index.centroid_ids_ = assign_nearest(tokens, codebook.centroids);

  TokenMatrixf residuals(total, dim);
  for (Index t = 0; t < total; ++t) {
    residuals.row(t) = tokens.row(t) - codebook.centroids.row(index.centroid_ids_[static_cast<std::size_t>(t)]);
  }

  if (static_cast<std::size_t>(total) > kMaxResidualSample) {
    std::vector<Index> all(static_cast<std::size_t>(total));
    std::iota(all.begin(), all.end(), Index{0});
    std::vector<Index> picked;
    std::mt19937_64 rng(sample_seed);
    std::sample(all.begin(), all.end(), std::back_inserter(picked), kMaxResidualSample, rng);
    TokenMatrixf sample(static_cast<Index>(picked.size()), dim);
    for (std::size_t i = 0; i < picked.size(); ++i) sample.row(static_cast<Index>(i)) = residuals.row(picked[i]);
    index.buckets_ = fit_buckets(sample);
  } else {
    index.buckets_ = fit_buckets(residuals);
  }
  index.buckets_.lower = index.buckets_.lower.cwiseMin(residuals.colwise().minCoeff());
  index.buckets_.upper = index.buckets_.upper.cwiseMax(residuals.colwise().maxCoeff());

  const std::size_t bytes = packed_size(dim);
  index.codes_.assign(static_cast<std::size_t>(total) * bytes, 0);
  for (Index t = 0; t < total; ++t) {
    std::uint8_t* out = &index.codes_[static_cast<std::size_t>(t) * bytes];
    for (Index d = 0; d < dim; ++d) {
      out[d >> 2] |= static_cast<std::uint8_t>(index.buckets_.bucket(d, residuals(t, d)) << ((d & 3) * 2));
    }
  }

  index.ids_ = store.ids();
  index.doc_offsets_.assign(1, 0);
  for (std::size_t i = 0; i < store.size(); ++i) {
    index.doc_offsets_.push_back(index.doc_offsets_.back() + static_cast<std::size_t>(store.matrix(i).rows()));
  }
  index.rebuild_inverted_lists();
  return index;
}

RankedList search_compressed(const CompressedIndex& index, const TokenMatrixf& q, std::size_t k,
                             std::size_t nprobe, std::size_t candidate_cap, std::string query_id) {
  return index.search(q, {k, nprobe, candidate_cap}, std::move(query_id));
}

std::vector<RankedList> search_compressed_all(const CompressedIndex& index,
                                              const EmbeddingStore& queries,
                                              const CompressedSearchParams& params,
                                              std::size_t threads) {
  std::vector<RankedList> runs(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    runs[i] = index.search(queries.matrix(i), params, queries.id(i));
  });
  return runs;
}

EmbeddingStore decompress_store(const CompressedIndex& index) {
  EmbeddingStore store(index.dim(), Precision::kFloat32, TextKind::kDocument);
  for (std::size_t doc = 0; doc < index.size(); ++doc) {
    store.add(index.ids()[doc], index.decompress_document(doc));
  }
  return store;
}

void save_compressed_index(const CompressedIndex& index, const fs::path& dir,
                           const std::string& meta_json) {
  fs::create_directories(dir);
  const Index dim = index.dim();
  const Index k = index.codebook_.size();
  {
    detail::BinaryWriter out(dir / "codebook.bin");
    out.put_magic("LICB");
    out.put<std::uint32_t>(kIndexFormatVersion);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(k));
    out.put<std::uint32_t>(static_cast<std::uint32_t>(dim));
    out.put<std::uint64_t>(index.codebook_.seed);
    const auto& c = index.codebook_.centroids;
    out.put_span(std::span<const float>(c.data(), static_cast<std::size_t>(c.size())));
    out.close();
  }
  {
    detail::BinaryWriter out(dir / "residuals.bin");
    out.put_magic("LIRC");
    out.put<std::uint32_t>(kIndexFormatVersion);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(dim));
    out.put<std::uint32_t>(kResidualBits);
    const auto& b = index.buckets_;
    for (Index d = 0; d < dim; ++d) {
      for (int i = 0; i < kBuckets - 1; ++i) out.put<float>(b.cutoffs(i, d));
    }
    for (Index d = 0; d < dim; ++d) {
      for (int i = 0; i < kBuckets; ++i) out.put<float>(b.values(i, d));
    }
    out.put_span(std::span<const float>(b.lower.data(), static_cast<std::size_t>(dim)));
    out.put_span(std::span<const float>(b.upper.data(), static_cast<std::size_t>(dim)));
    out.put<std::uint64_t>(index.ids_.size());
    const std::size_t bytes = packed_size(dim);
    for (std::size_t doc = 0; doc < index.ids_.size(); ++doc) {
      const auto& id = index.ids_[doc];
      out.put<std::uint16_t>(static_cast<std::uint16_t>(id.size()));
      out.put_bytes(id);
      out.put<std::uint16_t>(static_cast<std::uint16_t>(index.token_count(doc)));
      for (std::size_t t = index.doc_offsets_[doc]; t < index.doc_offsets_[doc + 1]; ++t) {
        out.put<std::uint32_t>(index.centroid_ids_[t]);
        out.put_span(std::span<const std::uint8_t>(&index.codes_[t * bytes], bytes));
      }
    }
    out.close();
  }
  {
    detail::BinaryWriter out(dir / "ivf.bin");
    out.put_magic("LIIV");
    out.put<std::uint32_t>(kIndexFormatVersion);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(k));
    for (const auto& list : index.inverted_) {
      out.put_varint(list.size());
      std::uint32_t prev = 0;
      for (const Posting& p : list) {
        out.put_varint(p.doc - prev);
        out.put_varint(p.position);
        prev = p.doc;
      }
    }
    out.close();
  }
  json meta = json::parse(meta_json);
  meta["mode"] = "compressed";
  meta["k_centroids"] = k;
  meta["dim"] = dim;
  meta["seed"] = index.codebook_.seed;
  meta["documents"] = index.ids_.size();
  meta["total_tokens"] = index.total_tokens();
  meta["residual_bits"] = kResidualBits;
  meta["format_version"] = kIndexFormatVersion;
  std::ofstream out(dir / "meta.json", std::ios::trunc);
  out << meta.dump(2) << '\n';
  if (!out) throw Error("cannot write " + (dir / "meta.json").string());
}

CompressedIndex load_compressed_index(const fs::path& dir) {
  CompressedIndex index;
  {
    detail::BinaryReader in(dir / "codebook.bin");
    in.expect_magic("LICB");
    if (in.get<std::uint32_t>() != kIndexFormatVersion) throw FormatError("codebook.bin: bad version");
    const auto k = in.get<std::uint32_t>();
    const auto dim = in.get<std::uint32_t>();
    index.codebook_.seed = in.get<std::uint64_t>();
    index.codebook_.centroids.resize(k, dim);
    auto& c = index.codebook_.centroids;
    in.get_span(std::span<float>(c.data(), static_cast<std::size_t>(c.size())));
  }
  const Index dim = index.codebook_.dim();
  const auto k = static_cast<std::uint32_t>(index.codebook_.size());
  {
    detail::BinaryReader in(dir / "residuals.bin");
    in.expect_magic("LIRC");
    if (in.get<std::uint32_t>() != kIndexFormatVersion) throw FormatError("residuals.bin: bad version");
    if (in.get<std::uint32_t>() != static_cast<std::uint32_t>(dim)) {
      throw FormatError("residuals.bin: dim does not match codebook");
    }
    if (in.get<std::uint32_t>() != kResidualBits) throw FormatError("residuals.bin: unsupported code width");
    auto& b = index.buckets_;
    b.cutoffs.resize(kBuckets - 1, dim);
    b.values.resize(kBuckets, dim);
    b.lower.resize(dim);
    b.upper.resize(dim);
    for (Index d = 0; d < dim; ++d) {
      for (int i = 0; i < kBuckets - 1; ++i) b.cutoffs(i, d) = in.get<float>();
    }
    for (Index d = 0; d < dim; ++d) {
      for (int i = 0; i < kBuckets; ++i) b.values(i, d) = in.get<float>();
    }
    in.get_span(std::span<float>(b.lower.data(), static_cast<std::size_t>(dim)));
    in.get_span(std::span<float>(b.upper.data(), static_cast<std::size_t>(dim)));
    const auto docs = in.get<std::uint64_t>();
    const std::size_t bytes = packed_size(dim);
    index.doc_offsets_.assign(1, 0);
    for (std::uint64_t doc = 0; doc < docs; ++doc) {
      index.ids_.push_back(in.get_bytes(in.get<std::uint16_t>()));
      const auto tokens = in.get<std::uint16_t>();
      for (std::uint16_t t = 0; t < tokens; ++t) {
        const auto c = in.get<std::uint32_t>();
        if (c >= k) throw BadCentroidId("residuals.bin: centroid id " + std::to_string(c) + " out of range");
        index.centroid_ids_.push_back(c);
        const std::size_t at = index.codes_.size();
        index.codes_.resize(at + bytes);
        in.get_span(std::span<std::uint8_t>(&index.codes_[at], bytes));
      }
      index.doc_offsets_.push_back(index.doc_offsets_.back() + tokens);
    }
    if (!in.at_end()) throw FormatError("residuals.bin: trailing bytes");
  }
  index.rebuild_inverted_lists();
  {
    detail::BinaryReader in(dir / "ivf.bin");
    in.expect_magic("LIIV");
    if (in.get<std::uint32_t>() != kIndexFormatVersion) throw FormatError("ivf.bin: bad version");
    if (in.get<std::uint32_t>() != k) throw FormatError("ivf.bin: centroid count does not match codebook");
    for (std::uint32_t c = 0; c < k; ++c) {
      const auto count = in.get_varint();
      const auto& expected = index.inverted_[c];
      if (count != expected.size()) throw FormatError("ivf.bin: list " + std::to_string(c) + " size mismatch");
      std::uint64_t doc = 0;
      for (std::uint64_t i = 0; i < count; ++i) {
        doc += in.get_varint();
        const auto position = in.get_varint();
        if (doc != expected[i].doc || position != expected[i].position) {
          throw FormatError("ivf.bin: list " + std::to_string(c) + " disagrees with residuals.bin");
        }
      }
    }
    if (!in.at_end()) throw FormatError("ivf.bin: trailing bytes");
  }
  return index;
}

}  // namespace lateint
