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

#include "lateint/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string_view>
#include <unordered_set>

namespace lateint {

namespace {

constexpr Index kAssignBlock = 256;

std::string_view row_bytes(const TokenMatrixf& m, Index i) {
  return {reinterpret_cast<const char*>(m.row(i).data()), sizeof(float) * static_cast<std::size_t>(m.cols())};
}

}  // namespace

Index default_centroid_count(Index total_tokens) {
  if (total_tokens < 1) return 1;
  const auto target = static_cast<Index>(std::llround(16.0 * std::sqrt(static_cast<double>(total_tokens))));
  Index k = 1;
  while (k < target) k <<= 1;
  return std::min(k, total_tokens);
}

TokenMatrixf stack_tokens(const EmbeddingStore& store) {
  TokenMatrixf all(store.total_tokens(), store.dim());
  Index row = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& m = store.matrix(i);
    all.middleRows(row, m.rows()) = m;
    row += m.rows();
  }
  return all;
}

std::vector<std::uint32_t> assign_nearest(const TokenMatrixf& tokens, const TokenMatrixf& centroids,
                                          Eigen::VectorXf* best) {
  if (tokens.cols() != centroids.cols()) {
    throw DimMismatch("token dim " + std::to_string(tokens.cols()) + " != centroid dim " +
                      std::to_string(centroids.cols()));
  }
  std::vector<std::uint32_t> assignment(static_cast<std::size_t>(tokens.rows()));
  if (best) best->resize(tokens.rows());
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sim;
  for (Index start = 0; start < tokens.rows(); start += kAssignBlock) {
    const Index len = std::min(kAssignBlock, tokens.rows() - start);
    sim.noalias() = tokens.middleRows(start, len) * centroids.transpose();
    for (Index r = 0; r < len; ++r) {
      Index arg = 0;
      const float top = sim.row(r).maxCoeff(&arg);
      assignment[static_cast<std::size_t>(start + r)] = static_cast<std::uint32_t>(arg);
      if (best) (*best)[start + r] = top;
    }
  }
  return assignment;
}

Codebook train_codebook(const TokenMatrixf& tokens, Index k, int iterations, std::uint64_t seed) {
  const Index n = tokens.rows();
  if (k < 1) throw Error("centroid count must be >= 1");
  if (iterations < 1) throw Error("k-means iterations must be >= 1");
  if (k > n) {
    throw InsufficientTokens("cannot train " + std::to_string(k) + " centroids from " +
                             std::to_string(n) + " tokens");
  }
  const Index dim = tokens.cols();
  std::mt19937_64 rng(seed);

  // Seed with distinct token values first, duplicates only if we run out.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> chosen;
  std::vector<Index> duplicates;
  std::unordered_set<std::string_view> seen;
  for (Index idx : order) {
    if (static_cast<Index>(chosen.size()) == k) break;
    if (seen.insert(row_bytes(tokens, idx)).second) {
      chosen.push_back(idx);
    } else if (static_cast<Index>(duplicates.size()) < k) {
      duplicates.push_back(idx);
    }
  }
  for (std::size_t i = 0; static_cast<Index>(chosen.size()) < k; ++i) chosen.push_back(duplicates[i]);

  Codebook book;
  book.seed = seed;
  book.centroids.resize(k, dim);
  for (Index c = 0; c < k; ++c) book.centroids.row(c) = tokens.row(chosen[static_cast<std::size_t>(c)]);

  Eigen::VectorXf best;
  Eigen::MatrixXd sums(k, dim);
  std::vector<Index> counts(static_cast<std::size_t>(k));
  for (int it = 0; it < iterations; ++it) {
    const auto assignment = assign_nearest(tokens, book.centroids, &best);
    sums.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (Index t = 0; t < n; ++t) {
      const auto c = assignment[static_cast<std::size_t>(t)];
      sums.row(c) += tokens.row(t).cast<double>();
      ++counts[c];
    }
    std::vector<Index> empty;
    for (Index c = 0; c < k; ++c) {
      const double norm = sums.row(c).norm();
      if (counts[static_cast<std::size_t>(c)] == 0 || norm < kZeroNormThreshold) {
        empty.push_back(c);
      } else {
        book.centroids.row(c) = (sums.row(c) / norm).cast<float>();
      }
    }
    if (empty.empty()) continue;

    // Farthest tokens first; skip exact duplicates of an already used reseed.
    std::vector<Index> by_distance(static_cast<std::size_t>(n));
    std::iota(by_distance.begin(), by_distance.end(), Index{0});
    std::stable_sort(by_distance.begin(), by_distance.end(),
                     [&](Index a, Index b) { return best[a] < best[b]; });
    std::unordered_set<std::string_view> used;
    std::size_t next = 0;
    for (Index c : empty) {
      while (next < by_distance.size() && !used.insert(row_bytes(tokens, by_distance[next])).second) ++next;
      const Index pick = next < by_distance.size() ? by_distance[next++] : by_distance[static_cast<std::size_t>(c % n)];
      book.centroids.row(c) = tokens.row(pick);
    }
  }
  return book;
}

Codebook train_codebook(const EmbeddingStore& store, Index k, int iterations, std::uint64_t seed) {
  return train_codebook(stack_tokens(store), k, iterations, seed);
}

}  // namespace lateint
