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
#include <vector>

#include "lateint/embedding_store.hpp"

namespace lateint {

struct Codebook {
  TokenMatrixf centroids;  // K x dim, unit rows
  std::uint64_t seed = 0;

  Index size() const { return centroids.rows(); }
  Index dim() const { return centroids.cols(); }
};

// round(16 * sqrt(total_tokens)) rounded up to a power of two, capped at the
// token count.
Index default_centroid_count(Index total_tokens);

// All token rows of a store stacked in store order.
TokenMatrixf stack_tokens(const EmbeddingStore& store);

// Index of the max-dot centroid for every row, lowest index on ties. When
// `best` is given it receives the winning dot products.
std::vector<std::uint32_t> assign_nearest(const TokenMatrixf& tokens, const TokenMatrixf& centroids,
                                          Eigen::VectorXf* best = nullptr);

// Spherical k-means: assign by max dot, re-estimate each centroid as the
// normalized mean of its members. Initial centroids are a seeded sample of
// distinct token rows; clusters that end up empty are re-seeded from the
// tokens farthest from their current centroid.
Codebook train_codebook(const TokenMatrixf& tokens, Index k, int iterations, std::uint64_t seed);
Codebook train_codebook(const EmbeddingStore& store, Index k, int iterations, std::uint64_t seed);

}  // namespace lateint
