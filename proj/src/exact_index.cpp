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

#include "lateint/exact_index.hpp"

#include <fstream>

#include <json.hpp>

#include "lateint/parallel.hpp"

namespace lateint {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::variant<FlatIndex<float>, FlatIndex<Eigen::half>> make_impl(const EmbeddingStore& store,
                                                                  Precision precision) {
  if (store.kind() != TextKind::kDocument) throw Error("exact index needs a document store");
  if (store.empty()) throw EmptyStore("cannot build an index over an empty store");
  if (precision == Precision::kFloat32) return FlatIndex<float>(store);
  return FlatIndex<Eigen::half>(store);
}

}  // namespace

ExactIndex::ExactIndex(const EmbeddingStore& store, Precision precision)
    : impl_(make_impl(store, precision)) {}

Precision ExactIndex::precision() const {
  return std::holds_alternative<FlatIndex<float>>(impl_) ? Precision::kFloat32 : Precision::kFloat16;
}

Index ExactIndex::dim() const {
  return std::visit([](const auto& flat) { return flat.dim(); }, impl_);
}

std::size_t ExactIndex::size() const {
  return std::visit([](const auto& flat) { return flat.size(); }, impl_);
}

const std::vector<std::string>& ExactIndex::ids() const {
  return std::visit([](const auto& flat) -> const std::vector<std::string>& { return flat.ids(); },
                    impl_);
}

TokenMatrixf ExactIndex::document(std::size_t i) const {
  return std::visit([i](const auto& flat) -> TokenMatrixf { return flat.matrix(i).template cast<float>(); },
                    impl_);
}

RankedList ExactIndex::search(const TokenMatrixf& q, std::size_t k, std::string query_id) const {
  return std::visit([&](const auto& flat) { return flat.search(q, k, std::move(query_id)); }, impl_);
}

ExactIndex build_exact(const EmbeddingStore& store, Precision precision) {
  return ExactIndex(store, precision);
}

RankedList search_exact(const ExactIndex& index, const TokenMatrixf& q, std::size_t k,
                        std::string query_id) {
  return index.search(q, k, std::move(query_id));
}

std::vector<RankedList> search_exact_all(const ExactIndex& index, const EmbeddingStore& queries,
                                         std::size_t k, std::size_t threads) {
  std::vector<RankedList> runs(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    runs[i] = index.search(queries.matrix(i), k, queries.id(i));
  });
  return runs;
}

void save_exact_index(const ExactIndex& index, const fs::path& dir) {
  fs::create_directories(dir);
  EmbeddingStore store(index.dim(), index.precision(), TextKind::kDocument);
  for (std::size_t i = 0; i < index.size(); ++i) store.add(index.ids()[i], index.document(i));
  write_embeddings(store, dir / "embeddings.bin");
  const json meta = {
      {"mode", "exact"},
      {"precision", to_string(index.precision())},
      {"documents", index.size()},
      {"dim", index.dim()},
      {"total_tokens", store.total_tokens()},
  };
  std::ofstream out(dir / "meta.json", std::ios::trunc);
  out << meta.dump(2) << '\n';
  if (!out) throw Error("cannot write " + (dir / "meta.json").string());
}

ExactIndex load_exact_index(const fs::path& dir) {
  EmbeddingStore store = ingest_embeddings(dir / "embeddings.bin", TextKind::kDocument);
  return ExactIndex(store, store.precision());
}

}  // namespace lateint
