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

#include "lateint/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "binary_io.hpp"

namespace lateint {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint32_t kBm25FormatVersion = 1;

}  // namespace

const std::vector<Bm25Posting>* Bm25Index::postings(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

std::size_t Bm25Index::document_frequency(const std::string& term) const {
  const auto* list = postings(term);
  return list ? list->size() : 0;
}

double Bm25Index::idf(const std::string& term) const {
  const auto n = static_cast<double>(ids_.size());
  const auto df = static_cast<double>(document_frequency(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double Bm25Index::term_weight(double idf, std::uint32_t tf, std::uint32_t length) const {
  const double norm = avgdl_ > 0.0 ? static_cast<double>(length) / avgdl_ : 1.0;
  const double f = static_cast<double>(tf);
  return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * (1.0 - params_.b + params_.b * norm));
}

RankedList Bm25Index::search(std::string_view query, std::size_t k, std::string query_id) const {
  if (k == 0) throw Error("k must be >= 1");
  std::vector<double> scores(ids_.size(), 0.0);
  std::vector<char> touched(ids_.size(), 0);
  for (const auto& term : tokenize(query, tokenizer_)) {
    const auto* list = postings(term);
    if (!list) continue;
    const double w = idf(term);
    for (const auto& p : *list) {
      scores[p.doc] += term_weight(w, p.tf, lengths_[p.doc]);
      touched[p.doc] = 1;
    }
  }
  std::vector<ScoredDoc> hits;
  for (std::size_t d = 0; d < ids_.size(); ++d) {
    if (touched[d]) hits.push_back({ids_[d], scores[d]});
  }
  finalize_ranking(hits, k);
  return {std::move(query_id), std::move(hits)};
}

Bm25Index build_bm25(const std::vector<CorpusRecord>& corpus, const Tokenizer& tokenizer,
                     Bm25Params params) {
  if (!(params.k1 >= 0.0)) throw Error("k1 must be >= 0");
  if (!(params.b >= 0.0 && params.b <= 1.0)) throw Error("b must be in [0, 1]");
  Bm25Index index;
  index.tokenizer_ = tokenizer;
  index.params_ = params;
  std::unordered_map<std::string, std::size_t> seen;
  double total_length = 0.0;
  for (const auto& record : corpus) {
    if (!seen.emplace(record.id, index.ids_.size()).second) {
      throw DuplicateDocId("duplicate document id '" + record.id + "'");
    }
    const auto doc = static_cast<std::uint32_t>(index.ids_.size());
    std::map<std::string, std::uint32_t> counts;
    const auto tokens = tokenize(record.text, tokenizer);
    for (const auto& t : tokens) ++counts[t];
    for (const auto& [term, tf] : counts) index.postings_[term].push_back({doc, tf});
    index.ids_.push_back(record.id);
    index.lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    total_length += static_cast<double>(tokens.size());
  }
  index.avgdl_ = index.ids_.empty() ? 0.0 : total_length / static_cast<double>(index.ids_.size());
  return index;
}

RankedList search_bm25(const Bm25Index& index, std::string_view query, const Tokenizer& tokenizer,
                       std::size_t k, std::string query_id) {
  if (!(tokenizer == index.tokenizer())) {
    throw Error("query tokenizer " + std::string(to_string(tokenizer.scheme)) +
                " does not match index tokenizer " + std::string(to_string(index.tokenizer().scheme)));
  }
  return index.search(query, k, std::move(query_id));
}

void save_bm25(const Bm25Index& index, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::vector<const std::string*> terms;
    terms.reserve(index.postings_.size());
    for (const auto& [term, list] : index.postings_) terms.push_back(&term);
    std::sort(terms.begin(), terms.end(), [](const auto* a, const auto* b) { return *a < *b; });

    detail::BinaryWriter out(dir / "postings.bin");
    out.put_magic("LIBP");
    out.put<std::uint32_t>(kBm25FormatVersion);
    out.put<std::uint64_t>(terms.size());
    for (const auto* term : terms) {
      const auto& list = index.postings_.at(*term);
      out.put_varint(term->size());
      out.put_bytes(*term);
      out.put_varint(list.size());
      std::uint32_t prev = 0;
      for (const auto& p : list) {
        out.put_varint(p.doc - prev);
        out.put_varint(p.tf);
        prev = p.doc;
      }
    }
    out.close();
  }
  {
    detail::BinaryWriter out(dir / "doclens.bin");
    out.put_magic("LIDL");
    out.put<std::uint32_t>(kBm25FormatVersion);
    out.put<std::uint64_t>(index.ids_.size());
    for (std::size_t d = 0; d < index.ids_.size(); ++d) {
      out.put_varint(index.ids_[d].size());
      out.put_bytes(index.ids_[d]);
      out.put<std::uint32_t>(index.lengths_[d]);
    }
    out.close();
  }
  const json meta = {
      {"tokenizer", to_string(index.tokenizer_.scheme)},
      {"lowercase", index.tokenizer_.lowercase},
      {"k1", index.params_.k1},
      {"b", index.params_.b},
      {"documents", index.ids_.size()},
      {"vocabulary", index.postings_.size()},
      {"average_length", index.avgdl_},
      {"idf", kIdfFormula},
      {"format_version", kBm25FormatVersion},
  };
  std::ofstream out(dir / "meta.json", std::ios::trunc);
  out << meta.dump(2) << '\n';
  if (!out) throw Error("cannot write " + (dir / "meta.json").string());
}

Bm25Index load_bm25(const fs::path& dir) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw FormatError("missing meta.json in " + dir.string());
  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::exception& e) {
    throw FormatError((dir / "meta.json").string() + ": " + e.what());
  }
  Bm25Index index;
  index.tokenizer_.scheme = parse_tokenizer_scheme(meta.at("tokenizer").get<std::string>());
  index.tokenizer_.lowercase = meta.at("lowercase").get<bool>();
  index.params_.k1 = meta.at("k1").get<double>();
  index.params_.b = meta.at("b").get<double>();
  {
    detail::BinaryReader in(dir / "doclens.bin");
    in.expect_magic("LIDL");
    if (in.get<std::uint32_t>() != kBm25FormatVersion) throw FormatError("doclens.bin: bad version");
    const auto n = in.get<std::uint64_t>();
    double total = 0.0;
    for (std::uint64_t d = 0; d < n; ++d) {
      index.ids_.push_back(in.get_bytes(in.get_varint()));
      index.lengths_.push_back(in.get<std::uint32_t>());
      total += index.lengths_.back();
    }
    index.avgdl_ = n == 0 ? 0.0 : total / static_cast<double>(n);
  }
  {
    detail::BinaryReader in(dir / "postings.bin");
    in.expect_magic("LIBP");
    if (in.get<std::uint32_t>() != kBm25FormatVersion) throw FormatError("postings.bin: bad version");
    const auto terms = in.get<std::uint64_t>();
    for (std::uint64_t t = 0; t < terms; ++t) {
      std::string term = in.get_bytes(in.get_varint());
      const auto count = in.get_varint();
      std::vector<Bm25Posting> list;
      list.reserve(count);
      std::uint64_t doc = 0;
      for (std::uint64_t i = 0; i < count; ++i) {
        doc += in.get_varint();
        if (doc >= index.ids_.size()) throw FormatError("postings.bin: document index out of range");
        list.push_back({static_cast<std::uint32_t>(doc), static_cast<std::uint32_t>(in.get_varint())});
      }
      index.postings_.emplace(std::move(term), std::move(list));
    }
    if (!in.at_end()) throw FormatError("postings.bin: trailing bytes");
  }
  return index;
}

}  // namespace lateint
