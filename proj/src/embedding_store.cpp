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

#include "lateint/embedding_store.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <span>

#include <json.hpp>

#include "binary_io.hpp"

namespace lateint {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Precision p) {
  return p == Precision::kFloat32 ? "float32" : "float16";
}

Precision parse_precision(std::string_view s) {
  if (s == "float32" || s == "f32" || s == "32") return Precision::kFloat32;
  if (s == "float16" || s == "f16" || s == "16") return Precision::kFloat16;
  throw Error("unknown precision: " + std::string(s));
}

std::string_view to_string(TextKind k) { return k == TextKind::kDocument ? "doc" : "query"; }

TextKind parse_kind(std::string_view s) {
  if (s == "doc" || s == "document") return TextKind::kDocument;
  if (s == "query") return TextKind::kQuery;
  throw Error("unknown kind: " + std::string(s));
}

void finalize_ranking(std::vector<ScoredDoc>& candidates, std::size_t k) {
  const std::size_t keep = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), ranks_before);
  candidates.resize(keep);
}

TokenMatrixf round_to_precision(const TokenMatrixf& m, Precision p) {
  if (p == Precision::kFloat32) return m;
  return m.cast<Eigen::half>().cast<float>();
}

namespace {

double unit_tolerance(Precision p) { return p == Precision::kFloat32 ? 1e-6 : 1e-3; }

}  // namespace

std::vector<CorpusRecord> read_corpus(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus: " + path.string());
  std::vector<CorpusRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("text") ||
        !obj["id"].is_string() || !obj["text"].is_string()) {
      throw ParseError(path.string(), lineno, "expected {\"id\": string, \"text\": string}");
    }
    CorpusRecord rec{obj["id"].get<std::string>(), obj["text"].get<std::string>()};
    if (rec.id.empty()) throw ParseError(path.string(), lineno, "empty id");
    if (!seen.emplace(rec.id, lineno).second) {
      throw DuplicateDocId("duplicate id '" + rec.id + "' at " + path.string() + ":" +
                           std::to_string(lineno));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_corpus(const std::vector<CorpusRecord>& records, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  for (const auto& r : records) out << json{{"id", r.id}, {"text", r.text}}.dump() << '\n';
}

EmbeddingStore::EmbeddingStore(Index dim, Precision precision, TextKind kind)
    : dim_(dim), precision_(precision), kind_(kind) {
  if (dim < 1) throw FormatError("embedding dim must be >= 1");
}

void EmbeddingStore::add(std::string id, const TokenMatrixf& tokens) {
  if (id.empty()) throw FormatError("empty id");
  if (tokens.cols() != dim_) {
    throw DimMismatch("entry '" + id + "' has dim " + std::to_string(tokens.cols()) +
                      ", store dim is " + std::to_string(dim_));
  }
  if (tokens.rows() < 1) throw FormatError("entry '" + id + "' has no tokens");
  if (tokens.rows() > max_tokens(kind_)) throw LengthError(id, tokens.rows(), max_tokens(kind_));
  if (index_.contains(id)) throw DuplicateDocId("duplicate id '" + id + "'");

  TokenMatrixf m = tokens;
  const double tol = unit_tolerance(precision_);
  for (Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).cast<double>().norm();
    if (!(norm >= kZeroNormThreshold)) throw ZeroVectorRow(i);
    if (std::abs(norm - 1.0) > tol) m.row(i) = (m.row(i).cast<double>() / norm).cast<float>();
  }
  m = round_to_precision(m, precision_);

  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  total_tokens_ += m.rows();
  matrices_.push_back(std::move(m));
}

std::optional<std::size_t> EmbeddingStore::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

StoreManifest EmbeddingStore::manifest() const { return {corpus_, created_unix_, ids_.size()}; }

bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
  if (a.dim_ != b.dim_ || a.precision_ != b.precision_ || a.kind_ != b.kind_ || a.ids_ != b.ids_) {
    return false;
  }
  for (std::size_t i = 0; i < a.matrices_.size(); ++i) {
    if (a.matrices_[i].rows() != b.matrices_[i].rows()) return false;
    if (std::memcmp(a.matrices_[i].data(), b.matrices_[i].data(),
                    sizeof(float) * static_cast<std::size_t>(a.matrices_[i].size())) != 0) {
      return false;
    }
  }
  return true;
}

EmbeddingStore cast_precision(const EmbeddingStore& store, Precision target) {
  EmbeddingStore out = store;
  if (target == store.precision()) return out;
  out.precision_ = target;
  for (auto& m : out.matrices_) m = round_to_precision(m, target);
  return out;
}

EmbeddingStore ingest_embeddings(const fs::path& path, TextKind kind) {
  detail::BinaryReader in(path);
  in.expect_magic("LIEM");
  const auto version = in.get<std::uint32_t>();
  if (version != kEmbeddingFormatVersion) {
    throw FormatError(path.string() + ": unsupported format version " + std::to_string(version));
  }
  const auto dim = in.get<std::uint32_t>();
  const auto precision_byte = in.get<std::uint8_t>();
  if (precision_byte > 1) {
    throw FormatError(path.string() + ": bad precision byte " + std::to_string(precision_byte));
  }
  if (dim == 0) throw FormatError(path.string() + ": dim is zero");
  const auto precision = static_cast<Precision>(precision_byte);
  const auto count = in.get<std::uint64_t>();

  EmbeddingStore store(static_cast<Index>(dim), precision, kind);
  for (std::uint64_t e = 0; e < count; ++e) {
    const auto id_len = in.get<std::uint16_t>();
    std::string id = in.get_bytes(id_len);
    const auto rows = in.get<std::uint16_t>();
    if (rows > max_tokens(kind)) throw LengthError(id, rows, max_tokens(kind));
    TokenMatrixf m(rows, dim);
    if (precision == Precision::kFloat32) {
      in.get_span(std::span<float>(m.data(), static_cast<std::size_t>(m.size())));
    } else {
      TokenMatrixh h(rows, dim);
      in.get_span(std::span<Eigen::half>(h.data(), static_cast<std::size_t>(h.size())));
      m = h.cast<float>();
    }
    store.add(std::move(id), m);
  }
  if (!in.at_end()) throw FormatError(path.string() + ": trailing bytes after last entry");
  return store;
}

void write_embeddings(const EmbeddingStore& store, const fs::path& path) {
  detail::BinaryWriter out(path);
  out.put_magic("LIEM");
  out.put<std::uint32_t>(kEmbeddingFormatVersion);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(store.dim()));
  out.put<std::uint8_t>(static_cast<std::uint8_t>(store.precision()));
  out.put<std::uint64_t>(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& id = store.id(i);
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) throw FormatError("id too long: " + id);
    out.put<std::uint16_t>(static_cast<std::uint16_t>(id.size()));
    out.put_bytes(id);
    const auto& m = store.matrix(i);
    out.put<std::uint16_t>(static_cast<std::uint16_t>(m.rows()));
    if (store.precision() == Precision::kFloat32) {
      out.put_span(std::span<const float>(m.data(), static_cast<std::size_t>(m.size())));
    } else {
      const TokenMatrixh h = m.cast<Eigen::half>();
      out.put_span(std::span<const Eigen::half>(h.data(), static_cast<std::size_t>(h.size())));
    }
  }
  out.close();
}

void save_store(const EmbeddingStore& store, const fs::path& dir) {
  fs::create_directories(dir);
  write_embeddings(store, dir / "embeddings.bin");
  json manifest = {
      {"corpus", store.corpus_name()},
      {"created_unix", store.created_unix()},
      {"entry_count", store.size()},
      {"dim", store.dim()},
      {"precision", to_string(store.precision())},
      {"kind", to_string(store.kind())},
      {"total_tokens", store.total_tokens()},
      {"format_version", kEmbeddingFormatVersion},
  };
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
}

EmbeddingStore load_store(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw FormatError("missing manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError((dir / "manifest.json").string() + ": " + e.what());
  }
  const TextKind kind = parse_kind(manifest.at("kind").get<std::string>());
  EmbeddingStore store = ingest_embeddings(dir / "embeddings.bin", kind);
  if (manifest.at("entry_count").get<std::size_t>() != store.size()) {
    throw FormatError(dir.string() + ": manifest entry_count does not match embeddings.bin");
  }
  store.set_corpus_name(manifest.value("corpus", ""));
  store.set_created_unix(manifest.value("created_unix", std::int64_t{0}));
  return store;
}

std::int64_t creation_timestamp() {
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) {
    return std::strtoll(env, nullptr, 10);
  }
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace lateint
