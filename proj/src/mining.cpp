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

#include "lateint/mining.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include <json.hpp>

namespace lateint {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') fields.back().pop_back();
  return fields;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  return out;
}

json parse_json_line(const fs::path& path, std::size_t lineno, const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), lineno, e.what());
  }
}

std::vector<std::string> string_array(const fs::path& path, std::size_t lineno, const json& obj,
                                      const char* key) {
  if (!obj.contains(key)) return {};
  if (!obj[key].is_array()) throw ParseError(path.string(), lineno, std::string(key) + " must be an array");
  std::vector<std::string> out;
  for (const auto& v : obj[key]) {
    if (!v.is_string()) throw ParseError(path.string(), lineno, std::string(key) + " must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

void MiningConfig::validate() const {
  if (discard_top >= retrieve_depth) throw ConfigError("discard_top must be < retrieve_depth");
  if (sample_count_dense > pool_size() || sample_count_bm25 > pool_size()) {
    throw ConfigError("sample counts must be <= retrieve_depth - discard_top");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view query_id, std::string_view purpose) {
  return splitmix64(seed ^ splitmix64(fnv1a(query_id, fnv1a(purpose))));
}

std::vector<std::string> mine_window(const RankedList& ranked, const IdSet& positives,
                                     const MiningWindow& window, std::uint64_t seed) {
  if (ranked.entries.size() <= window.discard_top) {
    throw EmptyRanking("ranking for query '" + ranked.query_id + "' has " +
                       std::to_string(ranked.entries.size()) + " entries, nothing past the top " +
                       std::to_string(window.discard_top));
  }
  const std::size_t end = std::min(ranked.entries.size(), window.discard_top + window.pool_size);
  std::vector<std::string> pool;
  for (std::size_t r = window.discard_top; r < end; ++r) {
    const auto& id = ranked.entries[r].doc_id;
    if (!positives.contains(id)) pool.push_back(id);
  }
  if (pool.size() <= window.sample_count) return pool;
  std::vector<std::string> picked;
  picked.reserve(window.sample_count);
  std::mt19937_64 rng(seed);
  std::sample(pool.begin(), pool.end(), std::back_inserter(picked), window.sample_count, rng);
  return picked;
}

namespace {

const IdSet& positives_for(const PositiveMap& positives, const std::string& qid) {
  static const IdSet kNone;
  auto it = positives.find(qid);
  return it == positives.end() ? kNone : it->second;
}

}  // namespace

MiningResult mine_dense(const std::vector<std::string>& query_ids,
                        const std::unordered_map<std::string, RankedList>& runs,
                        const PositiveMap& positives, const MiningConfig& cfg) {
  cfg.validate();
  MiningResult result;
  for (const auto& qid : query_ids) {
    auto it = runs.find(qid);
    if (it == runs.end()) throw MissingRun("no dense run for query '" + qid + "'");
    try {
      result.per_query.push_back(
          {qid, mine_window(it->second, positives_for(positives, qid), cfg.dense_window(),
                            derive_seed(cfg.seed, qid, "dense"))});
    } catch (const EmptyRanking&) {
      result.skipped.push_back(qid);
    }
  }
  return result;
}

MiningResult mine_bm25(const std::vector<QueryText>& queries, const Bm25Index& index,
                       const PositiveMap& positives, const MiningConfig& cfg) {
  cfg.validate();
  MiningResult result;
  for (const auto& q : queries) {
    const RankedList ranked = index.search(q.text, cfg.retrieve_depth, q.id);
    try {
      result.per_query.push_back({q.id, mine_window(ranked, positives_for(positives, q.id),
                                                    cfg.bm25_window(), derive_seed(cfg.seed, q.id, "bm25"))});
    } catch (const EmptyRanking&) {
      result.skipped.push_back(q.id);
    }
  }
  return result;
}

void TeacherScoreTable::add(TeacherScore score) {
  if (!std::isfinite(score.value)) {
    throw NonFiniteScore("non-finite teacher score for (" + score.query_id + ", " + score.doc_id + ")");
  }
  auto& per_query = index_[score.query_id];
  if (!per_query.emplace(score.doc_id, entries_.size()).second) {
    throw DuplicateDocId("duplicate teacher score for (" + score.query_id + ", " + score.doc_id + ")");
  }
  if (score.text.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << score.value;
    score.text = os.str();
  }
  entries_.push_back(std::move(score));
}

const TeacherScore* TeacherScoreTable::find(const std::string& query_id, const std::string& doc_id) const {
  auto q = index_.find(query_id);
  if (q == index_.end()) return nullptr;
  auto d = q->second.find(doc_id);
  return d == q->second.end() ? nullptr : &entries_[d->second];
}

TransposeResult transpose_scores(const TeacherScoreTable& english_scores,
                                 const std::vector<QueryDocPair>& pair_universe) {
  TransposeResult result;
  result.scores = TeacherScoreTable(english_scores.source());
  for (const auto& [qid, pid] : pair_universe) {
    if (result.scores.find(qid, pid)) continue;  // repeated pair in the universe
    if (const TeacherScore* s = english_scores.find(qid, pid)) {
      result.scores.add(*s);
    } else {
      result.dropped.emplace_back(qid, pid);
    }
  }
  return result;
}

NWayExample build_nway(const std::string& query_id, const std::string& positive_id,
                       const std::vector<std::string>& candidates, const TeacherScoreTable& teacher,
                       std::size_t n, const IdSet& keep_set, std::uint64_t seed) {
  if (n < 2) throw Error("n-way examples need n >= 2");
  const TeacherScore* positive = teacher.find(query_id, positive_id);
  if (!positive) {
    throw MissingTeacherScore("no teacher score for positive (" + query_id + ", " + positive_id + ")");
  }

  std::vector<std::string> pool;
  IdSet seen{positive_id};
  std::size_t unscored = 0;
  for (const auto& c : candidates) {
    if (!seen.insert(c).second) continue;
    if (!teacher.find(query_id, c)) {
      ++unscored;
      continue;
    }
    pool.push_back(c);
  }
  const std::size_t needed = n - 1;
  if (pool.size() < needed) {
    throw InsufficientCandidates("query '" + query_id + "' has " + std::to_string(pool.size()) +
                                 " usable negatives, needs " + std::to_string(needed) + " (" +
                                 std::to_string(unscored) + " lacked teacher scores)");
  }

  std::vector<std::string> negatives;
  std::vector<std::string> rest;
  for (auto& c : pool) {
    if (negatives.size() < needed && keep_set.contains(c)) {
      negatives.push_back(std::move(c));
    } else {
      rest.push_back(std::move(c));
    }
  }
  std::mt19937_64 rng(seed);
  std::sample(rest.begin(), rest.end(), std::back_inserter(negatives), needed - negatives.size(), rng);

  NWayExample example;
  example.query_id = query_id;
  example.passages.reserve(n);
  example.scores.reserve(n);
  example.passages.push_back(positive_id);
  example.scores.push_back(positive->value);
  for (auto& id : negatives) {
    example.scores.push_back(teacher.find(query_id, id)->value);
    example.passages.push_back(std::move(id));
  }
  return example;
}

TeacherScoreTable read_teacher_scores(const fs::path& path) {
  auto in = open_input(path);
  TeacherScoreTable table(path.filename().string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_tabs(line);
    if (fields.size() < 3) throw ParseError(path.string(), lineno, "expected qid\\tpid\\tscore");
    const std::string& text = fields[2];
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw ParseError(path.string(), lineno, "bad score '" + text + "'");
    }
    try {
      table.add({fields[0], fields[1], value, text});
    } catch (const Error& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return table;
}

void write_teacher_scores(const TeacherScoreTable& table, const fs::path& path) {
  auto out = open_output(path);
  for (const auto& s : table.entries()) out << s.query_id << '\t' << s.doc_id << '\t' << s.text << '\n';
}

std::vector<QueryDocPair> read_pairs(const fs::path& path) {
  auto in = open_input(path);
  std::vector<QueryDocPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_tabs(line);
    if (fields.size() < 2) throw ParseError(path.string(), lineno, "expected qid\\tpid");
    pairs.emplace_back(std::move(fields[0]), std::move(fields[1]));
  }
  return pairs;
}

void write_pairs(const std::vector<QueryDocPair>& pairs, const fs::path& path) {
  auto out = open_output(path);
  for (const auto& [q, d] : pairs) out << q << '\t' << d << '\n';
}

void write_nway(const std::vector<NWayExample>& examples, const fs::path& path) {
  auto out = open_output(path);
  for (const auto& e : examples) {
    json obj;
    obj["qid"] = e.query_id;
    obj["passages"] = e.passages;
    obj["scores"] = e.scores;
    out << obj.dump() << '\n';
  }
}

std::vector<NWayExample> read_nway(const fs::path& path) {
  auto in = open_input(path);
  std::vector<NWayExample> examples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json obj = parse_json_line(path, lineno, line);
    if (!obj.contains("qid") || !obj["qid"].is_string()) throw ParseError(path.string(), lineno, "missing qid");
    NWayExample e;
    e.query_id = obj["qid"].get<std::string>();
    e.passages = string_array(path, lineno, obj, "passages");
    if (obj.contains("scores")) {
      for (const auto& v : obj["scores"]) {
        if (!v.is_number()) throw ParseError(path.string(), lineno, "scores must be numbers");
        e.scores.push_back(v.get<double>());
      }
    }
    if (e.scores.size() != e.passages.size()) {
      throw ParseError(path.string(), lineno, "passages and scores differ in length");
    }
    examples.push_back(std::move(e));
  }
  return examples;
}

void write_negatives(const std::vector<NegativesRecord>& records, const fs::path& path) {
  auto out = open_output(path);
  for (const auto& r : records) {
    json obj;
    obj["qid"] = r.query_id;
    obj["positives"] = r.positives;
    obj["dense_negatives"] = r.dense_negatives;
    obj["bm25_negatives"] = r.bm25_negatives;
    obj["seed"] = r.seed;
    out << obj.dump() << '\n';
  }
}

std::vector<NegativesRecord> read_negatives(const fs::path& path) {
  auto in = open_input(path);
  std::vector<NegativesRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json obj = parse_json_line(path, lineno, line);
    if (!obj.contains("qid") || !obj["qid"].is_string()) throw ParseError(path.string(), lineno, "missing qid");
    NegativesRecord r;
    r.query_id = obj["qid"].get<std::string>();
    r.positives = string_array(path, lineno, obj, "positives");
    r.dense_negatives = string_array(path, lineno, obj, "dense_negatives");
    r.bm25_negatives = string_array(path, lineno, obj, "bm25_negatives");
    r.seed = obj.value("seed", std::uint64_t{0});
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace lateint
