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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lateint/bm25.hpp"
#include "lateint/types.hpp"

namespace lateint {

using IdSet = std::unordered_set<std::string>;
using PositiveMap = std::unordered_map<std::string, IdSet>;

struct MiningWindow {
  std::size_t discard_top = 10;
  std::size_t pool_size = 100;
  std::size_t sample_count = 25;
};

struct MiningConfig {
  std::size_t retrieve_depth = 110;
  std::size_t discard_top = 10;
  std::size_t sample_count_dense = 25;
  std::size_t sample_count_bm25 = 10;
  std::uint64_t seed = 42;

  std::size_t pool_size() const { return retrieve_depth - discard_top; }
  MiningWindow dense_window() const { return {discard_top, pool_size(), sample_count_dense}; }
  MiningWindow bm25_window() const { return {discard_top, pool_size(), sample_count_bm25}; }
  void validate() const;
};

// Independent stream per (global seed, query id, purpose), so per-query output
// does not depend on processing order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view query_id, std::string_view purpose);

// Drops ranks 1..discard_top, forms the pool from the next pool_size entries
// minus annotated positives, and samples sample_count ids uniformly without
// replacement. The result keeps rank order. A pool smaller than sample_count
// is returned whole.
std::vector<std::string> mine_window(const RankedList& ranked, const IdSet& positives,
                                     const MiningWindow& window, std::uint64_t seed);

struct QueryNegatives {
  std::string query_id;
  std::vector<std::string> negatives;
};

struct MiningResult {
  std::vector<QueryNegatives> per_query;
  // Queries whose ranking did not reach past the discarded head.
  std::vector<std::string> skipped;
};

// Runs are keyed by query id. Throws MissingRun for a query without one.
MiningResult mine_dense(const std::vector<std::string>& query_ids,
                        const std::unordered_map<std::string, RankedList>& runs,
                        const PositiveMap& positives, const MiningConfig& cfg);

struct QueryText {
  std::string id;
  std::string text;
};

// Retrieves retrieve_depth documents per query with the BM25 index, then
// applies the BM25 window.
MiningResult mine_bm25(const std::vector<QueryText>& queries, const Bm25Index& index,
                       const PositiveMap& positives, const MiningConfig& cfg);

struct TeacherScore {
  std::string query_id;
  std::string doc_id;
  double value = 0.0;
  std::string text;  // the score exactly as it appeared in the source file
};

class TeacherScoreTable {
 public:
  TeacherScoreTable() = default;
  explicit TeacherScoreTable(std::string source) : source_(std::move(source)) {}

  // Throws on a repeated (query, doc) key or a non-finite score.
  void add(TeacherScore score);
  const TeacherScore* find(const std::string& query_id, const std::string& doc_id) const;
  const std::vector<TeacherScore>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<TeacherScore> entries_;
  std::unordered_map<std::string, std::unordered_map<std::string, std::size_t>> index_;
};

using QueryDocPair = std::pair<std::string, std::string>;

struct TransposeResult {
  TeacherScoreTable scores;
  std::vector<QueryDocPair> dropped;
};

// Joins the pair universe with the source scores on shared ids; pairs with no
// source score are reported in `dropped`, never invented.
TransposeResult transpose_scores(const TeacherScoreTable& english_scores,
                                 const std::vector<QueryDocPair>& pair_universe);

struct NWayExample {
  std::string query_id;
  std::vector<std::string> passages;  // [0] is the positive
  std::vector<double> scores;
};

// Positive first, then every keep_set candidate in candidate order (up to n-1),
// then a seeded uniform sample of the remaining candidates to reach n-1
// negatives. Candidates are deduplicated and the positive removed; candidates
// with no teacher score for this query are skipped.
NWayExample build_nway(const std::string& query_id, const std::string& positive_id,
                       const std::vector<std::string>& candidates, const TeacherScoreTable& teacher,
                       std::size_t n, const IdSet& keep_set, std::uint64_t seed);

// qid \t pid \t score, one per line.
TeacherScoreTable read_teacher_scores(const std::filesystem::path& path);
void write_teacher_scores(const TeacherScoreTable& table, const std::filesystem::path& path);

// qid \t pid; extra columns are ignored.
std::vector<QueryDocPair> read_pairs(const std::filesystem::path& path);
void write_pairs(const std::vector<QueryDocPair>& pairs, const std::filesystem::path& path);

// {qid, passages: [...], scores: [...]} per line.
void write_nway(const std::vector<NWayExample>& examples, const std::filesystem::path& path);
std::vector<NWayExample> read_nway(const std::filesystem::path& path);

struct NegativesRecord {
  std::string query_id;
  std::vector<std::string> positives;
  std::vector<std::string> dense_negatives;
  std::vector<std::string> bm25_negatives;
  std::uint64_t seed = 0;
};

// {qid, positives, dense_negatives, bm25_negatives, seed} per line.
void write_negatives(const std::vector<NegativesRecord>& records, const std::filesystem::path& path);
std::vector<NegativesRecord> read_negatives(const std::filesystem::path& path);

}  // namespace lateint
