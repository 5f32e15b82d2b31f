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

#include "lateint/trec.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "lateint/errors.hpp"

namespace lateint {

namespace fs = std::filesystem;

std::string format_score(double score) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), score);
  return std::string(buf, ptr);
}

void write_trec_run(const std::vector<RankedList>& runs, const fs::path& path, const std::string& tag) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  for (const auto& run : runs) {
    for (std::size_t r = 0; r < run.entries.size(); ++r) {
      out << run.query_id << " Q0 " << run.entries[r].doc_id << ' ' << (r + 1) << ' '
          << format_score(run.entries[r].score) << ' ' << tag << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

ParsedRun read_trec_run(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open run: " + path.string());
  struct Row {
    ScoredDoc doc;
    long rank;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> rows;
  std::unordered_map<std::string, std::set<std::string>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string qid, q0, docid, rank_text, score_text, tag;
    if (!(fields >> qid)) continue;
    if (!(fields >> q0 >> docid >> rank_text >> score_text >> tag)) {
      throw ParseError(path.string(), lineno, "expected `qid Q0 docid rank score tag`");
    }
    long rank = 0;
    double score = 0.0;
    auto r1 = std::from_chars(rank_text.data(), rank_text.data() + rank_text.size(), rank);
    auto r2 = std::from_chars(score_text.data(), score_text.data() + score_text.size(), score);
    if (r1.ec != std::errc() || r1.ptr != rank_text.data() + rank_text.size()) {
      throw ParseError(path.string(), lineno, "bad rank '" + rank_text + "'");
    }
    if (r2.ec != std::errc() || r2.ptr != score_text.data() + score_text.size()) {
      throw ParseError(path.string(), lineno, "bad score '" + score_text + "'");
    }
    if (!rows.contains(qid)) order.push_back(qid);
    if (!seen[qid].insert(docid).second) {
      throw ParseError(path.string(), lineno, "document '" + docid + "' repeated for query '" + qid + "'");
    }
    rows[qid].push_back({{docid, score}, rank});
  }

  ParsedRun parsed;
  for (const auto& qid : order) {
    auto& list = rows[qid];
    std::stable_sort(list.begin(), list.end(),
                     [](const Row& a, const Row& b) { return ranks_before(a.doc, b.doc); });
    bool consistent = true;
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i].rank <= list[i - 1].rank) consistent = false;
    }
    if (!consistent) {
      parsed.warnings.push_back("query '" + qid + "': rank column disagrees with scores; ranking by score");
    }
    RankedList ranked{qid, {}};
    ranked.entries.reserve(list.size());
    for (auto& row : list) ranked.entries.push_back(std::move(row.doc));
    parsed.queries.push_back(std::move(ranked));
  }
  return parsed;
}

Qrels read_qrels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open qrels: " + path.string());
  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string qid, iter, docid, grade_text;
    if (!(fields >> qid)) continue;
    if (!(fields >> iter >> docid >> grade_text)) {
      throw ParseError(path.string(), lineno, "expected `qid 0 docid grade`");
    }
    int grade = 0;
    auto r = std::from_chars(grade_text.data(), grade_text.data() + grade_text.size(), grade);
    if (r.ec != std::errc() || r.ptr != grade_text.data() + grade_text.size() || grade < 0) {
      throw ParseError(path.string(), lineno, "grade must be a non-negative integer");
    }
    if (!qrels[qid].emplace(docid, grade).second) {
      throw ParseError(path.string(), lineno, "duplicate judgment for (" + qid + ", " + docid + ")");
    }
  }
  return qrels;
}

void write_qrels(const Qrels& qrels, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  for (const auto& [qid, docs] : qrels) {
    for (const auto& [doc, grade] : docs) out << qid << " 0 " << doc << ' ' << grade << '\n';
  }
}

}  // namespace lateint
