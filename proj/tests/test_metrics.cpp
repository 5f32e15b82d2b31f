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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lateint/errors.hpp"
#include "lateint/metrics.hpp"
#include "lateint/trec.hpp"
#include "test_support.hpp"

#ifndef LATEINT_FIXTURES
#define LATEINT_FIXTURES "tests/fixtures"
#endif

namespace lateint {
namespace {

namespace fs = std::filesystem;
using Grades = std::map<std::string, int>;

const fs::path kFixtures = LATEINT_FIXTURES;

RankedList ranked(const std::vector<std::string>& ids) {
  RankedList r{"q", {}};
  double s = static_cast<double>(ids.size());
  for (const auto& id : ids) r.entries.push_back({id, s--});
  return r;
}

std::vector<std::string> fillers(std::size_t n, const std::string& prefix = "x") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<std::string> with_at(std::vector<std::string> ids, std::size_t rank, const std::string& id) {
  ids[rank - 1] = id;
  return ids;
}

TEST(Ndcg, Fixtures) {
  const Grades one = {{"r", 1}};
  EXPECT_DOUBLE_EQ(ndcg_at_k(ranked(with_at(fillers(10), 1, "r")), one, 10), 1.0);
  const double at2 = ndcg_at_k(ranked(with_at(fillers(10), 2, "r")), one, 10);
  EXPECT_NEAR(at2, 1.0 / std::log2(3.0), 1e-12);
  EXPECT_NEAR(at2, 0.63093, 1e-5);
  EXPECT_EQ(ndcg_at_k(ranked(with_at(fillers(12), 11, "r")), one, 10), 0.0);
}

TEST(Ndcg, GradedGainAndIdealFromAllJudgments) {
  const Grades g = {{"a", 3}, {"b", 1}, {"c", 0}};
  const RankedList r = ranked({"b", "x", "a"});
  const double dcg = 1.0 / std::log2(2.0) + 7.0 / std::log2(4.0);
  const double idcg = 7.0 / std::log2(2.0) + 1.0 / std::log2(3.0);
  EXPECT_NEAR(ndcg_at_k(r, g, 10), dcg / idcg, 1e-12);
  EXPECT_NEAR(ndcg_at_k(r, g, 10), testing::oracle_ndcg({"b", "x", "a"}, g, 10), 1e-12);
}

TEST(Recall, Fixtures) {
  const Grades two = {{"a", 1}, {"b", 1}};
  EXPECT_DOUBLE_EQ(recall_at_k(ranked({"a", "x", "b"}), two, 3), 1.0);
  EXPECT_DOUBLE_EQ(recall_at_k(ranked({"a", "x", "y", "b"}), two, 3), 0.5);
  const Grades four = {{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}};
  EXPECT_DOUBLE_EQ(recall_at_k(ranked({"a", "x", "b"}), four, 3), 0.5);
}

TEST(Map, Fixtures) {
  const Grades one = {{"r", 1}};
  EXPECT_DOUBLE_EQ(map_at_k(ranked(with_at(fillers(10), 1, "r")), one, 10), 1.0);
  EXPECT_NEAR(map_at_k(ranked(with_at(fillers(10), 3, "r")), one, 10), 1.0 / 3.0, 1e-15);
  const Grades two = {{"a", 1}, {"b", 1}};
  EXPECT_DOUBLE_EQ(map_at_k(ranked(with_at(with_at(fillers(10), 1, "a"), 4, "b")), two, 10), 0.75);
}

TEST(Map, DenominatorCapsAtK) {
  Grades many;
  for (int i = 0; i < 5; ++i) many["r" + std::to_string(i)] = 1;
  EXPECT_DOUBLE_EQ(map_at_k(ranked({"r0", "r1"}), many, 2), 1.0);
}

TEST(Mrr, FirstRelevant) {
  EXPECT_DOUBLE_EQ(mrr_at_k(ranked({"x", "y", "r"}), {{"r", 2}}, 10), 1.0 / 3.0);
  EXPECT_EQ(mrr_at_k(ranked({"x", "y", "r"}), {{"r", 2}}, 2), 0.0);
}

TEST(Metrics, NoRelevantScoresZero) {
  const Grades none = {{"a", 0}};
  const RankedList r = ranked({"a", "b"});
  for (auto m : {Metric::kNdcg, Metric::kRecall, Metric::kMap, Metric::kMrr}) {
    EXPECT_EQ(metric_at_k({m, 10}, r, none), 0.0);
  }
}

TEST(MetricSpec, ParseAndName) {
  EXPECT_EQ(MetricSpec::parse("ndcg@10"), (MetricSpec{Metric::kNdcg, 10}));
  EXPECT_EQ(MetricSpec::parse("recall@3").name(), "recall@3");
  EXPECT_THROW((void)MetricSpec::parse("ndcg"), Error);
  EXPECT_THROW((void)MetricSpec::parse("p@10"), Error);
  EXPECT_THROW((void)MetricSpec::parse("map@0"), Error);
  EXPECT_THROW((void)MetricSpec::parse("map@1x"), Error);
}

struct RandomInstance {
  std::vector<std::string> run;
  Grades grades;
};

RandomInstance random_instance(std::mt19937_64& rng) {
  RandomInstance inst;
  const auto pool = testing::uniform_index(rng, 1, 30);
  std::vector<std::string> docs = fillers(static_cast<std::size_t>(pool), "d");
  std::shuffle(docs.begin(), docs.end(), rng);
  inst.run.assign(docs.begin(), docs.begin() + testing::uniform_index(rng, 0, pool));
  for (const auto& d : docs) {
    if (testing::uniform_index(rng, 0, 2) == 0) inst.grades[d] = static_cast<int>(testing::uniform_index(rng, 0, 3));
  }
  return inst;
}

TEST(Metrics, AgreeWithNaiveReference) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 1000; ++trial) {
    const RandomInstance inst = random_instance(rng);
    const RankedList r = ranked(inst.run);
    const auto k = static_cast<std::size_t>(testing::uniform_index(rng, 1, 20));
    EXPECT_NEAR(ndcg_at_k(r, inst.grades, k), testing::oracle_ndcg(inst.run, inst.grades, k), 1e-9);
    EXPECT_NEAR(recall_at_k(r, inst.grades, k), testing::oracle_recall(inst.run, inst.grades, k), 1e-9);
    EXPECT_NEAR(map_at_k(r, inst.grades, k), testing::oracle_map(inst.run, inst.grades, k), 1e-9);
  }
}

TEST(Metrics, BoundsAndRecallMonotone) {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 300; ++trial) {
    const RandomInstance inst = random_instance(rng);
    const RankedList r = ranked(inst.run);
    double previous = 0.0;
    for (std::size_t k = 1; k <= 30; ++k) {
      for (auto m : {Metric::kNdcg, Metric::kRecall, Metric::kMap, Metric::kMrr}) {
        const double v = metric_at_k({m, k}, r, inst.grades);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0 + 1e-12);
      }
      const double rec = recall_at_k(r, inst.grades, k);
      EXPECT_GE(rec, previous);
      previous = rec;
    }
  }
}

TEST(Metrics, IdealOrderingHasUnitNdcg) {
  std::mt19937_64 rng(63);
  for (int trial = 0; trial < 200; ++trial) {
    RandomInstance inst = random_instance(rng);
    inst.grades["forced"] = 2;
    std::vector<std::pair<int, std::string>> judged;
    for (const auto& [d, g] : inst.grades) judged.emplace_back(g, d);
    std::sort(judged.begin(), judged.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> ideal;
    for (const auto& [g, d] : judged) ideal.push_back(d);
    EXPECT_NEAR(ndcg_at_k(ranked(ideal), inst.grades, 10), 1.0, 1e-12);
  }
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lateint_metrics_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::vector<MetricSpec> kSpecs = {{Metric::kNdcg, 10}, {Metric::kRecall, 3}, {Metric::kMap, 10}};

TEST(Evaluate, PerfectRunScoresOne) {
  const fs::path dir = scratch("perfect");
  Qrels qrels = {{"q1", {{"a", 1}, {"b", 2}}}, {"q2", {{"c", 1}}}};
  const std::vector<RankedList> run = {{"q1", {{"b", 2}, {"a", 1}}}, {"q2", {{"c", 5}}}};
  const EvalReport report = evaluate(run, qrels, kSpecs);
  for (const auto& spec : kSpecs) EXPECT_DOUBLE_EQ(report.at(spec).mean, 1.0);
  EXPECT_TRUE(report.warnings.empty());
}

TEST(Evaluate, EmptyRunWarns) {
  const Qrels qrels = {{"q1", {{"a", 1}}}, {"q2", {{"c", 1}}}};
  const EvalReport report = evaluate(std::vector<RankedList>{}, qrels, kSpecs);
  for (const auto& spec : kSpecs) EXPECT_EQ(report.at(spec).mean, 0.0);
  ASSERT_FALSE(report.warnings.empty());
  EXPECT_NE(report.warnings.back().find("q1 q2"), std::string::npos);
}

// Reads the fixture with a plain whitespace split, independent of the library parser.
std::map<std::string, std::vector<std::string>> naive_run(const fs::path& path) {
  std::map<std::string, std::vector<std::pair<double, std::string>>> rows;
  std::ifstream in(path);
  std::string qid, q0, doc, tag;
  int rank = 0;
  double score = 0;
  while (in >> qid >> q0 >> doc >> rank >> score >> tag) rows[qid].emplace_back(score, doc);
  std::map<std::string, std::vector<std::string>> out;
  for (auto& [q, list] : rows) {
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (const auto& [s, d] : list) out[q].push_back(d);
  }
  return out;
}

std::map<std::string, Grades> naive_qrels(const fs::path& path) {
  std::map<std::string, Grades> out;
  std::ifstream in(path);
  std::string qid, iter, doc;
  int grade = 0;
  while (in >> qid >> iter >> doc >> grade) out[qid][doc] = grade;
  return out;
}

TEST(Evaluate, FiveQueryFixtureMatchesReference) {
  const auto run = naive_run(kFixtures / "run.trec");
  const auto qrels = naive_qrels(kFixtures / "qrels.txt");
  ASSERT_EQ(qrels.size(), 5u);
  const EvalReport report = evaluate(kFixtures / "run.trec", kFixtures / "qrels.txt", kSpecs);
  EXPECT_EQ(report.evaluated_queries, 5u);
  EXPECT_EQ(report.queries_without_relevant, 1u);
  for (const auto& spec : kSpecs) {
    double sum = 0.0;
    for (const auto& [qid, grades] : qrels) {
      const auto& ids = run.at(qid);
      double expected = 0.0;
      if (spec.metric == Metric::kNdcg) expected = testing::oracle_ndcg(ids, grades, spec.k);
      if (spec.metric == Metric::kRecall) expected = testing::oracle_recall(ids, grades, spec.k);
      if (spec.metric == Metric::kMap) expected = testing::oracle_map(ids, grades, spec.k);
      EXPECT_NEAR(report.at(spec).per_query.at(qid), expected, 1e-12) << spec.name() << " " << qid;
      sum += expected;
    }
    EXPECT_NEAR(report.at(spec).mean, sum / 5.0, 1e-12) << spec.name();
  }
}

TEST(Evaluate, RankColumnIgnoredWithWarning) {
  const fs::path dir = scratch("ranks");
  testing::write_file(dir / "run.trec", "q1 Q0 a 1 0.5 t\nq1 Q0 b 2 0.9 t\n");
  testing::write_file(dir / "qrels.txt", "q1 0 b 1\n");
  const EvalReport report = evaluate(dir / "run.trec", dir / "qrels.txt", {{Metric::kMrr, 10}});
  EXPECT_DOUBLE_EQ(report.at({Metric::kMrr, 10}).mean, 1.0);
  ASSERT_FALSE(report.warnings.empty());
  EXPECT_NE(report.warnings[0].find("rank column"), std::string::npos);
}

TEST(Evaluate, PermutedLinesSameResult) {
  const fs::path dir = scratch("perm");
  std::ifstream in(kFixtures / "run.trec");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  std::mt19937_64 rng(64);
  std::shuffle(lines.begin(), lines.end(), rng);
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  testing::write_file(dir / "run.trec", text);
  const auto a = evaluate(kFixtures / "run.trec", kFixtures / "qrels.txt", kSpecs);
  const auto b = evaluate(dir / "run.trec", kFixtures / "qrels.txt", kSpecs);
  for (const auto& spec : kSpecs) EXPECT_EQ(a.at(spec).per_query, b.at(spec).per_query);
}

TEST(Evaluate, UnjudgedRunQueryReported) {
  const Qrels qrels = {{"q1", {{"a", 1}}}};
  const std::vector<RankedList> run = {{"q1", {{"a", 1}}}, {"q9", {{"a", 1}}}};
  const EvalReport report = evaluate(run, qrels, kSpecs);
  EXPECT_EQ(report.evaluated_queries, 1u);
  ASSERT_EQ(report.warnings.size(), 1u);
  EXPECT_NE(report.warnings[0].find("q9"), std::string::npos);
}

TEST(Evaluate, ReportJsonShape) {
  const EvalReport report = evaluate(kFixtures / "run.trec", kFixtures / "qrels.txt", kSpecs);
  const std::string json = report.to_json();
  for (const char* key : {"\"ndcg@10\"", "\"recall@3\"", "\"map@10\"", "\"mean\"", "\"per_query\"", "\"warnings\"",
                          "\"conventions\""}) {
    EXPECT_NE(json.find(key), std::string::npos) << key;
  }
}

TEST(Trec, ParseErrorsCarryLine) {
  const fs::path dir = scratch("parse");
  testing::write_file(dir / "bad.trec", "q1 Q0 a 1 0.5 t\nq1 Q0 b 2 notanumber t\n");
  try {
    (void)read_trec_run(dir / "bad.trec");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  testing::write_file(dir / "dup.trec", "q1 Q0 a 1 0.5 t\nq1 Q0 a 2 0.4 t\n");
  EXPECT_THROW((void)read_trec_run(dir / "dup.trec"), ParseError);
  testing::write_file(dir / "bad.qrels", "q1 0 a 1\nq1 0 b -1\n");
  EXPECT_THROW((void)read_qrels(dir / "bad.qrels"), ParseError);
}

TEST(Trec, WriteReadRoundTrip) {
  const fs::path dir = scratch("rt");
  const std::vector<RankedList> runs = {{"q1", {{"a", 0.1}, {"b", 1.0 / 3.0}}}, {"q2", {{"c", -2.5}}}};
  std::vector<RankedList> sorted = runs;
  for (auto& r : sorted) std::sort(r.entries.begin(), r.entries.end(), ranks_before);
  write_trec_run(sorted, dir / "r.trec", "tag");
  const ParsedRun back = read_trec_run(dir / "r.trec");
  EXPECT_TRUE(back.warnings.empty());
  ASSERT_EQ(back.queries.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(back.queries[i].entries, sorted[i].entries);
}

}  // namespace
}  // namespace lateint
