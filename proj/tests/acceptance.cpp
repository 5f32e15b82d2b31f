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

// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lateint/bm25.hpp"
#include "lateint/compressed_index.hpp"
#include "lateint/exact_index.hpp"
#include "lateint/kmeans.hpp"
#include "lateint/metrics.hpp"
#include "lateint/mining.hpp"
#include "lateint/scoring.hpp"
#include "test_support.hpp"

#ifndef LATEINT_CLI
#define LATEINT_CLI "lateint"
#endif

namespace {

using namespace lateint;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Tolerances and budgets.
constexpr double kMaxSimTolerance = 1e-6;
constexpr double kMaxSimBudgetSeconds = 60.0;
constexpr double kMaxSimGradRelTolerance = 1e-4;
constexpr double kKlGradRelTolerance = 1e-5;
constexpr double kKlIdentityTolerance = 1e-12;
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr double kArgmaxMargin = 1e-3;
constexpr double kHalfScoreTolerance = 1e-2;
constexpr double kMinOverlapAtNprobe4 = 0.90;
constexpr double kCompressedBudgetSeconds = 300.0;
constexpr double kBm25Tolerance = 1e-6;
constexpr double kMetricTolerance = 1e-9;
constexpr double kBucketSlack = 1e-7;  // float32 rounding of centroid + value

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// 1. Engine maxsim against the exhaustive double loop.
Outcome maxsim_equivalence() {
  std::mt19937_64 rng(101);
  const auto start = Clock::now();
  double worst = 0.0;
  int pairs = 0;
  const Index dims[] = {8, 64, 128};
  for (int i = 0; i < 1000; ++i) {
    const Index dim = dims[i % 3];
    const TokenMatrixf q = testing::random_unit_matrix(rng, testing::uniform_index(rng, 1, 64), dim);
    const TokenMatrixf d = testing::random_unit_matrix(rng, testing::uniform_index(rng, 1, 512), dim);
    worst = std::max(worst, std::abs(maxsim(q, d) - testing::oracle_maxsim(q, d)));
    ++pairs;
  }
  const double elapsed = seconds_since(start);
  return {worst <= kMaxSimTolerance && elapsed < kMaxSimBudgetSeconds,
          std::to_string(pairs) + " pairs, max |diff| " + fmt(worst) + ", " + fmt(elapsed) + " s"};
}

// Smallest gap between the best and second-best document token over query rows.
double argmax_margin(const TokenMatrixd& q, const TokenMatrixd& d) {
  const Eigen::MatrixXd sim = q * d.transpose();
  double margin = 1e300;
  for (Index i = 0; i < sim.rows(); ++i) {
    double best = -1e300, second = -1e300;
    for (Index j = 0; j < sim.cols(); ++j) {
      if (sim(i, j) > best) {
        second = best;
        best = sim(i, j);
      } else {
        second = std::max(second, sim(i, j));
      }
    }
    margin = std::min(margin, best - second);
  }
  return margin;
}

// 2. Analytic gradients against central differences.
Outcome gradient_checks() {
  std::mt19937_64 rng(102);
  const double h = kFiniteDifferenceStep;
  double worst_maxsim = 0.0;
  int maxsim_instances = 0;
  while (maxsim_instances < 100) {
    const Index dim = testing::uniform_index(rng, 4, 64);
    const TokenMatrixd q = testing::random_unit_matrix(rng, testing::uniform_index(rng, 1, 16), dim).cast<double>();
    const TokenMatrixd d = testing::random_unit_matrix(rng, testing::uniform_index(rng, 2, 64), dim).cast<double>();
    if (argmax_margin(q, d) < kArgmaxMargin) continue;  // keep perturbations away from argmax ties
    const TokenMatrixd g = maxsim_grad_query(q, d);
    TokenMatrixd fd(q.rows(), q.cols());
    for (Index i = 0; i < q.rows(); ++i) {
      for (Index c = 0; c < q.cols(); ++c) {
        TokenMatrixd plus = q, minus = q;
        plus(i, c) += h;
        minus(i, c) -= h;
        fd(i, c) = (maxsim(plus, d) - maxsim(minus, d)) / (2 * h);
      }
    }
    worst_maxsim = std::max(worst_maxsim, (fd - g).norm() / g.norm());
    ++maxsim_instances;
  }

  std::normal_distribution<double> normal(0.0, 2.0);
  double worst_kl = 0.0;
  double worst_identity = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    NWayScoreVector v{Eigen::VectorXd(32), Eigen::VectorXd(32)};
    for (Index i = 0; i < 32; ++i) {
      v.student[i] = normal(rng);
      v.teacher[i] = normal(rng);
    }
    const double t = trial % 4 == 0 ? 2.0 : 1.0;
    const Eigen::VectorXd g = kl_distill_grad(v, t);
    Eigen::VectorXd fd(32);
    for (Index i = 0; i < 32; ++i) {
      NWayScoreVector plus = v, minus = v;
      plus.student[i] += h;
      minus.student[i] -= h;
      fd[i] = (kl_distill_loss(plus, t) - kl_distill_loss(minus, t)) / (2 * h);
    }
    worst_kl = std::max(worst_kl, (fd - g).norm() / g.norm());
    worst_identity = std::max(worst_identity, std::abs(kl_distill_loss({v.teacher, v.teacher}, t)));
  }
  const bool pass = worst_maxsim <= kMaxSimGradRelTolerance && worst_kl <= kKlGradRelTolerance &&
                    worst_identity <= kKlIdentityTolerance;
  return {pass, "maxsim grad rel err " + fmt(worst_maxsim) + " (100 inst), KL grad rel err " + fmt(worst_kl) +
                    " (100 inst, n=32), KL(p||p) " + fmt(worst_identity)};
}

std::vector<std::string> ids_of(const RankedList& r) {
  std::vector<std::string> out;
  for (const auto& e : r.entries) out.push_back(e.doc_id);
  return out;
}

// 3. Exact search against brute force, float16 against float32.
Outcome exact_fidelity() {
  std::mt19937_64 rng(103);
  const Index dim = 32;
  const EmbeddingStore store = testing::random_store(rng, 10000, dim, 1, 32);
  const ExactIndex f32 = build_exact(store, Precision::kFloat32);
  const ExactIndex f16 = build_exact(store, Precision::kFloat16);
  constexpr std::size_t k = 100;
  int identical = 0;
  double worst_half = 0.0;
  for (int qi = 0; qi < 100; ++qi) {
    const TokenMatrixf q = testing::random_unit_matrix(rng, testing::uniform_index(rng, 1, 32), dim);
    const RankedList got = search_exact(f32, q, k);
    const auto expected = testing::brute_force_ranking(
        store.ids(), [&](std::size_t i) { return testing::oracle_maxsim(q, store.matrix(i)); }, k);
    identical += ids_of(got) == expected;
    const RankedList half = search_exact(f16, q, k);
    for (std::size_t i = 0; i < k; ++i) {
      worst_half = std::max(worst_half, std::abs(half.entries[i].score - got.entries[i].score));
    }
    for (std::size_t d = 0; d < store.size(); d += 97) {
      worst_half = std::max(worst_half, std::abs(maxsim(q, f16.document(d)) - maxsim(q, f32.document(d))));
    }
  }
  return {identical == 100 && worst_half <= kHalfScoreTolerance,
          std::to_string(identical) + "/100 rankings identical (top-" + std::to_string(k) +
              ", 10,000 docs), max float16 score diff " + fmt(worst_half)};
}

// 4 and 5 share one compressed index over the clustered corpus.
struct CompressedRun {
  testing::ClusteredCorpus corpus;
  CompressedIndex index;
  double build_seconds = 0.0;
  Index centroids = 0;
};

CompressedRun& compressed_run() {
  static CompressedRun run = [] {
    CompressedRun r;
    testing::ClusteredCorpusSpec spec;  // 10,000 docs, dim 64, 32 tokens per doc, 100 queries
    r.corpus = testing::make_clustered_corpus(spec);
    const auto start = Clock::now();
    r.centroids = default_centroid_count(r.corpus.docs.total_tokens());
    r.index = compress(r.corpus.docs, train_codebook(r.corpus.docs, r.centroids, 4, 42), 42);
    r.build_seconds = seconds_since(start);
    return r;
  }();
  return run;
}

Outcome compressed_quality() {
  CompressedRun& run = compressed_run();
  const ExactIndex exact = build_exact(run.corpus.docs, Precision::kFloat32);
  const auto truth = search_exact_all(exact, run.corpus.queries, 10);
  std::vector<double> overlaps;
  double search_seconds = 0.0;
  for (std::size_t nprobe : {1, 2, 4, 8}) {
    const auto start = Clock::now();
    const auto results = search_compressed_all(run.index, run.corpus.queries, {10, nprobe, 8192});
    if (nprobe == 4) search_seconds = seconds_since(start);
    double total = 0.0;
    for (std::size_t q = 0; q < results.size(); ++q) {
      const auto t = ids_of(truth[q]);
      const std::set<std::string> truth_set(t.begin(), t.end());
      for (const auto& id : ids_of(results[q])) total += truth_set.count(id);
    }
    overlaps.push_back(total / (10.0 * static_cast<double>(results.size())));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < overlaps.size(); ++i) monotone = monotone && overlaps[i] >= overlaps[i - 1];
  const double budget = run.build_seconds + search_seconds;
  std::string detail = "K=" + std::to_string(run.centroids) + ", overlap@nprobe{1,2,4,8} =";
  for (double o : overlaps) detail += " " + fmt(o);
  detail += ", build " + fmt(run.build_seconds) + " s + 100 searches " + fmt(search_seconds) + " s";
  return {overlaps[2] >= kMinOverlapAtNprobe4 && monotone && budget < kCompressedBudgetSeconds, detail};
}

Outcome quantization_round_trip() {
  CompressedRun& run = compressed_run();
  const CompressedIndex& index = run.index;
  const BucketTable& buckets = index.buckets();
  const TokenMatrixf& centroids = index.codebook().centroids;
  std::size_t checked = 0, violations = 0;
  for (std::size_t d = 0; d < index.size(); ++d) {
    const TokenMatrixf& original = run.corpus.docs.matrix(d);
    for (Index t = 0; t < original.rows(); ++t) {
      const ResidualCode code = index.code(d, t);
      const auto codes = unpack_codes(code.packed, index.dim());
      const Eigen::RowVectorXd recon = reconstruct_residual(code, index.codebook(), buckets);
      for (Index j = 0; j < index.dim(); ++j) {
        const double residual = static_cast<double>(original(t, j) - centroids(code.centroid, j));
        const double approx = recon[j] - static_cast<double>(centroids(code.centroid, j));
        ++checked;
        violations += std::abs(residual - approx) > buckets.width(j, codes[static_cast<std::size_t>(j)]) + kBucketSlack;
      }
    }
  }
  std::mt19937_64 rng(105);
  std::uniform_int_distribution<int> code(0, 3);
  std::size_t pack_failures = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Index dim = testing::uniform_index(rng, 1, 256);
    std::vector<std::uint8_t> codes(static_cast<std::size_t>(dim));
    for (auto& c : codes) c = static_cast<std::uint8_t>(code(rng));
    pack_failures += unpack_codes(pack_codes(codes), dim) != codes;
  }
  for (int byte = 0; byte < 256; ++byte) {
    const std::vector<std::uint8_t> packed = {static_cast<std::uint8_t>(byte)};
    pack_failures += pack_codes(unpack_codes(packed, 4)) != packed;
  }
  return {violations == 0 && pack_failures == 0,
          std::to_string(checked) + " residual components, " + std::to_string(violations) +
              " outside bucket width; pack/unpack failures " + std::to_string(pack_failures)};
}

// 6. Mining window law.
Outcome mining_window_law() {
  std::mt19937_64 rng(106);
  const MiningConfig cfg;
  std::size_t bad_count = 0, out_of_window = 0, positive_hits = 0, nondeterministic = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto depth = static_cast<std::size_t>(testing::uniform_index(rng, 110, 200));
    RankedList ranking{"q" + std::to_string(trial), {}};
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < depth; ++i) ids.push_back("p" + std::to_string(rng() % 1000000) + "_" + std::to_string(i));
    std::unordered_map<std::string, std::size_t> rank_of;
    for (std::size_t i = 0; i < depth; ++i) {
      ranking.entries.push_back({ids[i], static_cast<double>(depth - i)});
      rank_of[ids[i]] = i + 1;
    }
    IdSet positives;
    for (Index p = testing::uniform_index(rng, 0, 5); p > 0; --p) {
      positives.insert(ids[static_cast<std::size_t>(testing::uniform_index(rng, 0, static_cast<Index>(depth) - 1))]);
    }
    const std::uint64_t seed = rng();
    for (const auto& [window, expected] :
         {std::pair{cfg.dense_window(), std::size_t{25}}, std::pair{cfg.bm25_window(), std::size_t{10}}}) {
      const auto picked = mine_window(ranking, positives, window, seed);
      bad_count += picked.size() != expected || std::set<std::string>(picked.begin(), picked.end()).size() != expected;
      for (const auto& id : picked) {
        const std::size_t r = rank_of.at(id);
        out_of_window += r < 11 || r > 110;
        positive_hits += positives.contains(id);
      }
      nondeterministic += mine_window(ranking, positives, window, seed) != picked;
    }
  }
  return {bad_count == 0 && out_of_window == 0 && positive_hits == 0 && nondeterministic == 0,
          "1000 rankings x {dense, bm25}: wrong counts " + std::to_string(bad_count) + ", outside ranks 11-110 " +
              std::to_string(out_of_window) + ", positives " + std::to_string(positive_hits) +
              ", seed mismatches " + std::to_string(nondeterministic)};
}

// 7. N-way construction and score transposition.
Outcome nway_construction() {
  std::mt19937_64 rng(107);
  std::normal_distribution<double> normal(0.0, 5.0);
  std::size_t failures = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::string qid = "q" + std::to_string(trial);
    TeacherScoreTable teacher;
    teacher.add({qid, "pos", normal(rng), {}});
    std::vector<std::string> candidates;
    const auto pool = testing::uniform_index(rng, 31, 80);
    for (Index i = 0; i < pool; ++i) {
      const std::string id = "c" + std::to_string(i);
      teacher.add({qid, id, normal(rng), {}});
      candidates.push_back(id);
      if (testing::uniform_index(rng, 0, 9) == 0) candidates.push_back(id);  // duplicates
    }
    IdSet keep;
    for (Index i = testing::uniform_index(rng, 0, 40); i > 0; --i) {
      keep.insert("c" + std::to_string(testing::uniform_index(rng, 0, pool - 1)));
    }
    const NWayExample ex = build_nway(qid, "pos", candidates, teacher, 32, keep, rng());
    bool ok = ex.passages.size() == 32 && ex.scores.size() == 32 && ex.passages[0] == "pos" &&
              std::set<std::string>(ex.passages.begin(), ex.passages.end()).size() == 32;
    // Keep-set members in candidate order, before any random fill.
    std::vector<std::string> expected_head;
    std::set<std::string> seen;
    for (const auto& c : candidates) {
      if (keep.contains(c) && seen.insert(c).second && expected_head.size() < 31) expected_head.push_back(c);
    }
    for (std::size_t i = 0; ok && i < expected_head.size(); ++i) ok = ex.passages[i + 1] == expected_head[i];
    for (std::size_t i = 1 + expected_head.size(); ok && i < ex.passages.size(); ++i) ok = !keep.contains(ex.passages[i]);
    for (std::size_t i = 0; ok && i < ex.passages.size(); ++i) ok = ex.scores[i] == teacher.find(qid, ex.passages[i])->value;
    failures += !ok;
  }

  const fs::path dir = fs::temp_directory_path() / "lateint_acceptance_transpose";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string source, expected_out;
  std::vector<QueryDocPair> universe;
  std::set<QueryDocPair> expected_dropped;
  for (int q = 0; q < 50; ++q) {
    for (int p = 0; p < 20; ++p) {
      const std::string qid = "q" + std::to_string(q), pid = "p" + std::to_string(p);
      std::ostringstream score;
      score.precision(static_cast<int>(testing::uniform_index(rng, 3, 20)));
      score << normal(rng);
      const std::string line = qid + "\t" + pid + "\t" + score.str() + "\n";
      source += line;
      if (testing::uniform_index(rng, 0, 1)) {
        universe.emplace_back(qid, pid);
        expected_out += line;
      }
    }
    const QueryDocPair missing{"q" + std::to_string(q), "x" + std::to_string(q)};
    universe.push_back(missing);
    expected_dropped.insert(missing);
  }
  testing::write_file(dir / "en.tsv", source);
  const TransposeResult t = transpose_scores(read_teacher_scores(dir / "en.tsv"), universe);
  write_teacher_scores(t.scores, dir / "ja.tsv");
  const bool bytes_exact = testing::read_file(dir / "ja.tsv") == expected_out;
  const bool dropped_ok = std::set<QueryDocPair>(t.dropped.begin(), t.dropped.end()) == expected_dropped &&
                          t.dropped.size() == expected_dropped.size();
  return {failures == 0 && bytes_exact && dropped_ok,
          "500 examples, " + std::to_string(failures) + " malformed; transposed scores byte-exact: " +
              (bytes_exact ? "yes" : "no") + ", dropped pairs reported " + std::to_string(t.dropped.size()) + "/" +
              std::to_string(expected_dropped.size())};
}

// 8. BM25 against the naive full-scan formula.
Outcome bm25_parity() {
  std::mt19937_64 rng(108);
  const Tokenizer ws{TokenizerScheme::kWhitespace, true};
  double worst = 0.0;
  std::size_t mismatched_sets = 0, queries = 0;
  for (int corpus = 0; corpus < 20; ++corpus) {
    const auto n = static_cast<std::size_t>(testing::uniform_index(rng, 1, 100));
    std::vector<CorpusRecord> records;
    std::vector<std::vector<std::string>> tokens;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
      std::string text;
      std::vector<std::string> toks;
      for (Index t = testing::uniform_index(rng, 1, 40); t > 0; --t) {
        toks.push_back("w" + std::to_string(testing::uniform_index(rng, 0, 60)));
        text += toks.back() + " ";
      }
      ids.push_back(testing::doc_name(i));
      records.push_back({ids.back(), text});
      tokens.push_back(toks);
    }
    const Bm25Index index = build_bm25(records, ws, {0.9, 0.4});
    for (int q = 0; q < 50; ++q) {
      std::vector<std::string> query;
      std::string text;
      for (Index t = testing::uniform_index(rng, 1, 6); t > 0; --t) {
        query.push_back("w" + std::to_string(testing::uniform_index(rng, 0, 70)));
        text += query.back() + " ";
      }
      const auto expected = testing::oracle_bm25(tokens, ids, query, 0.9, 0.4);
      const RankedList got = index.search(text, n);
      ++queries;
      if (got.entries.size() != expected.size()) {
        ++mismatched_sets;
        continue;
      }
      for (const auto& e : got.entries) {
        auto it = expected.find(e.doc_id);
        if (it == expected.end()) {
          ++mismatched_sets;
          break;
        }
        worst = std::max(worst, std::abs(e.score - it->second));
      }
    }
  }
  return {worst <= kBm25Tolerance && mismatched_sets == 0,
          std::to_string(queries) + " queries over 20 corpora (N <= 100), max |diff| " + fmt(worst) +
              ", result-set mismatches " + std::to_string(mismatched_sets)};
}

RankedList as_ranked(const std::vector<std::string>& ids) {
  RankedList r{"q", {}};
  double s = static_cast<double>(ids.size());
  for (const auto& id : ids) r.entries.push_back({id, s--});
  return r;
}

// 9. Metrics against the naive reference and hand fixtures.
Outcome metric_parity() {
  std::mt19937_64 rng(109);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto pool = testing::uniform_index(rng, 1, 40);
    std::vector<std::string> docs;
    for (Index i = 0; i < pool; ++i) docs.push_back("d" + std::to_string(i));
    std::shuffle(docs.begin(), docs.end(), rng);
    const std::vector<std::string> run(docs.begin(), docs.begin() + testing::uniform_index(rng, 0, pool));
    std::map<std::string, int> grades;
    for (const auto& d : docs) {
      if (testing::uniform_index(rng, 0, 2) == 0) grades[d] = static_cast<int>(testing::uniform_index(rng, 0, 3));
    }
    const auto k = static_cast<std::size_t>(testing::uniform_index(rng, 1, 25));
    const RankedList r = as_ranked(run);
    worst = std::max(worst, std::abs(ndcg_at_k(r, grades, k) - testing::oracle_ndcg(run, grades, k)));
    worst = std::max(worst, std::abs(recall_at_k(r, grades, k) - testing::oracle_recall(run, grades, k)));
    worst = std::max(worst, std::abs(map_at_k(r, grades, k) - testing::oracle_map(run, grades, k)));
  }
  std::vector<std::string> ten;
  for (int i = 0; i < 10; ++i) ten.push_back("x" + std::to_string(i));
  auto with = [&](std::vector<std::pair<std::size_t, std::string>> placed) {
    auto ids = ten;
    for (const auto& [rank, id] : placed) ids[rank - 1] = id;
    return as_ranked(ids);
  };
  const double ndcg = ndcg_at_k(with({{2, "r"}}), {{"r", 1}}, 10);
  const double map = map_at_k(with({{1, "a"}, {4, "b"}}), {{"a", 1}, {"b", 1}}, 10);
  const bool fixtures = std::abs(ndcg - 0.63093) < 5e-6 && std::abs(map - 0.75) < 1e-12;
  return {worst <= kMetricTolerance && fixtures, "1000 instances, max |diff| " + fmt(worst) + "; NDCG@10 rank-2 " +
                                                     std::to_string(ndcg) + ", MAP@10 ranks {1,4} " + std::to_string(map)};
}

// 10. End-to-end through the CLI, twice.
int run_cli(const std::string& args, std::string* log) {
  const std::string cmd = std::string(LATEINT_CLI) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) log->append(buf, n);
  const int status = ::pclose(pipe);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool well_formed_trec(const fs::path& path, std::size_t queries, std::size_t k) {
  std::ifstream in(path);
  std::map<std::string, std::vector<std::pair<long, double>>> rows;
  for (std::string line; std::getline(in, line);) {
    std::istringstream fields(line);
    std::string qid, q0, doc, tag, extra;
    long rank = 0;
    double score = 0;
    if (!(fields >> qid >> q0 >> doc >> rank >> score >> tag) || (fields >> extra) || q0 != "Q0") return false;
    rows[qid].emplace_back(rank, score);
  }
  if (rows.size() != queries) return false;
  for (const auto& [qid, list] : rows) {
    if (list.size() != k) return false;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].first != static_cast<long>(i + 1)) return false;
      if (i > 0 && list[i].second > list[i - 1].second) return false;
    }
  }
  return true;
}

Outcome end_to_end() {
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  const fs::path root = fs::temp_directory_path() / "lateint_acceptance_e2e";
  fs::remove_all(root);
  testing::ClusteredCorpusSpec spec;
  spec.documents = 1000;
  spec.dim = 32;
  spec.tokens_per_doc = 24;
  spec.vocabulary = 1024;
  spec.queries = 50;
  spec.seed = 110;
  const testing::PipelineInputs in = testing::write_pipeline_inputs(root / "inputs", spec);
  const fs::path work = root / "work";
  const std::vector<std::string> steps = {
      "ingest --corpus " + in.corpus.string() + " --embeddings " + in.doc_embeddings.string() + " --out " +
          (work / "docs").string() + " --kind doc",
      "ingest --embeddings " + in.query_embeddings.string() + " --out " + (work / "queries").string() + " --kind query",
      "index --store " + (work / "docs").string() + " --out " + (work / "exact").string() + " --mode exact",
      "index --store " + (work / "docs").string() + " --out " + (work / "compressed").string() +
          " --mode compressed --k-centroids auto --seed 42",
      "search --index " + (work / "exact").string() + " --queries " + (work / "queries").string() + " --k 10 --out " +
          (work / "exact.trec").string(),
      "search --index " + (work / "compressed").string() + " --queries " + (work / "queries").string() +
          " --mode compressed --nprobe 4 --k 10 --out " + (work / "compressed.trec").string(),
      "eval --run " + (work / "exact.trec").string() + " --qrels " + in.qrels.string() +
          " --metric ndcg@10 --metric recall@3 --metric map@10 --out " + (work / "exact_report.json").string(),
      "eval --run " + (work / "compressed.trec").string() + " --qrels " + in.qrels.string() +
          " --metric ndcg@10 --metric recall@3 --metric map@10 --out " + (work / "compressed_report.json").string(),
  };
  const std::vector<fs::path> manifests = {
      work / "docs" / "run_manifest.json",         work / "queries" / "run_manifest.json",
      work / "exact" / "run_manifest.json",        work / "compressed" / "run_manifest.json",
      work / "exact.trec.manifest.json",           work / "compressed.trec.manifest.json",
      work / "exact_report.json.manifest.json",    work / "compressed_report.json.manifest.json",
  };
  const std::vector<fs::path> outputs = {work / "exact.trec", work / "compressed.trec", work / "exact_report.json",
                                         work / "compressed_report.json"};

  std::vector<std::map<fs::path, std::string>> snapshots;
  std::string log;
  int failed_steps = 0;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(work);
    for (const auto& step : steps) failed_steps += run_cli(step, &log) != 0;
    std::map<fs::path, std::string> snap;
    for (const auto& p : manifests) snap[p] = testing::read_file(p);
    for (const auto& p : outputs) snap[p] = testing::read_file(p);
    snapshots.push_back(snap);
  }
  bool manifests_ok = true;
  for (const auto& p : manifests) {
    try {
      const auto m = nlohmann::json::parse(snapshots[0][p]);
      manifests_ok = manifests_ok && m.contains("inputs") && m.contains("parameters") && m.contains("version");
    } catch (const std::exception&) {
      manifests_ok = false;
    }
  }
  const bool deterministic = snapshots[0] == snapshots[1];
  const bool trec_ok = well_formed_trec(work / "exact.trec", 50, 10) && well_formed_trec(work / "compressed.trec", 50, 10);
  bool json_ok = true;
  double exact_ndcg = 0.0, compressed_ndcg = 0.0;
  try {
    const auto e = nlohmann::json::parse(snapshots[0][work / "exact_report.json"]);
    const auto c = nlohmann::json::parse(snapshots[0][work / "compressed_report.json"]);
    for (const char* key : {"ndcg@10", "recall@3", "map@10"}) {
      json_ok = json_ok && e[key]["per_query"].size() == 50 && c[key]["per_query"].size() == 50;
    }
    json_ok = json_ok && e.contains("warnings") && c.contains("warnings");
    exact_ndcg = e["ndcg@10"]["mean"].get<double>();
    compressed_ndcg = c["ndcg@10"]["mean"].get<double>();
  } catch (const std::exception&) {
    json_ok = false;
  }
  const bool pass = failed_steps == 0 && trec_ok && json_ok && manifests_ok && deterministic;
  if (!pass) std::cerr << log;
  return {pass, std::to_string(2 * steps.size() - static_cast<std::size_t>(failed_steps)) + "/" +
                    std::to_string(2 * steps.size()) + " CLI steps exit 0, TREC " + (trec_ok ? "ok" : "bad") +
                    ", JSON " + (json_ok ? "ok" : "bad") + ", manifests identical across runs: " +
                    (deterministic ? "yes" : "no") + " (ndcg@10 exact " + fmt(exact_ndcg) + ", compressed " +
                    fmt(compressed_ndcg) + ")"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"maxsim oracle equivalence", maxsim_equivalence},
      {"gradient checks", gradient_checks},
      {"exact-index fidelity", exact_fidelity},
      {"compressed-index quality", compressed_quality},
      {"quantization round trip", quantization_round_trip},
      {"mining window law", mining_window_law},
      {"n-way construction", nway_construction},
      {"bm25 parity", bm25_parity},
      {"metric parity", metric_parity},
      {"end-to-end smoke", end_to_end},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    const auto start = Clock::now();
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += !outcome.pass;
    std::printf("%s  %2zu  %-26s %s [%.1f s]\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                outcome.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
