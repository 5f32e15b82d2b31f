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

// lateint: late-interaction retrieval and training-data toolkit.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lateint/embedding_store.hpp"
#include "lateint/errors.hpp"
#include "lateint/pipeline.hpp"

namespace {

using lateint::PipelineConfig;
using lateint::Stage;

void add_retrieval_options(CLI::App* cmd, PipelineConfig& cfg) {
  cmd->add_option("--k", cfg.k, "Results per query")->capture_default_str();
  cmd->add_option("--nprobe", cfg.nprobe, "Centroids probed per query token")->capture_default_str();
  cmd->add_option("--candidate-cap", cfg.candidate_cap, "Max candidates decompressed per query")
      ->capture_default_str();
}

void add_mining_options(CLI::App* cmd, PipelineConfig& cfg) {
  cmd->add_option("--qrels", cfg.qrels, "Positives as TREC qrels (grade > 0)");
  cmd->add_option("--out", cfg.out, "Negatives JSONL");
  cmd->add_option("--merge", cfg.merge, "Earlier negatives JSONL whose other list is carried over");
  cmd->add_option("--seed", cfg.seed, "Sampling seed");
  cmd->add_option("--retrieve-depth", cfg.retrieve_depth)->capture_default_str();
  cmd->add_option("--discard-top", cfg.discard_top)->capture_default_str();
  cmd->add_option("--sample-dense", cfg.sample_count_dense)->capture_default_str();
  cmd->add_option("--sample-bm25", cfg.sample_count_bm25)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  PipelineConfig cfg;
  CLI::App app{"Late-interaction retrieval engine and training-data tools", "lateint"};
  app.set_config("--config", "", "INI/TOML config file; sections per subcommand, flags override");
  app.set_version_flag("--version",
                       std::string("lateint ") + lateint::kToolVersion + " (embeddings format " +
                           std::to_string(lateint::kEmbeddingFormatVersion) + ", index format 1, bm25 format 1)");
  app.add_option("--threads", cfg.threads, "Worker threads for per-query work")->capture_default_str();
  app.require_subcommand(1);

  Stage stage = Stage::kEval;
  auto bind = [&](CLI::App* cmd, Stage s) { cmd->callback([&stage, s] { stage = s; }); };

  auto* ingest = app.add_subcommand("ingest", "Ingest precomputed token embeddings into a store");
  ingest->add_option("--corpus", cfg.corpus, "Corpus JSONL ({id, text}) the embeddings belong to");
  ingest->add_option("--embeddings", cfg.embeddings, "Binary embedding file (LIEM)")->required();
  ingest->add_option("--out", cfg.out, "Store directory")->required();
  ingest->add_option("--kind", cfg.kind, "doc or query")->check(CLI::IsMember({"doc", "query"}))->capture_default_str();
  ingest->add_option("--precision", cfg.precision, "float32 or float16 (default: f16 docs, f32 queries)");
  bind(ingest, Stage::kIngest);

  auto* index = app.add_subcommand("index", "Build an exact or compressed index from a document store");
  index->add_option("--store", cfg.store, "Document store directory")->required();
  index->add_option("--out", cfg.out, "Index directory")->required();
  index->add_option("--mode", cfg.mode, "exact or compressed")->check(CLI::IsMember({"exact", "compressed"}));
  index->add_option("--precision", cfg.index_precision, "Exact index storage precision")->capture_default_str();
  index->add_option("--k-centroids", cfg.k_centroids, "Centroid count or 'auto'")->capture_default_str();
  index->add_option("--kmeans-iterations", cfg.kmeans_iterations)->capture_default_str();
  index->add_option("--nprobe", cfg.nprobe, "Default nprobe recorded in meta.json")->capture_default_str();
  index->add_option("--candidate-cap", cfg.candidate_cap)->capture_default_str();
  index->add_option("--seed", cfg.seed, "k-means seed (compressed mode)");
  bind(index, Stage::kIndex);

  auto* search = app.add_subcommand("search", "MaxSim search over an index, TREC run output");
  search->add_option("--index", cfg.index, "Index directory")->required();
  search->add_option("--queries", cfg.queries, "Query store directory")->required();
  search->add_option("--out", cfg.out, "TREC run file")->required();
  search->add_option("--mode", cfg.mode, "Expected index mode")->check(CLI::IsMember({"exact", "compressed"}));
  search->add_option("--run-tag", cfg.run_tag)->capture_default_str();
  add_retrieval_options(search, cfg);
  bind(search, Stage::kSearch);

  auto* bm25 = app.add_subcommand("bm25", "Lexical BM25 index");
  bm25->require_subcommand(1);
  auto* bm25_build = bm25->add_subcommand("build", "Build a BM25 index from a corpus JSONL");
  bm25_build->add_option("--corpus", cfg.corpus)->required();
  bm25_build->add_option("--out", cfg.out, "Index directory")->required();
  bm25_build->add_option("--tokenizer", cfg.tokenizer, "char-bigram, char-unigram or whitespace")
      ->capture_default_str();
  bm25_build->add_flag("--lowercase,!--no-lowercase", cfg.lowercase)->capture_default_str();
  bm25_build->add_option("--k1", cfg.k1)->capture_default_str();
  bm25_build->add_option("--b", cfg.b)->capture_default_str();
  bind(bm25_build, Stage::kBm25Build);
  auto* bm25_search = bm25->add_subcommand("search", "Search a BM25 index with a query JSONL");
  bm25_search->add_option("--index", cfg.index)->required();
  bm25_search->add_option("--queries", cfg.queries, "Query JSONL ({id, text})")->required();
  bm25_search->add_option("--k", cfg.k)->capture_default_str();
  bm25_search->add_option("--out", cfg.out, "TREC run file")->required();
  bm25_search->add_option("--run-tag", cfg.run_tag)->capture_default_str();
  bind(bm25_search, Stage::kBm25Search);

  auto* score = app.add_subcommand("score", "MaxSim scores for explicit (query, document) pairs");
  score->add_option("--query-store", cfg.query_store)->required();
  score->add_option("--doc-store", cfg.doc_store)->required();
  score->add_option("--pairs", cfg.pairs, "TSV qid\\tdid")->required();
  score->add_option("--out", cfg.out, "TSV qid\\tdid\\tscore")->required();
  bind(score, Stage::kScore);

  auto* mine = app.add_subcommand("mine", "Hard-negative mining");
  mine->require_subcommand(1);
  auto* mine_dense = mine->add_subcommand("dense", "Sample negatives from a dense retrieval run");
  mine_dense->add_option("--run", cfg.run, "TREC run at depth >= 110")->required();
  add_mining_options(mine_dense, cfg);
  bind(mine_dense, Stage::kMineDense);
  auto* mine_bm25 = mine->add_subcommand("bm25", "Sample negatives from BM25 retrieval");
  mine_bm25->add_option("--index", cfg.index, "BM25 index directory")->required();
  mine_bm25->add_option("--queries", cfg.queries, "Query JSONL ({id, text})")->required();
  add_mining_options(mine_bm25, cfg);
  bind(mine_bm25, Stage::kMineBm25);

  auto* transpose = app.add_subcommand("transpose", "Carry teacher scores over to a translated pair set");
  transpose->add_option("--scores", cfg.scores, "Source TSV qid\\tpid\\tscore")->required();
  transpose->add_option("--pairs", cfg.pairs, "Target pair universe TSV qid\\tpid")->required();
  transpose->add_option("--out", cfg.out, "Retained scores TSV")->required();
  transpose->add_option("--dropped", cfg.dropped, "Pairs without a source score")->required();
  bind(transpose, Stage::kTranspose);

  auto* nway = app.add_subcommand("nway", "Build n-way distillation examples");
  nway->add_option("--input", cfg.input, "Negatives JSONL or wider n-way JSONL")->required();
  nway->add_option("--scores", cfg.scores, "Teacher scores TSV");
  nway->add_option("--keep", cfg.keep, "Negatives to keep first (negatives JSONL or qid\\tpid TSV)");
  nway->add_option("--n", cfg.n)->capture_default_str();
  nway->add_option("--temperature", cfg.temperature, "Recorded distillation temperature")->capture_default_str();
  nway->add_option("--seed", cfg.seed, "Sampling seed");
  nway->add_option("--out", cfg.out, "N-way JSONL")->required();
  bind(nway, Stage::kNway);

  auto* eval = app.add_subcommand("eval", "Evaluate a TREC run against qrels");
  eval->add_option("--run", cfg.run)->required();
  eval->add_option("--qrels", cfg.qrels)->required();
  eval->add_option("--metric", cfg.metrics, "e.g. ndcg@10, recall@3, map@10, mrr@10 (repeatable)");
  eval->add_option("--out", cfg.out, "Report JSON (stdout when omitted)");
  bind(eval, Stage::kEval);

  CLI11_PARSE(app, argc, argv);

  try {
    const lateint::StageResult result = lateint::run_pipeline(cfg, stage);
    for (const auto& m : result.messages) std::cerr << "lateint: " << m << '\n';
    if (!result.report.empty() && cfg.out.empty()) std::cout << result.report << '\n';
    if (!result.manifest_path.empty()) {
      std::cerr << "lateint: " << to_string(stage) << " done, manifest " << result.manifest_path.string() << '\n';
    }
  } catch (const lateint::ConfigError& e) {
    std::cerr << "lateint: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "lateint: " << to_string(stage) << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
