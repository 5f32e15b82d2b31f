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

#include "lateint/pipeline.hpp"

#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "lateint/bm25.hpp"
#include "lateint/compressed_index.hpp"
#include "lateint/embedding_store.hpp"
#include "lateint/exact_index.hpp"
#include "lateint/hashing.hpp"
#include "lateint/metrics.hpp"
#include "lateint/mining.hpp"
#include "lateint/scoring.hpp"
#include "lateint/trec.hpp"

namespace lateint {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kIngest:
      return "ingest";
    case Stage::kIndex:
      return "index";
    case Stage::kSearch:
      return "search";
    case Stage::kBm25Build:
      return "bm25 build";
    case Stage::kBm25Search:
      return "bm25 search";
    case Stage::kScore:
      return "score";
    case Stage::kMineDense:
      return "mine dense";
    case Stage::kMineBm25:
      return "mine bm25";
    case Stage::kTranspose:
      return "transpose";
    case Stage::kNway:
      return "nway";
    case Stage::kEval:
      return "eval";
  }
  return "?";
}

namespace {

class StageRun {
 public:
  StageRun(const PipelineConfig& cfg, Stage stage) : cfg_(cfg), stage_(stage) {
    manifest_["tool"] = "lateint";
    manifest_["version"] = kToolVersion;
    manifest_["formats"] = {{"embeddings", kEmbeddingFormatVersion}, {"index", 1}, {"bm25", 1}};
    manifest_["stage"] = to_string(stage);
    manifest_["inputs"] = ojson::object();
    manifest_["parameters"] = ojson::object();
    manifest_["seed"] = nullptr;
    manifest_["outputs"] = ojson::object();
  }

  // Existing input path; recorded with its content hash.
  fs::path input(std::string_view field, const std::string& value) {
    if (value.empty()) throw ConfigError("--" + std::string(field) + " is required for " + stage_name());
    const fs::path p(value);
    if (!fs::exists(p)) {
      throw ConfigError("--" + std::string(field) + ": path does not exist: " + value);
    }
    manifest_["inputs"][std::string(field)] = {{"path", value}, {"sha256", sha256_path(p)}};
    return p;
  }

  std::optional<fs::path> optional_input(std::string_view field, const std::string& value) {
    if (value.empty()) return std::nullopt;
    return input(field, value);
  }

  fs::path output(std::string_view field, const std::string& value) {
    if (value.empty()) throw ConfigError("--" + std::string(field) + " is required for " + stage_name());
    const fs::path p(value);
    if (p.has_parent_path() && !fs::exists(p.parent_path())) fs::create_directories(p.parent_path());
    outputs_.emplace_back(std::string(field), p);
    return p;
  }

  std::uint64_t seed() {
    if (!cfg_.seed) throw ConfigError("--seed is required for " + stage_name() + " (no implicit seeds)");
    manifest_["seed"] = *cfg_.seed;
    return *cfg_.seed;
  }

  template <typename T>
  void param(const std::string& key, const T& value) {
    manifest_["parameters"][key] = value;
  }

  void note(std::string message) { notes_.push_back(std::move(message)); }

  StageResult finish() {
    if (!notes_.empty()) manifest_["notes"] = notes_;
    for (const auto& [field, p] : outputs_) {
      manifest_["outputs"][field] = {{"path", p.string()}, {"sha256", sha256_path(p)}};
    }
    StageResult result;
    result.manifest_json = manifest_.dump(2);
    result.messages = notes_;
    if (!outputs_.empty()) {
      const fs::path& primary = outputs_.front().second;
      result.manifest_path = fs::is_directory(primary) ? primary / "run_manifest.json"
                                                       : fs::path(primary.string() + ".manifest.json");
      std::ofstream out(result.manifest_path, std::ios::trunc);
      out << result.manifest_json << '\n';
      if (!out) throw Error("cannot write manifest " + result.manifest_path.string());
    }
    return result;
  }

  std::string stage_name() const { return std::string(to_string(stage_)); }

 private:
  const PipelineConfig& cfg_;
  Stage stage_;
  ojson manifest_;
  std::vector<std::pair<std::string, fs::path>> outputs_;
  std::vector<std::string> notes_;
};

template <typename T>
T parse_or_config_error(std::string_view field, auto&& parse) {
  try {
    return parse();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("--" + std::string(field) + ": " + e.what());
  }
}

nlohmann::json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw FormatError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

PositiveMap positives_from_qrels(const Qrels& qrels) {
  PositiveMap positives;
  for (const auto& [qid, docs] : qrels) {
    auto& set = positives[qid];
    for (const auto& [doc, grade] : docs) {
      if (grade > 0) set.insert(doc);
    }
  }
  return positives;
}

std::vector<std::string> sorted_positives(const IdSet& set) {
  std::vector<std::string> out(set.begin(), set.end());
  std::sort(out.begin(), out.end());
  return out;
}

void check_retrieval_params(const PipelineConfig& cfg) {
  if (cfg.k == 0) throw ConfigError("--k must be >= 1");
  if (cfg.nprobe == 0) throw ConfigError("--nprobe must be >= 1");
  if (cfg.candidate_cap < cfg.k) throw ConfigError("--candidate-cap must be >= --k");
}

MiningConfig mining_config(const PipelineConfig& cfg, std::uint64_t seed) {
  MiningConfig m;
  m.retrieve_depth = cfg.retrieve_depth;
  m.discard_top = cfg.discard_top;
  m.sample_count_dense = cfg.sample_count_dense;
  m.sample_count_bm25 = cfg.sample_count_bm25;
  m.seed = seed;
  m.validate();
  return m;
}

void record_mining_params(StageRun& run, const MiningConfig& m) {
  run.param("retrieve_depth", m.retrieve_depth);
  run.param("discard_top", m.discard_top);
  run.param("sample_count_dense", m.sample_count_dense);
  run.param("sample_count_bm25", m.sample_count_bm25);
}

// Mined negatives merged with an optional earlier negatives file, in qrels order.
void write_mined(StageRun& run, const PipelineConfig& cfg, const Qrels& qrels,
                 const MiningResult& mined, bool dense, std::uint64_t seed, const fs::path& out) {
  std::unordered_map<std::string, NegativesRecord> merged;
  if (auto merge = run.optional_input("merge", cfg.merge)) {
    for (auto& r : read_negatives(*merge)) merged.emplace(r.query_id, std::move(r));
  }
  const PositiveMap positives = positives_from_qrels(qrels);
  std::vector<NegativesRecord> records;
  for (const auto& q : mined.per_query) {
    NegativesRecord r;
    if (auto it = merged.find(q.query_id); it != merged.end()) r = it->second;
    r.query_id = q.query_id;
    r.positives = sorted_positives(positives.at(q.query_id));
    (dense ? r.dense_negatives : r.bm25_negatives) = q.negatives;
    r.seed = seed;
    records.push_back(std::move(r));
  }
  write_negatives(records, out);
  run.param("queries_mined", mined.per_query.size());
  if (!mined.skipped.empty()) {
    std::string msg = "queries skipped (ranking too short):";
    for (const auto& q : mined.skipped) msg += " " + q;
    run.note(msg);
  }
}

std::vector<std::string> query_ids_with_positives(const Qrels& qrels) {
  std::vector<std::string> ids;
  for (const auto& [qid, docs] : qrels) {
    for (const auto& [doc, grade] : docs) {
      if (grade > 0) {
        ids.push_back(qid);
        break;
      }
    }
  }
  return ids;
}

IdSet keep_set_for(const std::unordered_map<std::string, IdSet>& keep, const std::string& qid) {
  auto it = keep.find(qid);
  return it == keep.end() ? IdSet{} : it->second;
}

std::unordered_map<std::string, IdSet> read_keep_file(const fs::path& p) {
  std::unordered_map<std::string, IdSet> keep;
  if (p.extension() == ".jsonl" || p.extension() == ".json") {
    for (const auto& r : read_negatives(p)) {
      auto& set = keep[r.query_id];
      set.insert(r.dense_negatives.begin(), r.dense_negatives.end());
      set.insert(r.bm25_negatives.begin(), r.bm25_negatives.end());
    }
  } else {
    for (const auto& [qid, pid] : read_pairs(p)) keep[qid].insert(pid);
  }
  return keep;
}

StageResult run_ingest(const PipelineConfig& cfg) {
  StageRun run(cfg, Stage::kIngest);
  const TextKind kind = parse_or_config_error<TextKind>("kind", [&] { return parse_kind(cfg.kind); });
  const Precision precision = parse_or_config_error<Precision>("precision", [&] {
    if (!cfg.precision.empty()) return parse_precision(cfg.precision);
    return kind == TextKind::kDocument ? Precision::kFloat16 : Precision::kFloat32;
  });
  const auto corpus_path = run.optional_input("corpus", cfg.corpus);
  const fs::path embeddings = run.input("embeddings", cfg.embeddings);
  const fs::path out = run.output("out", cfg.out);

  EmbeddingStore store = cast_precision(ingest_embeddings(embeddings, kind), precision);
  if (corpus_path) {
    std::unordered_map<std::string, bool> known;
    for (const auto& r : read_corpus(*corpus_path)) known.emplace(r.id, true);
    for (const auto& id : store.ids()) {
      if (!known.contains(id)) throw FormatError("embedding id '" + id + "' not found in corpus");
    }
    if (known.size() != store.size()) {
      run.note(std::to_string(known.size() - store.size()) + " corpus records have no embeddings");
    }
    store.set_corpus_name(corpus_path->stem().string());
  } else {
    store.set_corpus_name(embeddings.stem().string());
  }
  store.set_created_unix(creation_timestamp());
  save_store(store, out);
  run.param("kind", to_string(kind));
  run.param("precision", to_string(precision));
  run.param("entries", store.size());
  run.param("dim", store.dim());
  run.param("total_tokens", store.total_tokens());
  return run.finish();
}

StageResult run_index(const PipelineConfig& cfg) {
  StageRun run(cfg, Stage::kIndex);
  const fs::path store_dir = run.input("store", cfg.store);
  const std::string mode = cfg.mode.empty() ? "exact" : cfg.mode;
  if (mode != "exact" && mode != "compressed") throw ConfigError("--mode must be exact or compressed");
  const fs::path out = run.output("out", cfg.out);
  const EmbeddingStore store = load_store(store_dir);
  run.param("mode", mode);

  if (mode == "exact") {
    const Precision precision = parse_or_config_error<Precision>(
        "precision", [&] { return parse_precision(cfg.index_precision); });
    save_exact_index(build_exact(store, precision), out);
    run.param("precision", to_string(precision));
    return run.finish();
  }

  const std::uint64_t seed = run.seed();
  Index k = 0;
  if (cfg.k_centroids == "auto") {
    k = default_centroid_count(store.total_tokens());
  } else {
    k = parse_or_config_error<Index>("k-centroids", [&] {
      const long long v = std::stoll(cfg.k_centroids);
      if (v < 1) throw Error("must be >= 1 or auto");
      return static_cast<Index>(v);
    });
  }
  if (cfg.kmeans_iterations < 1) throw ConfigError("--kmeans-iterations must be >= 1");
  const Codebook codebook = train_codebook(store, k, cfg.kmeans_iterations, seed);
  const CompressedIndex index = compress(store, codebook, seed);
  nlohmann::json extra = {
      {"k_centroids_rule", cfg.k_centroids == "auto" ? "next_pow2(round(16*sqrt(total_tokens)))" : "explicit"},
      {"kmeans_iterations", cfg.kmeans_iterations},
      {"default_nprobe", cfg.nprobe},
      {"default_candidate_cap", cfg.candidate_cap},
  };
  save_compressed_index(index, out, extra.dump());
  run.param("k_centroids", k);
  run.param("kmeans_iterations", cfg.kmeans_iterations);
  return run.finish();
}

StageResult run_search(const PipelineConfig& cfg) {
  StageRun run(cfg, Stage::kSearch);
  const fs::path index_dir = run.input("index", cfg.index);
  const fs::path query_dir = run.input("queries", cfg.queries);
  const fs::path out = run.output("out", cfg.out);
  check_retrieval_params(cfg);
  const auto meta = read_json_file(index_dir / "meta.json");
  const std::string mode = meta.at("mode").get<std::string>();
  if (!cfg.mode.empty() && cfg.mode != mode) {
    throw ConfigError("--mode " + cfg.mode + " does not match index mode " + mode);
  }
  const EmbeddingStore queries = load_store(query_dir);
  std::vector<RankedList> runs;
  run.param("mode", mode);
  run.param("k", cfg.k);
  if (mode == "exact") {
    runs = search_exact_all(load_exact_index(index_dir), queries, cfg.k, cfg.threads);
  } else {
    const CompressedSearchParams params{cfg.k, cfg.nprobe, cfg.candidate_cap};
    runs = search_compressed_all(load_compressed_index(index_dir), queries, params, cfg.threads);
    run.param("nprobe", cfg.nprobe);
    run.param("candidate_cap", cfg.candidate_cap);
  }
  write_trec_run(runs, out, cfg.run_tag);
  run.param("run_tag", cfg.run_tag);
  run.param("queries", queries.size());
  return run.finish();
}

Tokenizer tokenizer_from(const PipelineConfig& cfg) {
  Tokenizer t;
  t.scheme = parse_or_config_error<TokenizerScheme>("tokenizer",
                                                    [&] { return parse_tokenizer_scheme(cfg.tokenizer); });
  t.lowercase = cfg.lowercase;
  return t;
}

StageResult run_bm25_build(const PipelineConfig& cfg) {
  StageRun run(cfg, Stage::kBm25Build);
  const fs::path corpus = run.input("corpus", cfg.corpus);
  const fs::path out = run.output("out", cfg.out);
  const Tokenizer tokenizer = tokenizer_from(cfg);
  if (!(cfg.k1 >= 0.0)) throw ConfigError("--k1 must be >= 0");
  if (!(cfg.b >= 0.0 && cfg.b <= 1.0)) throw ConfigError("--b must be in [0, 1]");
  const Bm25Index index = build_bm25(read_corpus(corpus), tokenizer, {cfg.k1, cfg.b});
  save_bm25(index, out);
  run.param("tokenizer", to_string(tokenizer.scheme));
  run.param("lowercase", tokenizer.lowercase);
  run.param("k1", cfg.k1);
  run.param("b", cfg.b);
  run.param("documents", index.size());
  return run.finish();
}

StageResult run_bm25_search(const PipelineConfig& cfg) {
  StageRun run(cfg, Stage::kBm25Search);
  const fs::path index_dir = run.input("index", cfg.index);
  const fs::path queries_path = run.input("queries", cfg.queries);
  const fs::path out = run.output("out", cfg.out);
  if (cfg.k == 0) throw ConfigError("--k must be >= 1");
  const Bm25Index index = load_bm25(index_dir);
  const auto queries = read_corpus(queries_path);
  std::vector<RankedList> runs;
  runs.reserve(queries.size());
  for (const auto& q : queries) runs.push_back(index.search(q.text, cfg.k, q.id));
  write_trec_run(runs, out, cfg.run_tag);
  run.param("k", cfg.k);
  run.param("run_tag", cfg.run_tag);
  run.param("queries", queries.size());
  return run.finish();
}

StageResult run_score(const PipelineConfig& cfg) {
  StageRun run(cfg, Stage::kScore);
  const EmbeddingStore queries = load_store(run.input("query-store", cfg.query_store));
  const EmbeddingStore docs = load_store(run.input("doc-store", cfg.doc_store));
  const auto pairs = read_pairs(run.input("pairs", cfg.pairs));
  const fs::path out = run.output("out", cfg.out);
  std::ofstream os(out, std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + out.string());
  for (const auto& [qid, did] : pairs) {
    const auto qi = queries.find(qid);
    const auto di = docs.find(did);
    if (!qi) throw Error("query '" + qid + "' not in query store");
    if (!di) throw Error("document '" + did + "' not in document store");
    os << qid << '\t' << did << '\t' << format_score(maxsim(queries.matrix(*qi), docs.matrix(*di))) << '\n';
  }
  os.close();
  run.param("pairs", pairs.size());
  return run.finish();
}

StageResult run_mine_dense(const PipelineConfig& cfg) {
  StageRun run(cfg, Stage::kMineDense);
  const fs::path run_path = run.input("run", cfg.run);
  const Qrels qrels = read_qrels(run.input("qrels", cfg.qrels));
  const fs::path out = run.output("out", cfg.out);
  const std::uint64_t seed = run.seed();
  const MiningConfig m = mining_config(cfg, seed);
  record_mining_params(run, m);

  ParsedRun parsed = read_trec_run(run_path);
  std::unordered_map<std::string, RankedList> runs;
  for (auto& q : parsed.queries) runs.emplace(q.query_id, std::move(q));
  for (auto& w : parsed.warnings) run.note(std::move(w));
  const MiningResult mined = mine_dense(query_ids_with_positives(qrels), runs, positives_from_qrels(qrels), m);
  write_mined(run, cfg, qrels, mined, /*dense=*/true, seed, out);
  return run.finish();
}

StageResult run_mine_bm25(const PipelineConfig& cfg) {
  StageRun run(cfg, Stage::kMineBm25);
  const Bm25Index index = load_bm25(run.input("index", cfg.index));
  const auto query_records = read_corpus(run.input("queries", cfg.queries));
  const Qrels qrels = read_qrels(run.input("qrels", cfg.qrels));
  const fs::path out = run.output("out", cfg.out);
  const std::uint64_t seed = run.seed();
  const MiningConfig m = mining_config(cfg, seed);
  record_mining_params(run, m);

  const PositiveMap positives = positives_from_qrels(qrels);
  std::vector<QueryText> queries;
  for (const auto& r : query_records) {
    auto it = positives.find(r.id);
    if (it != positives.end() && !it->second.empty()) queries.push_back({r.id, r.text});
  }
  const MiningResult mined = mine_bm25(queries, index, positives, m);
  write_mined(run, cfg, qrels, mined, /*dense=*/false, seed, out);
  return run.finish();
}

StageResult run_transpose(const PipelineConfig& cfg) {
  StageRun run(cfg, Stage::kTranspose);
  const TeacherScoreTable source = read_teacher_scores(run.input("scores", cfg.scores));
  const auto universe = read_pairs(run.input("pairs", cfg.pairs));
  const fs::path out = run.output("out", cfg.out);
  const fs::path dropped = run.output("dropped", cfg.dropped);
  const TransposeResult result = transpose_scores(source, universe);
  write_teacher_scores(result.scores, out);
  write_pairs(result.dropped, dropped);
  run.param("pairs", universe.size());
  run.param("retained", result.scores.size());
  run.param("dropped", result.dropped.size());
  return run.finish();
}

StageResult run_nway(const PipelineConfig& cfg) {
  StageRun run(cfg, Stage::kNway);
  const fs::path input = run.input("input", cfg.input);
  const auto scores_path = run.optional_input("scores", cfg.scores);
  const auto keep_path = run.optional_input("keep", cfg.keep);
  const fs::path out = run.output("out", cfg.out);
  const std::uint64_t seed = run.seed();
  if (cfg.n < 2) throw ConfigError("--n must be >= 2");

  TeacherScoreTable teacher = scores_path ? read_teacher_scores(*scores_path) : TeacherScoreTable("inline");
  const auto keep = keep_path ? read_keep_file(*keep_path) : std::unordered_map<std::string, IdSet>{};

  struct Source {
    std::string qid;
    std::string positive;
    std::vector<std::string> candidates;
  };
  std::vector<Source> sources;
  // Either wider n-way examples (passages + inline scores) or mined negatives.
  std::ifstream probe(input);
  std::string first;
  while (std::getline(probe, first) && first.find_first_not_of(" \t\r") == std::string::npos) {
  }
  const bool nway_input = first.find("\"passages\"") != std::string::npos;
  if (nway_input) {
    for (auto& e : read_nway(input)) {
      if (e.passages.empty()) continue;
      if (!scores_path) {
        for (std::size_t i = 0; i < e.passages.size(); ++i) {
          if (!teacher.find(e.query_id, e.passages[i])) teacher.add({e.query_id, e.passages[i], e.scores[i], {}});
        }
      }
      sources.push_back({e.query_id, e.passages[0], {e.passages.begin() + 1, e.passages.end()}});
    }
  } else {
    if (!scores_path) throw ConfigError("--scores is required when --input holds mined negatives");
    for (auto& r : read_negatives(input)) {
      if (r.positives.empty()) continue;
      Source s{r.query_id, r.positives.front(), r.dense_negatives};
      s.candidates.insert(s.candidates.end(), r.bm25_negatives.begin(), r.bm25_negatives.end());
      sources.push_back(std::move(s));
    }
  }

  std::vector<NWayExample> examples;
  std::size_t skipped = 0;
  for (const auto& s : sources) {
    try {
      examples.push_back(build_nway(s.qid, s.positive, s.candidates, teacher, cfg.n,
                                    keep_set_for(keep, s.qid), derive_seed(seed, s.qid, "nway")));
    } catch (const InsufficientCandidates& e) {
      ++skipped;
      run.note(e.what());
    } catch (const MissingTeacherScore& e) {
      ++skipped;
      run.note(e.what());
    }
  }
  write_nway(examples, out);
  run.param("n", cfg.n);
  run.param("input_format", nway_input ? "nway" : "negatives");
  run.param("examples", examples.size());
  run.param("skipped", skipped);
  run.param("distillation_loss", kKlDirection);
  run.param("temperature", cfg.temperature);
  return run.finish();
}

StageResult run_eval(const PipelineConfig& cfg) {
  StageRun run(cfg, Stage::kEval);
  const fs::path run_path = run.input("run", cfg.run);
  const fs::path qrels_path = run.input("qrels", cfg.qrels);
  std::vector<MetricSpec> specs;
  const std::vector<std::string> names =
      cfg.metrics.empty() ? std::vector<std::string>{"ndcg@10", "recall@3", "map@10"} : cfg.metrics;
  for (const auto& name : names) {
    specs.push_back(parse_or_config_error<MetricSpec>("metric", [&] { return MetricSpec::parse(name); }));
  }
  std::optional<fs::path> out;
  if (!cfg.out.empty()) out = run.output("out", cfg.out);
  const EvalReport report = evaluate(run_path, qrels_path, specs);
  const std::string text = report.to_json();
  if (out) {
    std::ofstream os(*out, std::ios::trunc);
    os << text << '\n';
    if (!os) throw Error("cannot write report " + out->string());
  }
  run.param("metrics", names);
  StageResult result = run.finish();
  result.report = text;
  return result;
}

}  // namespace

StageResult run_pipeline(const PipelineConfig& config, Stage stage) {
  if (config.threads == 0) throw ConfigError("--threads must be >= 1");
  switch (stage) {
    case Stage::kIngest:
      return run_ingest(config);
    case Stage::kIndex:
      return run_index(config);
    case Stage::kSearch:
      return run_search(config);
    case Stage::kBm25Build:
      return run_bm25_build(config);
    case Stage::kBm25Search:
      return run_bm25_search(config);
    case Stage::kScore:
      return run_score(config);
    case Stage::kMineDense:
      return run_mine_dense(config);
    case Stage::kMineBm25:
      return run_mine_bm25(config);
    case Stage::kTranspose:
      return run_transpose(config);
    case Stage::kNway:
      return run_nway(config);
    case Stage::kEval:
      return run_eval(config);
  }
  throw ConfigError("unknown stage");
}

}  // namespace lateint
