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
#include <vector>

namespace lateint {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Stage {
  kIngest,
  kIndex,
  kSearch,
  kBm25Build,
  kBm25Search,
  kScore,
  kMineDense,
  kMineBm25,
  kTranspose,
  kNway,
  kEval,
};

std::string_view to_string(Stage stage);

// Every option of every stage. Empty strings mean "not given"; each stage
// validates the fields it needs and names the offending field on failure.
struct PipelineConfig {
  // inputs
  std::string corpus;
  std::string embeddings;
  std::string store;
  std::string index;
  std::string queries;
  std::string query_store;
  std::string doc_store;
  std::string pairs;
  std::string run;
  std::string qrels;
  std::string scores;
  std::string input;
  std::string keep;
  std::string merge;
  // outputs
  std::string out;
  std::string dropped;
  // ingest
  std::string kind = "doc";
  std::string precision;  // default: float16 for documents, float32 for queries
  // index / search
  std::string mode;  // exact | compressed
  std::string k_centroids = "auto";
  int kmeans_iterations = 4;
  std::string index_precision = "float16";
  std::size_t k = 10;
  std::size_t nprobe = 4;
  std::size_t candidate_cap = 8192;
  std::string run_tag = "lateint";
  // bm25
  std::string tokenizer = "char-bigram";
  bool lowercase = true;
  double k1 = 0.9;
  double b = 0.4;
  // mining
  std::size_t retrieve_depth = 110;
  std::size_t discard_top = 10;
  std::size_t sample_count_dense = 25;
  std::size_t sample_count_bm25 = 10;
  // n-way
  std::size_t n = 32;
  double temperature = 1.0;
  // eval
  std::vector<std::string> metrics;
  // shared
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
};

struct StageResult {
  std::filesystem::path manifest_path;
  std::string manifest_json;
  std::vector<std::string> messages;  // human-readable notes for the log
  std::string report;                 // eval report JSON
};

// Validates the config for `stage`, runs it, and writes a manifest recording
// input hashes, parameters, seed and tool version next to the output. Throws
// ConfigError for invalid configuration; stage errors propagate.
StageResult run_pipeline(const PipelineConfig& config, Stage stage);

}  // namespace lateint
