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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lateint/trec.hpp"
#include "lateint/types.hpp"

namespace lateint {

enum class Metric { kNdcg, kRecall, kMap, kMrr };

struct MetricSpec {
  Metric metric = Metric::kNdcg;
  std::size_t k = 10;

  std::string name() const;  // e.g. "ndcg@10"
  static MetricSpec parse(std::string_view text);
  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

// Per-query metrics. `judged` maps document id to grade for the run's query;
// a document counts as relevant when its grade is positive.
//
// NDCG uses gain 2^grade - 1 and discount log2(rank + 1); the ideal DCG is
// built from all judged grades. MAP divides by min(|relevant|, k). Queries
// with no relevant document score 0 under every metric.
double ndcg_at_k(const RankedList& run, const std::map<std::string, int>& judged, std::size_t k);
double recall_at_k(const RankedList& run, const std::map<std::string, int>& judged, std::size_t k);
double map_at_k(const RankedList& run, const std::map<std::string, int>& judged, std::size_t k);
double mrr_at_k(const RankedList& run, const std::map<std::string, int>& judged, std::size_t k);

double metric_at_k(const MetricSpec& spec, const RankedList& run,
                   const std::map<std::string, int>& judged);

struct MetricResult {
  double mean = 0.0;
  std::map<std::string, double> per_query;
};

struct EvalReport {
  std::vector<std::pair<MetricSpec, MetricResult>> metrics;
  std::vector<std::string> warnings;
  std::size_t evaluated_queries = 0;
  std::size_t queries_without_relevant = 0;

  const MetricResult& at(const MetricSpec& spec) const;
  // {metric: {mean, per_query}, warnings: [...], conventions: {...}, queries: {...}}
  std::string to_json() const;
};

// Macro-averages over every query in `qrels`. Run queries missing from qrels
// are reported and ignored; qrels queries missing from the run score 0.
EvalReport evaluate(const std::vector<RankedList>& run, const Qrels& qrels,
                    const std::vector<MetricSpec>& specs);
EvalReport evaluate(const std::filesystem::path& run_file, const std::filesystem::path& qrels_file,
                    const std::vector<MetricSpec>& specs);

}  // namespace lateint
