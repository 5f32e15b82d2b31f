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

#include "lateint/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <unordered_map>

#include <json.hpp>

#include "lateint/errors.hpp"

namespace lateint {

namespace {

int grade_of(const std::map<std::string, int>& judged, const std::string& doc) {
  auto it = judged.find(doc);
  return it == judged.end() ? 0 : it->second;
}

std::size_t relevant_count(const std::map<std::string, int>& judged) {
  return static_cast<std::size_t>(
      std::count_if(judged.begin(), judged.end(), [](const auto& kv) { return kv.second > 0; }));
}

double gain(int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; }

}  // namespace

std::string MetricSpec::name() const {
  const char* base = "";
  switch (metric) {
    case Metric::kNdcg:
      base = "ndcg";
      break;
    case Metric::kRecall:
      base = "recall";
      break;
    case Metric::kMap:
      base = "map";
      break;
    case Metric::kMrr:
      base = "mrr";
      break;
  }
  return std::string(base) + "@" + std::to_string(k);
}

MetricSpec MetricSpec::parse(std::string_view text) {
  const auto at = text.find('@');
  if (at == std::string_view::npos) throw Error("metric must look like name@k: " + std::string(text));
  const auto base = text.substr(0, at);
  const auto cutoff = text.substr(at + 1);
  MetricSpec spec;
  if (base == "ndcg") {
    spec.metric = Metric::kNdcg;
  } else if (base == "recall") {
    spec.metric = Metric::kRecall;
  } else if (base == "map") {
    spec.metric = Metric::kMap;
  } else if (base == "mrr") {
    spec.metric = Metric::kMrr;
  } else {
    throw Error("unknown metric: " + std::string(base));
  }
  auto r = std::from_chars(cutoff.data(), cutoff.data() + cutoff.size(), spec.k);
  if (r.ec != std::errc() || r.ptr != cutoff.data() + cutoff.size() || spec.k == 0) {
    throw Error("metric cutoff must be a positive integer: " + std::string(text));
  }
  return spec;
}

double ndcg_at_k(const RankedList& run, const std::map<std::string, int>& judged, std::size_t k) {
  std::vector<int> ideal;
  for (const auto& [doc, grade] : judged) {
    if (grade > 0) ideal.push_back(grade);
  }
  if (ideal.empty()) return 0.0;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
    idcg += gain(ideal[i]) / std::log2(static_cast<double>(i) + 2.0);
  }
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, run.entries.size()); ++i) {
    dcg += gain(grade_of(judged, run.entries[i].doc_id)) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

double recall_at_k(const RankedList& run, const std::map<std::string, int>& judged, std::size_t k) {
  const std::size_t relevant = relevant_count(judged);
  if (relevant == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, run.entries.size()); ++i) {
    if (grade_of(judged, run.entries[i].doc_id) > 0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(relevant);
}

double map_at_k(const RankedList& run, const std::map<std::string, int>& judged, std::size_t k) {
  const std::size_t relevant = relevant_count(judged);
  if (relevant == 0) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, run.entries.size()); ++i) {
    if (grade_of(judged, run.entries[i].doc_id) > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(relevant, k));
}

double mrr_at_k(const RankedList& run, const std::map<std::string, int>& judged, std::size_t k) {
  for (std::size_t i = 0; i < std::min(k, run.entries.size()); ++i) {
    if (grade_of(judged, run.entries[i].doc_id) > 0) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double metric_at_k(const MetricSpec& spec, const RankedList& run,
                   const std::map<std::string, int>& judged) {
  switch (spec.metric) {
    case Metric::kNdcg:
      return ndcg_at_k(run, judged, spec.k);
    case Metric::kRecall:
      return recall_at_k(run, judged, spec.k);
    case Metric::kMap:
      return map_at_k(run, judged, spec.k);
    case Metric::kMrr:
      return mrr_at_k(run, judged, spec.k);
  }
  return 0.0;
}

const MetricResult& EvalReport::at(const MetricSpec& spec) const {
  for (const auto& [s, r] : metrics) {
    if (s == spec) return r;
  }
  throw Error("metric not in report: " + spec.name());
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json out;
  for (const auto& [spec, result] : metrics) {
    nlohmann::ordered_json per_query = nlohmann::ordered_json::object();
    for (const auto& [qid, v] : result.per_query) per_query[qid] = v;
    out[spec.name()] = {{"mean", result.mean}, {"per_query", per_query}};
  }
  out["warnings"] = warnings;
  out["queries"] = {{"evaluated", evaluated_queries}, {"without_relevant", queries_without_relevant}};
  out["conventions"] = {
      {"ndcg_gain", "2^grade - 1"},
      {"ndcg_discount", "log2(rank + 1)"},
      {"map_denominator", "min(|relevant|, k)"},
      {"relevant", "grade > 0"},
      {"queries_without_relevant", "score 0, included in mean"},
      {"ranking", "by score descending, ties by document id"},
  };
  return out.dump(2);
}

EvalReport evaluate(const std::vector<RankedList>& run, const Qrels& qrels,
                    const std::vector<MetricSpec>& specs) {
  EvalReport report;
  std::unordered_map<std::string, const RankedList*> by_query;
  std::vector<std::string> unjudged;
  for (const auto& r : run) {
    by_query.emplace(r.query_id, &r);
    if (!qrels.contains(r.query_id)) unjudged.push_back(r.query_id);
  }
  if (!unjudged.empty()) {
    std::sort(unjudged.begin(), unjudged.end());
    std::string msg = "run queries without judgments (ignored):";
    for (const auto& q : unjudged) msg += " " + q;
    report.warnings.push_back(msg);
  }

  std::vector<std::string> unanswered;
  const RankedList empty;
  for (const auto& spec : specs) report.metrics.push_back({spec, {}});
  for (const auto& [qid, judged] : qrels) {
    ++report.evaluated_queries;
    if (relevant_count(judged) == 0) ++report.queries_without_relevant;
    auto it = by_query.find(qid);
    if (it == by_query.end()) unanswered.push_back(qid);
    const RankedList& ranked = it == by_query.end() ? empty : *it->second;
    for (auto& [spec, result] : report.metrics) result.per_query[qid] = metric_at_k(spec, ranked, judged);
  }
  for (auto& [spec, result] : report.metrics) {
    double sum = 0.0;
    for (const auto& [qid, v] : result.per_query) sum += v;
    result.mean = result.per_query.empty() ? 0.0 : sum / static_cast<double>(result.per_query.size());
  }
  if (!unanswered.empty()) {
    std::string msg = "queries with no results (scored 0):";
    for (const auto& q : unanswered) msg += " " + q;
    report.warnings.push_back(msg);
  }
  if (report.queries_without_relevant > 0) {
    report.warnings.push_back(std::to_string(report.queries_without_relevant) +
                              " queries have no relevant judgments (scored 0)");
  }
  return report;
}

EvalReport evaluate(const std::filesystem::path& run_file, const std::filesystem::path& qrels_file,
                    const std::vector<MetricSpec>& specs) {
  ParsedRun parsed = read_trec_run(run_file);
  EvalReport report = evaluate(parsed.queries, read_qrels(qrels_file), specs);
  report.warnings.insert(report.warnings.begin(), parsed.warnings.begin(), parsed.warnings.end());
  return report;
}

}  // namespace lateint
