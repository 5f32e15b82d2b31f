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
#include <vector>

#include "lateint/types.hpp"

namespace lateint {

// query id -> (document id -> grade)
using Qrels = std::map<std::string, std::map<std::string, int>>;

// `qid Q0 docid rank score tag`, rank from 1. Scores use the shortest
// round-trip decimal form.
void write_trec_run(const std::vector<RankedList>& runs, const std::filesystem::path& path,
                    const std::string& tag);
std::string format_score(double score);

struct ParsedRun {
  std::vector<RankedList> queries;  // first-appearance order, entries re-sorted by score
  std::vector<std::string> warnings;
};

// Entries are ordered by score (descending, ties by doc id). A warning is
// recorded when the rank column disagrees with that order.
ParsedRun read_trec_run(const std::filesystem::path& path);

// `qid 0 docid grade`
Qrels read_qrels(const std::filesystem::path& path);
void write_qrels(const Qrels& qrels, const std::filesystem::path& path);

}  // namespace lateint
