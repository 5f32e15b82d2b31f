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

#include <string>
#include <string_view>
#include <vector>

namespace lateint {

enum class TokenizerScheme { kCharBigram, kCharUnigram, kWhitespace };

struct Tokenizer {
  TokenizerScheme scheme = TokenizerScheme::kCharBigram;
  bool lowercase = true;

  friend bool operator==(const Tokenizer&, const Tokenizer&) = default;
};

std::string_view to_string(TokenizerScheme s);
TokenizerScheme parse_tokenizer_scheme(std::string_view s);

// Invalid sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view codepoints);

bool is_unicode_space(char32_t c);

// Codepoint-level tokenization. The character schemes drop whitespace first;
// char_bigram over c remaining codepoints yields c - 1 bigrams, or the single
// codepoint when c == 1. Lowercasing covers ASCII and fullwidth Latin letters.
std::vector<std::string> tokenize(std::string_view text, const Tokenizer& tokenizer);

}  // namespace lateint
