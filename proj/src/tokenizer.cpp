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

#include "lateint/tokenizer.hpp"

#include "lateint/errors.hpp"

namespace lateint {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  if (c >= 0xFF21 && c <= 0xFF3A) return c + 0x20;  // fullwidth A-Z
  return c;
}

}  // namespace

std::string_view to_string(TokenizerScheme s) {
  switch (s) {
    case TokenizerScheme::kCharBigram:
      return "char-bigram";
    case TokenizerScheme::kCharUnigram:
      return "char-unigram";
    case TokenizerScheme::kWhitespace:
      return "whitespace";
  }
  return "?";
}

TokenizerScheme parse_tokenizer_scheme(std::string_view s) {
  if (s == "char-bigram" || s == "char_bigram") return TokenizerScheme::kCharBigram;
  if (s == "char-unigram" || s == "char_unigram") return TokenizerScheme::kCharUnigram;
  if (s == "whitespace") return TokenizerScheme::kWhitespace;
  throw Error("unknown tokenizer scheme: " + std::string(s));
}

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      extra = 1;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      extra = 2;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      extra = 3;
      cp = lead & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + static_cast<std::size_t>(extra) >= text.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + static_cast<std::size_t>(k)]);
      if ((cont & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cont & 0x3F);
    }
    constexpr char32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (!ok || cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::string encode_utf8(std::u32string_view codepoints) {
  std::string out;
  out.reserve(codepoints.size() * 3);
  for (char32_t c : codepoints) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

bool is_unicode_space(char32_t c) {
  switch (c) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\v':
    case U'\f':
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

std::vector<std::string> tokenize(std::string_view text, const Tokenizer& tokenizer) {
  std::u32string cps = decode_utf8(text);
  if (tokenizer.lowercase) {
    for (char32_t& c : cps) c = fold_case(c);
  }
  std::vector<std::string> tokens;

  if (tokenizer.scheme == TokenizerScheme::kWhitespace) {
    std::u32string current;
    for (char32_t c : cps) {
      if (is_unicode_space(c)) {
        if (!current.empty()) tokens.push_back(encode_utf8(current));
        current.clear();
      } else {
        current.push_back(c);
      }
    }
    if (!current.empty()) tokens.push_back(encode_utf8(current));
    return tokens;
  }

  std::erase_if(cps, is_unicode_space);
  if (tokenizer.scheme == TokenizerScheme::kCharUnigram || cps.size() == 1) {
    for (char32_t c : cps) tokens.push_back(encode_utf8(std::u32string_view(&c, 1)));
    return tokens;
  }
  for (std::size_t i = 0; i + 1 < cps.size(); ++i) {
    tokens.push_back(encode_utf8(std::u32string_view(cps).substr(i, 2)));
  }
  return tokens;
}

}  // namespace lateint
