// Copyright 2026 The switchconv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "switchconv/vocab.h"

#include <algorithm>
#include <fstream>
#include <set>

#include "switchconv/errors.h"

namespace switchconv {
namespace {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> kTokens = {
      "<pad>", "<s>", "</s>", "<unk>",
      "[disf_on]", "[disf_off]", "[punc_on]", "[punc_off]"};
  return kTokens;
}

size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;
}

std::string escape(const std::string& token) {
  std::string out;
  for (char c : token) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case ' ': out += "\\s"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape(std::string_view s, size_t lineno) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i == s.size()) throw ParseError("dangling escape in vocabulary", lineno);
    switch (s[i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case 's': out += ' '; break;
      default: throw ParseError("unknown escape in vocabulary", lineno);
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  for (size_t i = 0; i < text.size();) {
    size_t n = utf8_length(static_cast<unsigned char>(text[i]));
    if (i + n > text.size()) n = 1;
    for (size_t k = 1; k < n; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xc0) != 0x80) {
        n = 1;
        break;
      }
    }
    out.emplace_back(text.substr(i, n));
    i += n;
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const auto& t : reserved_tokens()) {
    token_to_id_.emplace(t, static_cast<TokenId>(id_to_token_.size()));
    id_to_token_.push_back(t);
  }
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  const auto& reserved = reserved_tokens();
  if (tokens.size() < reserved.size() ||
      !std::equal(reserved.begin(), reserved.end(), tokens.begin())) {
    throw SchemaError("vocabulary does not start with the reserved tokens");
  }
  Vocabulary v;
  for (size_t i = reserved.size(); i < tokens.size(); ++i) {
    if (!v.token_to_id_.emplace(tokens[i], static_cast<TokenId>(i)).second) {
      throw SchemaError("duplicate vocabulary token '" + tokens[i] + "'");
    }
    v.id_to_token_.push_back(std::move(tokens[i]));
  }
  return v;
}

Vocabulary Vocabulary::build(std::span<const Dataset> datasets) {
  std::set<std::string> chars;
  bool any = false;
  for (const auto& ds : datasets) {
    for (const auto& p : ds.pairs) {
      any = true;
      for (auto& c : utf8_chars(p.source)) chars.insert(std::move(c));
      for (auto& c : utf8_chars(p.target)) chars.insert(std::move(c));
    }
  }
  if (!any) throw Error("build_vocab: no pairs in the given datasets");
  std::vector<std::string> tokens = reserved_tokens();
  tokens.insert(tokens.end(), chars.begin(), chars.end());
  return from_tokens(std::move(tokens));
}

TokenSequence Vocabulary::encode(std::string_view text) const {
  TokenSequence ids;
  for (const auto& c : utf8_chars(text)) {
    auto it = token_to_id_.find(c);
    ids.push_back(it == token_to_id_.end() || is_reserved(it->second)
                      ? kUnk
                      : it->second);
  }
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id < 0 || id >= size()) {
      throw Error("token id " + std::to_string(id) +
                  " outside vocabulary of size " + std::to_string(size()));
    }
    if (!is_reserved(id)) out += id_to_token_[id];
  }
  return out;
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw Error("token id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[id];
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (size_t i = 0; i < id_to_token_.size(); ++i) {
    out << i << '\t' << escape(id_to_token_[i]) << '\n';
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                           ": expected id<TAB>token",
                       lineno);
    }
    size_t id = 0;
    try {
      id = std::stoul(line.substr(0, tab));
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                           ": bad id",
                       lineno);
    }
    if (id != tokens.size()) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                           ": ids must be consecutive from 0",
                       lineno);
    }
    tokens.push_back(unescape(std::string_view(line).substr(tab + 1), lineno));
  }
  return from_tokens(std::move(tokens));
}

}  // namespace switchconv
