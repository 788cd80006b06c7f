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

#ifndef SWITCHCONV_VOCAB_H_
#define SWITCHCONV_VOCAB_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "switchconv/corpus.h"

namespace switchconv {

using TokenId = int;
using TokenSequence = std::vector<TokenId>;

// Reserved ids. They are identical in every vocabulary.
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kDisfOn = 4;
inline constexpr TokenId kDisfOff = 5;
inline constexpr TokenId kPuncOn = 6;
inline constexpr TokenId kPuncOff = 7;
inline constexpr TokenId kNumReserved = 8;

inline constexpr bool is_reserved(TokenId id) {
  return id >= 0 && id < kNumReserved;
}

// Splits UTF-8 text into code points, each returned as its UTF-8 bytes.
// Invalid bytes are passed through one at a time.
std::vector<std::string> utf8_chars(std::string_view text);

// Character-level vocabulary. Characters receive ids from kNumReserved on,
// in code point order.
class Vocabulary {
 public:
  Vocabulary();

  // Every character of every source and target. Throws Error if no dataset
  // has a pair.
  static Vocabulary build(std::span<const Dataset> datasets);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  TokenSequence encode(std::string_view text) const;
  // Reserved ids are dropped. Throws Error for ids outside [0, size()).
  std::string decode(std::span<const TokenId> ids) const;

  TokenId id_of(const std::string& token) const;
  const std::string& token_of(TokenId id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  // Lines of "id<TAB>token". Backslash, tab, newline, carriage return and
  // space are written as \\, \t, \n, \r and \s.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const {
    return id_to_token_ == other.id_to_token_;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

}  // namespace switchconv

#endif  // SWITCHCONV_VOCAB_H_
