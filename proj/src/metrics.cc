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

#include "switchconv/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "switchconv/errors.h"
#include "switchconv/vocab.h"

namespace switchconv {
namespace {

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts count_ngrams(const Tokens& tokens, int n) {
  NgramCounts counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      key += tokens[i + k];
      key += '\x1f';
    }
    ++counts[key];
  }
  return counts;
}

int lookup(const NgramCounts& counts, const std::string& key) {
  auto it = counts.find(key);
  return it == counts.end() ? 0 : it->second;
}

bool is_punct(const std::string& c) {
  return c.size() == 1 && std::ispunct(static_cast<unsigned char>(c[0]));
}

void check_corpus(size_t a, size_t b, int max_n) {
  if (a != b) throw Error("metric inputs differ in length");
  if (a == 0) throw Error("metric needs a non-empty corpus");
  if (max_n < 1) throw Error("max_n must be >= 1");
}

// numerators[n-1] / denominators[n-1] per order, combined with the brevity
// penalty.
double combine(const std::vector<double>& numerators,
               const std::vector<double>& denominators, double hyp_len,
               double ref_len) {
  if (hyp_len <= 0) return 0.0;
  double log_sum = 0.0;
  for (size_t n = 0; n < numerators.size(); ++n) {
    if (numerators[n] <= 0 || denominators[n] <= 0) return 0.0;
    log_sum += std::log(numerators[n] / denominators[n]);
  }
  const double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  return std::min(1.0, bp * std::exp(log_sum / static_cast<double>(numerators.size())));
}

std::vector<std::string> words_without_punct(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text, Granularity::kWord)) {
    if (!is_punct(t)) out.push_back(std::move(t));
  }
  return out;
}

// deleted[i] is true when source word i is not part of the longest common
// subsequence with `other`. Ties resolve identically for identical inputs.
std::vector<bool> deleted_words(const std::vector<std::string>& source,
                                const std::vector<std::string>& other) {
  const size_t n = source.size(), m = other.size();
  std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      dp[i][j] = source[i - 1] == other[j - 1]
                     ? dp[i - 1][j - 1] + 1
                     : std::max(dp[i - 1][j], dp[i][j - 1]);
    }
  }
  std::vector<bool> deleted(n, true);
  size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (source[i - 1] == other[j - 1] && dp[i][j] == dp[i - 1][j - 1] + 1) {
      deleted[i - 1] = false;
      --i;
      --j;
    } else if (dp[i - 1][j] >= dp[i][j - 1]) {
      --i;
    } else {
      --j;
    }
  }
  return deleted;
}

class ChunkSearch {
 public:
  ChunkSearch(const Tokens& ref, const Tokens& hyp) : ref_(ref), hyp_(hyp) {
    candidates_.resize(hyp.size());
    for (size_t i = 0; i < hyp.size(); ++i) {
      for (size_t j = 0; j < ref.size(); ++j) {
        if (hyp[i] == ref[j]) candidates_[i].push_back(static_cast<int>(j));
      }
    }
    std::map<std::string, int> hyp_count, ref_count;
    for (const auto& t : hyp) ++hyp_count[t];
    for (const auto& t : ref) ++ref_count[t];
    for (const auto& [w, c] : hyp_count) {
      auto it = ref_count.find(w);
      if (it != ref_count.end()) target_ += std::min(c, it->second);
    }
    // suffix_[i][w] = occurrences of word w in hyp[i..].
    type_of_.resize(hyp.size());
    std::map<std::string, int> ids;
    for (size_t i = 0; i < hyp.size(); ++i) {
      type_of_[i] = ids.emplace(hyp[i], static_cast<int>(ids.size())).first->second;
    }
    ref_type_.assign(ref.size(), -1);
    for (size_t j = 0; j < ref.size(); ++j) {
      if (auto it = ids.find(ref[j]); it != ids.end()) ref_type_[j] = it->second;
    }
    suffix_.assign(hyp.size() + 1, std::vector<int>(ids.size(), 0));
    for (size_t i = hyp.size(); i-- > 0;) {
      suffix_[i] = suffix_[i + 1];
      ++suffix_[i][type_of_[i]];
    }
    free_.assign(ids.size(), 0);
    for (int t : ref_type_) {
      if (t >= 0) ++free_[t];
    }
    used_.assign(ref.size(), false);
  }

  MeteorAlignment run() {
    if (target_ == 0) return {};
    dfs(0, 0, 0, -2);
    return {target_, best_chunks_};
  }

 private:
  static constexpr long kNodeBudget = 2'000'000;

  int reachable(size_t i) const {
    int total = 0;
    for (size_t t = 0; t < free_.size(); ++t) total += std::min(suffix_[i][t], free_[t]);
    return total;
  }

  void dfs(size_t i, int matched, int chunks, int prev_j) {
    if (++nodes_ > kNodeBudget && best_chunks_ <= target_) return;
    if (chunks >= best_chunks_) return;
    if (matched == target_) {
      best_chunks_ = chunks;
      return;
    }
    if (i == hyp_.size() || matched + reachable(i) < target_) return;
    // Continuing the current chunk first finds good bounds early.
    std::vector<int> order = candidates_[i];
    std::stable_partition(order.begin(), order.end(),
                          [prev_j](int j) { return j == prev_j + 1; });
    for (int j : order) {
      if (used_[j]) continue;
      used_[j] = true;
      --free_[type_of_[i]];
      dfs(i + 1, matched + 1, chunks + (j == prev_j + 1 ? 0 : 1), j);
      ++free_[type_of_[i]];
      used_[j] = false;
    }
    dfs(i + 1, matched, chunks, -2);
  }

  const Tokens& ref_;
  const Tokens& hyp_;
  std::vector<std::vector<int>> candidates_;
  std::vector<int> type_of_;
  std::vector<int> ref_type_;
  std::vector<std::vector<int>> suffix_;
  std::vector<int> free_;
  std::vector<bool> used_;
  int target_ = 0;
  int best_chunks_ = 1 << 30;
  long nodes_ = 0;
};

}  // namespace

std::string_view granularity_name(Granularity g) {
  return g == Granularity::kWord ? "word" : "character";
}

Granularity parse_granularity(std::string_view name) {
  if (name == "word") return Granularity::kWord;
  if (name == "character" || name == "char") return Granularity::kCharacter;
  throw ConfigError("unknown metric granularity '" + std::string(name) + "'");
}

Tokens tokenize(std::string_view text, Granularity g) {
  Tokens out;
  if (g == Granularity::kCharacter) {
    for (auto& c : utf8_chars(text)) {
      if (c.size() == 1 && std::isspace(static_cast<unsigned char>(c[0]))) continue;
      out.push_back(std::move(c));
    }
    return out;
  }
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      word += ch;
    }
  }
  flush();
  return out;
}

double bleu(std::span<const Tokens> references, std::span<const Tokens> hypotheses,
            int max_n) {
  check_corpus(references.size(), hypotheses.size(), max_n);
  std::vector<double> num(max_n, 0.0), den(max_n, 0.0);
  double hyp_len = 0, ref_len = 0;
  for (size_t s = 0; s < references.size(); ++s) {
    hyp_len += static_cast<double>(hypotheses[s].size());
    ref_len += static_cast<double>(references[s].size());
    for (int n = 1; n <= max_n; ++n) {
      const auto h = count_ngrams(hypotheses[s], n);
      const auto r = count_ngrams(references[s], n);
      for (const auto& [g, c] : h) {
        num[n - 1] += std::min(c, lookup(r, g));
        den[n - 1] += c;
      }
    }
  }
  return combine(num, den, hyp_len, ref_len);
}

double gleu(std::span<const Tokens> sources, std::span<const Tokens> references,
            std::span<const Tokens> hypotheses, int max_n) {
  check_corpus(references.size(), hypotheses.size(), max_n);
  if (sources.size() != references.size()) throw Error("metric inputs differ in length");
  std::vector<double> num(max_n, 0.0), den(max_n, 0.0);
  double hyp_len = 0, ref_len = 0;
  for (size_t s = 0; s < references.size(); ++s) {
    hyp_len += static_cast<double>(hypotheses[s].size());
    ref_len += static_cast<double>(references[s].size());
    for (int n = 1; n <= max_n; ++n) {
      const auto h = count_ngrams(hypotheses[s], n);
      const auto r = count_ngrams(references[s], n);
      const auto src = count_ngrams(sources[s], n);
      int matches = 0, penalty = 0, total = 0;
      for (const auto& [g, c] : h) {
        const int in_ref = lookup(r, g);
        matches += std::min(c, in_ref);
        if (in_ref == 0) penalty += std::min(c, lookup(src, g));
        total += c;
      }
      num[n - 1] += std::max(0, matches - penalty);
      den[n - 1] += total;
    }
  }
  return combine(num, den, hyp_len, ref_len);
}

MeteorAlignment meteor_align(const Tokens& reference, const Tokens& hypothesis) {
  return ChunkSearch(reference, hypothesis).run();
}

double meteor_exact(const Tokens& reference, const Tokens& hypothesis) {
  const auto a = meteor_align(reference, hypothesis);
  if (a.matches == 0) return 0.0;
  const double m = a.matches;
  const double p = m / static_cast<double>(hypothesis.size());
  const double r = m / static_cast<double>(reference.size());
  const double f = 10.0 * p * r / (r + 9.0 * p);
  const double penalty = 0.5 * std::pow(a.chunks / m, 3.0);
  return f * (1.0 - penalty);
}

double meteor_corpus(std::span<const Tokens> references,
                     std::span<const Tokens> hypotheses) {
  check_corpus(references.size(), hypotheses.size(), 1);
  std::vector<double> scores;
  scores.reserve(references.size());
  for (size_t s = 0; s < references.size(); ++s) {
    scores.push_back(meteor_exact(references[s], hypotheses[s]));
  }
  // Summing in sorted order makes the mean independent of sentence order.
  std::sort(scores.begin(), scores.end());
  double total = 0.0;
  for (double v : scores) total += v;
  return total / static_cast<double>(references.size());
}

double exact_match_rate(std::span<const std::string> references,
                        std::span<const std::string> hypotheses) {
  check_corpus(references.size(), hypotheses.size(), 1);
  size_t equal = 0;
  for (size_t i = 0; i < references.size(); ++i) equal += references[i] == hypotheses[i];
  return static_cast<double>(equal) / static_cast<double>(references.size());
}

DeletionScore filler_deletion_f1(std::span<const std::string> sources,
                                 std::span<const std::string> references,
                                 std::span<const std::string> hypotheses,
                                 std::span<const std::string> fillers) {
  if (sources.size() != references.size() || sources.size() != hypotheses.size()) {
    throw Error("metric inputs differ in length");
  }
  DeletionScore s;
  for (size_t k = 0; k < sources.size(); ++k) {
    const auto src = words_without_punct(sources[k]);
    const auto by_ref = deleted_words(src, words_without_punct(references[k]));
    const auto by_hyp = deleted_words(src, words_without_punct(hypotheses[k]));
    for (size_t i = 0; i < src.size(); ++i) {
      const bool filler = std::find(fillers.begin(), fillers.end(), src[i]) != fillers.end();
      if (filler && by_hyp[i]) ++s.true_positives;
      if (filler && !by_hyp[i]) ++s.false_negatives;
      if (!filler && by_hyp[i] && !by_ref[i]) ++s.false_positives;
    }
  }
  const double tp = static_cast<double>(s.true_positives);
  s.precision = s.true_positives + s.false_positives == 0
                    ? 1.0
                    : tp / static_cast<double>(s.true_positives + s.false_positives);
  s.recall = s.true_positives + s.false_negatives == 0
                 ? 1.0
                 : tp / static_cast<double>(s.true_positives + s.false_negatives);
  s.f1 = s.precision + s.recall > 0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

ScoreTriple score_corpus(std::span<const std::string> sources,
                         std::span<const std::string> references,
                         std::span<const std::string> hypotheses, Granularity g) {
  std::vector<Tokens> src, ref, hyp;
  for (const auto& s : sources) src.push_back(tokenize(s, g));
  for (const auto& s : references) ref.push_back(tokenize(s, g));
  for (const auto& s : hypotheses) hyp.push_back(tokenize(s, g));
  return {bleu(ref, hyp), meteor_corpus(ref, hyp), gleu(src, ref, hyp)};
}

}  // namespace switchconv
