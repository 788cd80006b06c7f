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

#ifndef SWITCHCONV_METRICS_H_
#define SWITCHCONV_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace switchconv {

using Tokens = std::vector<std::string>;

enum class Granularity { kWord, kCharacter };

std::string_view granularity_name(Granularity g);
Granularity parse_granularity(std::string_view name);

// Word granularity splits on whitespace and detaches each punctuation mark
// into its own token; character granularity yields every non-space code
// point.
Tokens tokenize(std::string_view text, Granularity g);

// Corpus BLEU with clipped n-gram precision, geometric mean over 1..max_n
// and brevity penalty min(1, exp(1 - r / c)). Any zero n-gram numerator
// makes the score 0. Throws Error on length mismatch or an empty corpus.
double bleu(std::span<const Tokens> references, std::span<const Tokens> hypotheses,
            int max_n = 4);

// Corpus GLEU: like bleu(), but each sentence's n-gram numerator loses the
// hypothesis n-grams that occur in the source and not at all in the
// reference (clipped by source count), floored at zero before summing.
double gleu(std::span<const Tokens> sources, std::span<const Tokens> references,
            std::span<const Tokens> hypotheses, int max_n = 4);

struct MeteorAlignment {
  int matches = 0;
  int chunks = 0;
};

// Maximum one-to-one exact unigram matching with the fewest chunks.
MeteorAlignment meteor_align(const Tokens& reference, const Tokens& hypothesis);

// F_mean * (1 - 0.5 * (chunks / m)^3) with F_mean = 10PR / (R + 9P).
double meteor_exact(const Tokens& reference, const Tokens& hypothesis);

// Mean of sentence-level meteor_exact.
double meteor_corpus(std::span<const Tokens> references,
                     std::span<const Tokens> hypotheses);

double exact_match_rate(std::span<const std::string> references,
                        std::span<const std::string> hypotheses);

struct DeletionScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t true_positives = 0;
  size_t false_positives = 0;
  size_t false_negatives = 0;
};

// Every filler occurrence in a source is a deletion target. A hypothesis
// deletion (source word absent from the source/hypothesis alignment) is a
// true positive when it hits a filler and a false positive when the
// source/reference alignment keeps that word. Words are compared without
// punctuation. Counts are pooled over the corpus.
DeletionScore filler_deletion_f1(std::span<const std::string> sources,
                                 std::span<const std::string> references,
                                 std::span<const std::string> hypotheses,
                                 std::span<const std::string> fillers);

struct ScoreTriple {
  double bleu = 0.0;
  double meteor = 0.0;
  double gleu = 0.0;

  bool operator==(const ScoreTriple&) const = default;
};

ScoreTriple score_corpus(std::span<const std::string> sources,
                         std::span<const std::string> references,
                         std::span<const std::string> hypotheses, Granularity g);

}  // namespace switchconv

#endif  // SWITCHCONV_METRICS_H_
