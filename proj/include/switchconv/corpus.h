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

#ifndef SWITCHCONV_CORPUS_H_
#define SWITCHCONV_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "switchconv/rng.h"

namespace switchconv {

enum class Task { kDisf, kPunc, kSame, kJoint };
enum class Split { kTrain, kValid, kTest };

std::string_view task_name(Task task);
// Throws SchemaError for anything outside {disf, punc, same, joint}.
Task parse_task(std::string_view name);
std::string_view split_name(Split split);
Split parse_split(std::string_view name);

// Parameters of the synthetic spoken-text generator.
//
// A clean sentence is a run of lexicon words. Clause boundaries are marked
// by a conjunction word; with probability `p_comma` the word before the
// conjunction carries a comma. Every sentence ends with a period. Spoken
// renderings insert a filler before each word with probability `p_filler`
// and duplicate the word itself with probability `p_repeat`.
struct CorpusConfig {
  std::vector<std::string> lexicon;
  std::vector<std::string> conjunctions;
  std::vector<std::string> filler_inventory;
  double p_filler = 0.15;
  double p_repeat = 0.05;
  double p_comma = 1.0;
  // Chance that an eligible position opens a new clause.
  double p_clause = 0.2;
  int min_words = 4;
  int max_words = 10;
  uint64_t seed = 7;

  // Throws ConfigError describing the first violated constraint.
  void validate() const;

  static CorpusConfig desk_default();
};

struct CleanSentence {
  std::vector<std::string> words;
  // word index -> ',' or '.'; the final word always carries '.'.
  std::map<size_t, char> punctuation;

  std::string render() const;
  std::string render_unpunctuated() const;
  bool operator==(const CleanSentence&) const = default;
};

struct VariantSet {
  std::string spoken;
  std::string disf_target;
  std::string punc_target;
  std::string joint_target;
  bool operator==(const VariantSet&) const = default;
};

// Corruption decisions for one sentence; slot i sits before word i.
struct CorruptionPlan {
  std::vector<std::optional<std::string>> fillers;
  std::vector<bool> repeats;
};

struct ParallelPair {
  std::string source;
  std::string target;
  Task task = Task::kSame;
  bool operator==(const ParallelPair&) const = default;
};

struct Dataset {
  Split split = Split::kTrain;
  Task task = Task::kSame;
  std::vector<ParallelPair> pairs;

  size_t size() const { return pairs.size(); }
  bool operator==(const Dataset&) const = default;
};

struct TaskSizes {
  size_t disf = 0;
  size_t punc = 0;
  size_t joint_test = 0;
};

struct TaskDatasets {
  Dataset disf;
  Dataset punc;
  Dataset same;
  Dataset joint_test;
};

// Test-time sets derived from one pool of held-out variants.
struct TestDatasets {
  Dataset disf;
  Dataset punc;
  Dataset same;
  Dataset joint;
};

std::vector<CleanSentence> generate_clean(const CorpusConfig& config,
                                          size_t n);

CorruptionPlan sample_plan(const CleanSentence& clean,
                           const CorpusConfig& config, Rng& rng);
VariantSet apply_plan(const CleanSentence& clean, const CorruptionPlan& plan);
VariantSet make_variants(const CleanSentence& clean,
                         const CorpusConfig& config, Rng& rng);

// Generates n clean sentences and their variants. The corruption stream is
// seeded independently of the sentence stream, so both are pure functions
// of (config, n).
std::vector<VariantSet> generate_variants(const CorpusConfig& config,
                                          size_t n);

// Drops filler words and collapses an immediately repeated word to its last
// copy (comparison ignores trailing punctuation). This is the disfluency
// oracle: applied to a punctuation target it yields the joint target.
std::string remove_disfluencies(std::string_view text,
                                std::span<const std::string> fillers);

// Copies the punctuation of `clean` onto a filler-free word sequence.
std::string punctuate_like(std::string_view unpunctuated,
                           const CleanSentence& clean);

std::string strip_punctuation(std::string_view text);

// Consumes variants in order: disf, then punc, then the joint test set.
// D_same pairs every disf and punc source with itself. Throws SizeError if
// there are too few variants.
TaskDatasets build_task_datasets(std::span<const VariantSet> variants,
                                 const TaskSizes& sizes,
                                 Split split = Split::kTrain);

TestDatasets build_test_datasets(std::span<const VariantSet> variants);

// One JSON object per line: {"source": ..., "target": ..., "task": ...}.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
// Throws ParseError (with line number) on malformed lines and SchemaError on
// unknown or mixed task labels. An empty file yields an empty dataset whose
// task is `expected_task` (kSame when unset).
Dataset read_dataset(const std::filesystem::path& path,
                     Split split = Split::kTrain,
                     std::optional<Task> expected_task = std::nullopt);

}  // namespace switchconv

#endif  // SWITCHCONV_CORPUS_H_
