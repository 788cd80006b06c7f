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

#include "switchconv/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "switchconv/errors.h"

namespace switchconv {
namespace {

constexpr uint64_t kCorruptionStreamSalt = 0x9e3779b97f4a7c15ULL;

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) words.push_back(std::move(w));
  return words;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

bool is_mark(char c) { return c == ',' || c == '.'; }

std::string_view word_core(std::string_view w) {
  while (!w.empty() && is_mark(w.back())) w.remove_suffix(1);
  return w;
}

void check_words(const std::vector<std::string>& words, const char* what) {
  for (const auto& w : words) {
    if (w.empty()) throw ConfigError(std::string(what) + " contains an empty word");
    for (char c : w) {
      if (std::isspace(static_cast<unsigned char>(c)) || is_mark(c)) {
        throw ConfigError(std::string(what) + " word '" + w +
                          "' contains whitespace or punctuation");
      }
    }
  }
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kDisf: return "disf";
    case Task::kPunc: return "punc";
    case Task::kSame: return "same";
    case Task::kJoint: return "joint";
  }
  return "same";
}

Task parse_task(std::string_view name) {
  if (name == "disf") return Task::kDisf;
  if (name == "punc") return Task::kPunc;
  if (name == "same") return Task::kSame;
  if (name == "joint") return Task::kJoint;
  throw SchemaError("unknown task label '" + std::string(name) + "'");
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  throw SchemaError("unknown split '" + std::string(name) + "'");
}

void CorpusConfig::validate() const {
  for (double p : {p_filler, p_repeat, p_comma, p_clause}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("corpus probabilities must lie in [0, 1]");
    }
  }
  if (min_words < 1) throw ConfigError("corpus min_words must be >= 1");
  if (max_words < min_words) {
    throw ConfigError("corpus max_words must be >= min_words");
  }
  check_words(lexicon, "lexicon");
  check_words(conjunctions, "conjunctions");
  check_words(filler_inventory, "filler_inventory");
  std::set<std::string> distinct(lexicon.begin(), lexicon.end());
  if (distinct.size() < 2) {
    throw ConfigError("lexicon needs at least two distinct words");
  }
  for (const auto& f : filler_inventory) {
    if (distinct.count(f) ||
        std::find(conjunctions.begin(), conjunctions.end(), f) !=
            conjunctions.end()) {
      throw ConfigError("filler '" + f + "' also appears in the lexicon");
    }
  }
}

CorpusConfig CorpusConfig::desk_default() {
  CorpusConfig c;
  c.lexicon = {"the",  "a",    "cat",  "dog",  "sat", "ran",  "big",
               "red",  "old",  "man",  "car",  "sun", "day",  "saw",
               "hat",  "box",  "we",   "you",  "they", "it",  "is",
               "was",  "on",   "in",   "at",   "to",  "of",   "my",
               "bed",  "cup",  "tea",  "map",  "bus", "pen",  "ate",
               "got",  "put",  "new",  "hot",  "top", "fox",  "owl",
               "web",  "jam",  "kid",  "hen",  "led", "fed",  "sky"};
  c.conjunctions = {"and", "but", "so", "then"};
  c.filler_inventory = {"uh", "um", "er", "ah"};
  return c;
}

std::string CleanSentence::render() const {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
    if (auto it = punctuation.find(i); it != punctuation.end()) {
      out += it->second;
    }
  }
  return out;
}

std::string CleanSentence::render_unpunctuated() const { return join(words); }

std::vector<CleanSentence> generate_clean(const CorpusConfig& config,
                                          size_t n) {
  config.validate();
  if (n < 1) throw ConfigError("generate_clean needs n >= 1");
  Rng rng(config.seed);
  std::vector<CleanSentence> out;
  out.reserve(n);
  for (size_t s = 0; s < n; ++s) {
    CleanSentence sent;
    const int len = static_cast<int>(
        uniform_int(rng, config.min_words, config.max_words));
    int clause_len = 0;
    for (int i = 0; i < len; ++i) {
      const bool can_open = !config.conjunctions.empty() && i >= 2 &&
                            i <= len - 2 && clause_len >= 2;
      std::string word;
      if (can_open && bernoulli(rng, config.p_clause)) {
        word = config.conjunctions[uniform_index(rng, config.conjunctions.size())];
        if (bernoulli(rng, config.p_comma)) sent.punctuation[i - 1] = ',';
        clause_len = 0;
      }
      while (word.empty() || (!sent.words.empty() && word == sent.words.back())) {
        word = config.lexicon[uniform_index(rng, config.lexicon.size())];
      }
      sent.words.push_back(std::move(word));
      ++clause_len;
    }
    sent.punctuation[len - 1] = '.';
    out.push_back(std::move(sent));
  }
  return out;
}

CorruptionPlan sample_plan(const CleanSentence& clean,
                           const CorpusConfig& config, Rng& rng) {
  CorruptionPlan plan;
  plan.fillers.resize(clean.words.size());
  plan.repeats.resize(clean.words.size(), false);
  for (size_t i = 0; i < clean.words.size(); ++i) {
    if (!config.filler_inventory.empty() && bernoulli(rng, config.p_filler)) {
      plan.fillers[i] = config.filler_inventory[uniform_index(
          rng, config.filler_inventory.size())];
    }
    plan.repeats[i] = bernoulli(rng, config.p_repeat);
  }
  return plan;
}

VariantSet apply_plan(const CleanSentence& clean, const CorruptionPlan& plan) {
  std::vector<std::string> spoken;
  std::vector<std::string> punc;
  for (size_t i = 0; i < clean.words.size(); ++i) {
    const std::string& w = clean.words[i];
    if (i < plan.fillers.size() && plan.fillers[i]) {
      spoken.push_back(*plan.fillers[i]);
      punc.push_back(*plan.fillers[i]);
    }
    if (i < plan.repeats.size() && plan.repeats[i]) {
      spoken.push_back(w);
      punc.push_back(w);
    }
    spoken.push_back(w);
    std::string marked = w;
    if (auto it = clean.punctuation.find(i); it != clean.punctuation.end()) {
      marked += it->second;
    }
    punc.push_back(std::move(marked));
  }
  return VariantSet{join(spoken), clean.render_unpunctuated(), join(punc),
                    clean.render()};
}

VariantSet make_variants(const CleanSentence& clean,
                         const CorpusConfig& config, Rng& rng) {
  return apply_plan(clean, sample_plan(clean, config, rng));
}

std::vector<VariantSet> generate_variants(const CorpusConfig& config,
                                          size_t n) {
  const auto clean = generate_clean(config, n);
  Rng rng(config.seed ^ kCorruptionStreamSalt);
  std::vector<VariantSet> out;
  out.reserve(n);
  for (const auto& c : clean) out.push_back(make_variants(c, config, rng));
  return out;
}

std::string remove_disfluencies(std::string_view text,
                                std::span<const std::string> fillers) {
  std::vector<std::string> out;
  for (auto& w : split_words(text)) {
    const std::string_view core = word_core(w);
    if (std::find(fillers.begin(), fillers.end(), core) != fillers.end()) {
      continue;
    }
    if (!out.empty() && out.back() == core) {
      out.back() = std::move(w);
      continue;
    }
    out.push_back(std::move(w));
  }
  return join(out);
}

std::string punctuate_like(std::string_view unpunctuated,
                           const CleanSentence& clean) {
  auto words = split_words(unpunctuated);
  if (words.size() != clean.words.size()) {
    throw SizeError("punctuate_like: word count differs from the template");
  }
  for (const auto& [i, mark] : clean.punctuation) words[i] += mark;
  return join(words);
}

std::string strip_punctuation(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (!is_mark(c)) out += c;
  }
  return out;
}

TaskDatasets build_task_datasets(std::span<const VariantSet> variants,
                                 const TaskSizes& sizes, Split split) {
  const size_t need = sizes.disf + sizes.punc + sizes.joint_test;
  if (variants.size() < need) {
    throw SizeError("build_task_datasets: need " + std::to_string(need) +
                    " variants, got " + std::to_string(variants.size()));
  }
  TaskDatasets out;
  out.disf = {split, Task::kDisf, {}};
  out.punc = {split, Task::kPunc, {}};
  out.same = {split, Task::kSame, {}};
  out.joint_test = {Split::kTest, Task::kJoint, {}};
  size_t k = 0;
  for (size_t i = 0; i < sizes.disf; ++i, ++k) {
    out.disf.pairs.push_back({variants[k].spoken, variants[k].disf_target, Task::kDisf});
  }
  for (size_t i = 0; i < sizes.punc; ++i, ++k) {
    out.punc.pairs.push_back({variants[k].spoken, variants[k].punc_target, Task::kPunc});
  }
  for (const Dataset* ds : {&out.disf, &out.punc}) {
    for (const auto& p : ds->pairs) {
      out.same.pairs.push_back({p.source, p.source, Task::kSame});
    }
  }
  for (size_t i = 0; i < sizes.joint_test; ++i, ++k) {
    out.joint_test.pairs.push_back(
        {variants[k].spoken, variants[k].joint_target, Task::kJoint});
  }
  return out;
}

TestDatasets build_test_datasets(std::span<const VariantSet> variants) {
  TestDatasets out;
  out.disf = {Split::kTest, Task::kDisf, {}};
  out.punc = {Split::kTest, Task::kPunc, {}};
  out.same = {Split::kTest, Task::kSame, {}};
  out.joint = {Split::kTest, Task::kJoint, {}};
  for (const auto& v : variants) {
    out.disf.pairs.push_back({v.spoken, v.disf_target, Task::kDisf});
    out.punc.pairs.push_back({v.spoken, v.punc_target, Task::kPunc});
    out.same.pairs.push_back({v.spoken, v.spoken, Task::kSame});
    out.joint.pairs.push_back({v.spoken, v.joint_target, Task::kJoint});
  }
  return out;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& p : ds.pairs) {
    nlohmann::ordered_json rec;
    rec["source"] = p.source;
    rec["target"] = p.target;
    rec["task"] = std::string(task_name(p.task));
    out << rec.dump() << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path, Split split,
                     std::optional<Task> expected_task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  Dataset ds;
  ds.split = split;
  std::optional<Task> task = expected_task;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                           ": malformed record: " + e.what(),
                       lineno);
    }
    auto field = [&](const char* key) -> std::string {
      if (!rec.is_object() || !rec.contains(key) || !rec[key].is_string()) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": missing string field '" + key + "'",
                         lineno);
      }
      return rec[key].get<std::string>();
    };
    ParallelPair p{field("source"), field("target"), Task::kSame};
    try {
      p.task = parse_task(field("task"));
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": " +
                        e.what());
    }
    if (task && *task != p.task) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) +
                        ": task '" + std::string(task_name(p.task)) +
                        "' differs from dataset task '" +
                        std::string(task_name(*task)) + "'");
    }
    task = p.task;
    ds.pairs.push_back(std::move(p));
  }
  ds.task = task.value_or(Task::kSame);
  return ds;
}

}  // namespace switchconv
