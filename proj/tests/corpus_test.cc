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

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "switchconv/corpus.h"
#include "switchconv/errors.h"
#include "test_util.h"

namespace switchconv {
namespace {

bool has_punctuation(const std::string& s) {
  return s.find_first_of(",.") != std::string::npos;
}

std::vector<std::string> words_of(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) {
    while (!w.empty() && (w.back() == ',' || w.back() == '.')) w.pop_back();
    out.push_back(w);
  }
  return out;
}

uint64_t fnv1a(const std::string& s, uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

CleanSentence the_cat_sat() {
  CleanSentence c;
  c.words = {"the", "cat", "sat"};
  c.punctuation[2] = '.';
  return c;
}

}  // namespace

TEST_CASE("generate_clean is a pure function of config and n") {
  const auto cfg = CorpusConfig::desk_default();
  CHECK(generate_clean(cfg, 3) == generate_clean(cfg, 3));
  auto other = cfg;
  other.seed = cfg.seed + 1;
  CHECK(generate_clean(cfg, 50) != generate_clean(other, 50));
}

TEST_CASE("generate_clean honours a fixed length range") {
  auto cfg = CorpusConfig::desk_default();
  cfg.min_words = cfg.max_words = 4;
  for (const auto& s : generate_clean(cfg, 200)) CHECK(s.words.size() == 4);
}

TEST_CASE("generate_clean sentence invariants") {
  const auto cfg = CorpusConfig::desk_default();
  const std::set<std::string> allowed = [&] {
    std::set<std::string> s(cfg.lexicon.begin(), cfg.lexicon.end());
    s.insert(cfg.conjunctions.begin(), cfg.conjunctions.end());
    return s;
  }();
  for (const auto& s : generate_clean(cfg, 500)) {
    REQUIRE(!s.words.empty());
    CHECK(s.words.size() >= static_cast<size_t>(cfg.min_words));
    CHECK(s.words.size() <= static_cast<size_t>(cfg.max_words));
    CHECK(s.punctuation.at(s.words.size() - 1) == '.');
    int periods = 0;
    for (const auto& [pos, mark] : s.punctuation) {
      CHECK(pos < s.words.size());
      CHECK((mark == ',' || mark == '.'));
      periods += mark == '.';
    }
    CHECK(periods == 1);
    for (const auto& w : s.words) CHECK(allowed.count(w) == 1);
  }
}

TEST_CASE("pinned reference corpus for seed 7") {
  auto cfg = CorpusConfig::desk_default();
  cfg.seed = 7;
  uint64_t h = 1469598103934665603ull;
  for (const auto& s : generate_clean(cfg, 100)) h = fnv1a(s.render() + "\n", h);
  // Frozen from the first reviewed run; any change to generation alters it.
  CHECK(h == 0x7bfee4a810379556ull);
}

TEST_CASE("make_variants without corruption only strips punctuation") {
  auto cfg = CorpusConfig::desk_default();
  cfg.p_filler = 0.0;
  cfg.p_repeat = 0.0;
  for (const auto& v : generate_variants(cfg, 200)) {
    CHECK(v.spoken == v.disf_target);
    CHECK(v.punc_target == v.joint_target);
  }
}

TEST_CASE("forced filler at slot 0") {
  CorruptionPlan plan;
  plan.fillers = {std::string("uh"), std::nullopt, std::nullopt};
  plan.repeats = {false, false, false};
  const auto v = apply_plan(the_cat_sat(), plan);
  CHECK(v.spoken == "uh the cat sat");
  CHECK(v.disf_target == "the cat sat");
  CHECK(v.punc_target == "uh the cat sat.");
  CHECK(v.joint_target == "the cat sat.");
}

TEST_CASE("forced repetition duplicates the word once") {
  CorruptionPlan plan;
  plan.fillers = {std::nullopt, std::string("um"), std::nullopt};
  plan.repeats = {false, true, false};
  const auto v = apply_plan(the_cat_sat(), plan);
  CHECK(v.spoken == "the um cat cat sat");
  CHECK(v.punc_target == "the um cat cat sat.");
  CHECK(v.disf_target == "the cat sat");
  CHECK(v.joint_target == "the cat sat.");
}

TEST_CASE("variant oracle composition over generated sets") {
  auto cfg = CorpusConfig::desk_default();
  cfg.p_filler = 0.3;
  cfg.p_repeat = 0.2;
  const std::set<std::string> fillers(cfg.filler_inventory.begin(),
                                      cfg.filler_inventory.end());
  for (const auto& v : generate_variants(cfg, 1500)) {
    CHECK_FALSE(has_punctuation(v.spoken));
    CHECK_FALSE(has_punctuation(v.disf_target));
    CHECK(remove_disfluencies(v.punc_target, cfg.filler_inventory) == v.joint_target);
    CHECK(remove_disfluencies(v.spoken, cfg.filler_inventory) == v.disf_target);
    CHECK(strip_punctuation(v.joint_target) == v.disf_target);
    CHECK(strip_punctuation(v.punc_target) == v.spoken);
    for (const auto& w : words_of(v.disf_target)) CHECK(fillers.count(w) == 0);
    for (const auto& w : words_of(v.joint_target)) CHECK(fillers.count(w) == 0);
  }
}

TEST_CASE("punctuate_like restores the clean punctuation") {
  CleanSentence c;
  c.words = {"we", "ran", "and", "hid"};
  c.punctuation = {{1, ','}, {3, '.'}};
  CHECK(c.render() == "we ran, and hid.");
  CHECK(c.render_unpunctuated() == "we ran and hid");
  CHECK(punctuate_like("we ran and hid", c) == "we ran, and hid.");
}

TEST_CASE("build_task_datasets sizes and identity pairs") {
  const auto vars = generate_variants(CorpusConfig::desk_default(), 40);
  const auto ds = build_task_datasets(vars, {10, 10, 5});
  CHECK(ds.disf.size() == 10);
  CHECK(ds.punc.size() == 10);
  CHECK(ds.same.size() == 20);
  CHECK(ds.joint_test.size() == 5);
  for (const auto& p : ds.same.pairs) {
    CHECK(p.source == p.target);
    CHECK(p.task == Task::kSame);
  }
  for (size_t i = 0; i < 10; ++i) {
    CHECK(ds.disf.pairs[i].source == vars[i].spoken);
    CHECK(ds.disf.pairs[i].target == vars[i].disf_target);
    CHECK(ds.punc.pairs[i].target == vars[10 + i].punc_target);
  }
  std::set<std::string> train_sources;
  for (const auto& p : ds.same.pairs) train_sources.insert(p.source);
  for (const auto& p : ds.joint_test.pairs) {
    CHECK(train_sources.count(p.source) == 0);
    CHECK(p.task == Task::kJoint);
  }
  CHECK_THROWS_AS(build_task_datasets(vars, {30, 30, 0}), SizeError);
}

TEST_CASE("dataset file round trip and errors") {
  testing::TempDir dir;
  const auto vars = generate_variants(CorpusConfig::desk_default(), 5);
  const auto ds = build_task_datasets(vars, {1, 3, 0});
  write_dataset(ds.disf, dir / "one.jsonl");
  {
    std::ifstream in(dir / "one.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1);
  }
  CHECK(read_dataset(dir / "one.jsonl") == ds.disf);
  write_dataset(ds.punc, dir / "punc.jsonl");
  CHECK(read_dataset(dir / "punc.jsonl", Split::kTrain, Task::kPunc) == ds.punc);
  CHECK_THROWS_AS(read_dataset(dir / "punc.jsonl", Split::kTrain, Task::kDisf), SchemaError);

  {
    std::ofstream out(dir / "foo.jsonl");
    out << R"({"source": "a", "target": "a", "task": "foo"})" << "\n";
  }
  CHECK_THROWS_AS(read_dataset(dir / "foo.jsonl"), SchemaError);

  {
    std::ofstream out(dir / "bad.jsonl");
    out << R"({"source": "a", "target": "a", "task": "same"})" << "\n"
        << R"({"source": "a", "target": )" << "\n";
  }
  try {
    read_dataset(dir / "bad.jsonl");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  {
    std::ofstream out(dir / "mixed.jsonl");
    out << R"({"source": "a", "target": "a", "task": "same"})" << "\n"
        << R"({"source": "a", "target": "b", "task": "disf"})" << "\n";
  }
  CHECK_THROWS_AS(read_dataset(dir / "mixed.jsonl"), SchemaError);

  { std::ofstream out(dir / "empty.jsonl"); }
  CHECK(read_dataset(dir / "empty.jsonl").pairs.empty());
}

TEST_CASE("corpus config validation") {
  auto cfg = CorpusConfig::desk_default();
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.p_filler = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.min_words = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.max_words = bad.min_words - 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.filler_inventory.push_back(cfg.lexicon.front());
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.lexicon.push_back("bad,word");
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(generate_clean(bad, 3), ConfigError);
}

TEST_CASE("task and split names") {
  for (Task t : {Task::kDisf, Task::kPunc, Task::kSame, Task::kJoint}) {
    CHECK(parse_task(task_name(t)) == t);
  }
  for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
    CHECK(parse_split(split_name(s)) == s);
  }
  CHECK_THROWS_AS(parse_task("foo"), SchemaError);
}

}  // namespace switchconv
