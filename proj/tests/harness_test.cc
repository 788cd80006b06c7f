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

#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "switchconv/checkpoint.h"
#include "switchconv/config.h"
#include "switchconv/errors.h"
#include "switchconv/harness.h"
#include "test_util.h"

namespace switchconv {
namespace {

using testing::TempDir;

ExperimentConfig tiny_experiment(const std::filesystem::path& out) {
  ExperimentConfig c;
  c.model = testing::tiny_config(0, 16);
  c.model.max_len = 96;
  c.train.max_epochs = 1;
  c.train.batch_size = 16;
  c.train.learning_rate = 1e-3;
  c.sizes = {20, 40};
  c.valid_size = 5;
  c.test_size = 8;
  c.bench_repetitions = 2;
  c.decode.max_len = 40;
  c.output_dir = out;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Checkpoint random_checkpoint(uint64_t seed) {
  const auto data = generate_experiment_data(tiny_experiment("unused"));
  Checkpoint ck;
  ck.config = testing::tiny_config(data.vocab.size(), 16);
  ck.config.max_len = 96;
  ck.vocab = data.vocab;
  ck.params = testing::random_params<float>(ck.config, seed, 0.2);
  return ck;
}

}  // namespace

TEST_CASE("experiment config JSON round trip") {
  ExperimentConfig c = tiny_experiment("runs/x");
  c.granularity = Granularity::kCharacter;
  c.train.grad_clip_norm.reset();
  const auto back = experiment_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK_FALSE(back.train.grad_clip_norm.has_value());
  CHECK(back.granularity == Granularity::kCharacter);
}

TEST_CASE("experiment config seeds and defaults") {
  const auto c = experiment_config_from_json(nlohmann::json{{"seed", 42}});
  CHECK(c.seed == 42);
  CHECK(c.corpus.seed == 42);
  CHECK(c.train.seed == 42);
  CHECK(c.sizes == std::vector<size_t>{1000, 3000, 5000});
  const auto d = experiment_config_from_json(
      nlohmann::json{{"seed", 42}, {"train", {{"seed", 3}}}});
  CHECK(d.train.seed == 3);
  CHECK(d.corpus.seed == 42);
}

TEST_CASE("experiment config errors") {
  CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"train", {{"lr", 1}}}}),
                  ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"sizes", "many"}}),
                  ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"sizes", nlohmann::json::array()}}),
                  ConfigError);
  CHECK_THROWS_AS(
      experiment_config_from_json(nlohmann::json{{"model", {{"d_model", 30}, {"n_heads", 4}}}}),
      ConfigError);
  try {
    parse_json_text("{\n  \"seed\": 1,\n  oops\n}", "c.json");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("c.json:3:", 0) == 0);
  }
  try {
    load_experiment_config("/nonexistent/cfg.json");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/cfg.json") != std::string::npos);
  }
}

TEST_CASE("config overrides") {
  nlohmann::json j = nlohmann::json::object();
  apply_override(j, "train.max_epochs=5");
  apply_override(j, "sizes=[10,20]");
  apply_override(j, "output_dir=runs/y");
  const auto c = experiment_config_from_json(j);
  CHECK(c.train.max_epochs == 5);
  CHECK(c.sizes == std::vector<size_t>{10, 20});
  CHECK(c.output_dir == "runs/y");
  CHECK_THROWS_AS(apply_override(j, "novalue"), ConfigError);
}

TEST_CASE("experiment data layout") {
  const auto cfg = tiny_experiment("unused");
  const auto data = generate_experiment_data(cfg);
  REQUIRE(data.train.size() == 2);
  const auto& small = data.train_for(20);
  const auto& large = data.train_for(40);
  CHECK(small.disf.size() == 20);
  CHECK(small.same.size() == 40);
  CHECK(large.same.size() == 80);
  for (size_t i = 0; i < 20; ++i) {
    CHECK(small.disf.pairs[i] == large.disf.pairs[i]);
    CHECK(small.punc.pairs[i] == large.punc.pairs[i]);
  }
  CHECK(data.valid.disf.size() == 5);
  CHECK(data.test.joint.size() == 8);
  std::set<std::string> seen;
  for (const auto& p : large.same.pairs) seen.insert(p.source);
  for (const auto& p : data.valid.same.pairs) seen.insert(p.source);
  for (const auto& p : data.test.joint.pairs) CHECK(seen.count(p.source) == 0);

  TempDir dir;
  write_experiment_data(data, dir.path());
  const auto back = read_experiment_data(dir.path(), data.sizes);
  CHECK(back.vocab == data.vocab);
  CHECK(back.train[1].same == data.train[1].same);
  CHECK(back.test.joint == data.test.joint);
}

TEST_CASE("checkpoint round trip is bit exact") {
  TempDir dir;
  Checkpoint ck = random_checkpoint(3);
  ck.optimizer = OptimizerState<float>::zeros_like(ck.params);
  ck.optimizer->step = 17;
  ck.optimizer->first_moment.tensors()[0].value(0, 0) = 0.25f;
  save_checkpoint(ck, dir / "m.ckpt");
  const Checkpoint back = load_checkpoint(dir / "m.ckpt");
  CHECK(back.config == ck.config);
  CHECK(back.vocab == ck.vocab);
  REQUIRE(back.optimizer.has_value());
  CHECK(back.optimizer->step == 17);
  CHECK(back.optimizer->first_moment.tensors()[0].value(0, 0) == 0.25f);
  for (size_t i = 0; i < ck.params.tensors().size(); ++i) {
    CHECK(back.params.tensors()[i].name == ck.params.tensors()[i].name);
    CHECK(back.params.tensors()[i].value == ck.params.tensors()[i].value);
  }
  Converter a(to_model(ck)), b(to_model(back));
  DecodeConfig dc;
  dc.max_len = 30;
  dc.switches = SwitchSetting{true, true};
  const auto data = generate_experiment_data(tiny_experiment("unused"));
  for (size_t i = 0; i < 10; ++i) {
    const auto& src = data.test.joint.pairs[i % data.test.joint.size()].source;
    const auto ha = a.search(ck.vocab.encode(src), dc);
    const auto hb = b.search(ck.vocab.encode(src), dc);
    CHECK(ha.ids == hb.ids);
    CHECK(ha.logprob == hb.logprob);
  }
}

TEST_CASE("checkpoint integrity, version and shape errors") {
  TempDir dir;
  const Checkpoint ck = random_checkpoint(4);
  save_checkpoint(ck, dir / "m.ckpt");
  const std::string bytes = slurp(dir / "m.ckpt");

  std::string corrupted = bytes;
  corrupted[corrupted.size() / 2] ^= 0x40;
  std::ofstream(dir / "corrupt.ckpt", std::ios::binary) << corrupted;
  CHECK_THROWS_AS(load_checkpoint(dir / "corrupt.ckpt"), IntegrityError);

  std::ofstream(dir / "short.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() - 100);
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), IntegrityError);

  std::ofstream(dir / "tiny.ckpt", std::ios::binary) << "SWCK";
  CHECK_THROWS_AS(load_checkpoint(dir / "tiny.ckpt"), IntegrityError);

  std::string versioned = bytes;
  versioned[4] = 9;
  std::ofstream(dir / "v9.ckpt", std::ios::binary) << versioned;
  CHECK_THROWS_AS(load_checkpoint(dir / "v9.ckpt"), VersionError);

  auto tokens = ck.vocab.tokens();
  tokens.push_back("#");
  const Vocabulary bigger = Vocabulary::from_tokens(tokens);
  CHECK_THROWS_AS(load_checkpoint(dir / "m.ckpt", &bigger), ShapeError);
  CHECK_NOTHROW(load_checkpoint(dir / "m.ckpt", &ck.vocab));

  Checkpoint mismatched = ck;
  mismatched.config.vocab_size += 1;
  CHECK_THROWS_AS(save_checkpoint(mismatched, dir / "bad.ckpt"), ShapeError);
}

TEST_CASE("report layout and rendering") {
  const auto layout = report_layout();
  CHECK(layout.size() == 11);
  std::set<std::pair<std::string, std::string>> unique;
  for (const auto& r : layout) unique.emplace(r.model_kind, r.decode_mode);
  CHECK(unique.size() == 11);

  EvalReport empty;
  const std::string csv = render_report(empty, ReportFormat::kCsv);
  CHECK(csv ==
        "model_kind,decode_mode,dataset_size,bleu,meteor,gleu,exact_match,wallclock_s,"
        "passes,params,status\n");
  CHECK(parse_report_csv(csv).rows.empty());
  CHECK(render_report(empty, ReportFormat::kMarkdown).find("# Evaluation report") == 0);

  EvalReport r;
  r.rows.push_back({"joint", "joint", 1000, {0.1 / 3.0, 0.5, 1.0 / 7.0}, 0.25, 1.2345678, 1.0,
                    934434, "ok"});
  r.rows.push_back({"dedicated-pair", "cascade-fwd", 1000, {0.9, 0.8, 0.7}, 0.5, 2.5, 2.0,
                    1868868, "ok"});
  r.rows.push_back({"dedicated-disf", "disf", 1000, {}, 0.0, 0.0, 0.0, 0, "failed"});
  CHECK(parse_report_csv(render_report(r, ReportFormat::kCsv)).rows == r.rows);
  const auto stable = parse_report_csv(render_report(r, ReportFormat::kCsv, false));
  CHECK(stable.rows[0].wallclock_s == 0.0);
  const std::string md = render_report(r, ReportFormat::kMarkdown);
  CHECK(md.find("| joint | joint | on | on |") != std::string::npos);
  CHECK(md.find("| dedicated-pair | cascade-fwd | - | - |") != std::string::npos);
  CHECK(md.find("| failed |") != std::string::npos);
  CHECK_THROWS_AS(parse_report_csv("a,b\n"), ParseError);
  CHECK_THROWS_AS(parse_report_csv(csv + "joint,joint,1\n"), ParseError);
}

TEST_CASE("bench records medians and stable pass counts") {
  const Checkpoint ck = random_checkpoint(5);
  Converter conv(to_model(ck));
  DecodeConfig dc;
  dc.max_len = 20;
  const std::vector<std::string> inputs = {"the cat", "uh a dog", "we ran"};
  const std::vector<const Converter*> counted = {&conv};
  const auto joint = bench_decode(make_text_converter(conv, nullptr, DecodeMode::kJoint, dc),
                                  inputs, counted, 3, "joint");
  const auto fwd = bench_decode(
      make_text_converter(conv, nullptr, DecodeMode::kCascadeForward, dc), inputs, counted, 3,
      "cascade-fwd");
  CHECK(joint.runs_s.size() == 3);
  CHECK(joint.passes == 3);
  CHECK(fwd.passes == 6);
  CHECK(joint.passes_stable);
  CHECK(fwd.outputs_stable);
  auto sorted = joint.runs_s;
  std::sort(sorted.begin(), sorted.end());
  CHECK(joint.median_s == sorted[1]);
  CHECK_THROWS_AS(bench_decode(make_text_converter(conv, nullptr, DecodeMode::kJoint, dc),
                               inputs, counted, 0, "joint"),
                  ConfigError);
}

TEST_CASE("tiny experiment runs end to end and is deterministic") {
  TempDir dir;
  auto cfg = tiny_experiment(dir / "a");
  const EvalReport a = run_experiment(cfg);
  CHECK(a.rows.size() == 22);
  for (size_t size : cfg.sizes) {
    for (const auto& spec : report_layout()) {
      const ReportRow* row = a.find(spec.model_kind, spec.decode_mode, size);
      REQUIRE(row != nullptr);
      CHECK(row->status == "ok");
    }
    CHECK(a.find("joint", "joint", size)->passes == 1.0);
    CHECK(a.find("joint", "cascade-fwd", size)->passes == 2.0);
    CHECK(a.find("dedicated-pair", "cascade-bwd", size)->passes == 2.0);
    CHECK(a.find("dedicated-pair", "cascade-fwd", size)->params ==
          2 * a.find("joint", "joint", size)->params);
    CHECK(a.find("identity", "none", size)->passes == 0.0);
  }
  for (const char* f : {"config.json", "metrics.jsonl", "report.md", "report.csv",
                        "report.stable.csv", "diagnostics.json", "data/vocab.tsv",
                        "models/joint.20.ckpt", "outputs/40/joint.joint.txt"}) {
    CHECK_MESSAGE(std::filesystem::exists(dir / "a" / f), f);
  }
  CHECK(parse_report_csv(slurp(dir / "a" / "report.csv")).rows == a.rows);
  const auto materialized = load_experiment_config(dir / "a" / "config.json");
  CHECK(materialized.model.vocab_size > kNumReserved);

  cfg.output_dir = dir / "b";
  run_experiment(cfg);
  CHECK(slurp(dir / "a" / "report.stable.csv") == slurp(dir / "b" / "report.stable.csv"));
  CHECK(slurp(dir / "a" / "metrics.jsonl") == slurp(dir / "b" / "metrics.jsonl"));
}

TEST_CASE("skipped rows when dedicated models are not trained") {
  TempDir dir;
  auto cfg = tiny_experiment(dir / "a");
  cfg.sizes = {20};
  cfg.train_dedicated = false;
  const EvalReport r = run_experiment(cfg);
  CHECK(r.rows.size() == 11);
  CHECK(r.find("dedicated-pair", "cascade-fwd", 20)->status == "skipped");
  CHECK(r.find("dedicated-disf", "disf", 20)->status == "skipped");
  CHECK(r.find("joint", "joint", 20)->status == "ok");
}

}  // namespace switchconv
