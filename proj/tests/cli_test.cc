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
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.h"
#include "doctest.h"
#include "test_util.h"

namespace switchconv {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "switchconv");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string tiny_config_json(const std::filesystem::path& out) {
  return R"({
  "seed": 3,
  "model": {"d_model": 16, "n_heads": 2, "enc_layers": 1, "dec_layers": 1,
            "ffn_dim": 32, "dropout": 0.0, "max_len": 96},
  "train": {"max_epochs": 1, "batch_size": 16, "learning_rate": 0.001},
  "decode": {"beam_size": 2, "max_len": 40},
  "sizes": [12], "valid_size": 4, "test_size": 5, "bench_repetitions": 1,
  "output_dir": ")" + out.string() + R"("
})";
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"gen-data", "--no-such-flag"}).code == 2);
  CHECK(run({"experiment"}).code == 2);
  const Result help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("gen-data") != std::string::npos);
}

TEST_CASE("config errors exit with status 1") {
  testing::TempDir dir;
  const Result missing = run({"experiment", "--config", (dir / "absent.json").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("absent.json") != std::string::npos);

  write(dir / "broken.json", "{\n  \"seed\": 1,\n  \"sizes\": [1,\n}\n");
  const Result broken = run({"gen-data", "--config", (dir / "broken.json").string()});
  CHECK(broken.code == 1);
  CHECK(broken.err.find("broken.json:4:") != std::string::npos);

  write(dir / "unknown.json", R"({"sead": 1})");
  const Result unknown = run({"gen-data", "--config", (dir / "unknown.json").string()});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("sead") != std::string::npos);
}

TEST_CASE("gen-data, train, decode, bench, evaluate and report") {
  testing::TempDir dir;
  write(dir / "c.json", tiny_config_json(dir / "run"));
  const std::string cfg = (dir / "c.json").string();

  Result r = run({"gen-data", "--config", cfg, "--out", (dir / "data").string()});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "data" / "vocab.tsv"));
  CHECK(std::filesystem::exists(dir / "data" / "train.12.disf.jsonl"));
  CHECK(std::filesystem::exists(dir / "data" / "test.joint.jsonl"));

  r = run({"train", "--config", cfg, "--kind", "joint", "--out", (dir / "j.ckpt").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\"split\":\"valid\"") != std::string::npos);
  r = run({"train", "--config", cfg, "--kind", "dedicated-disf", "--out",
           (dir / "d.ckpt").string(), "--set", "train.max_epochs=1"});
  REQUIRE(r.code == 0);
  r = run({"train", "--config", cfg, "--kind", "dedicated-punc", "--out",
           (dir / "p.ckpt").string()});
  REQUIRE(r.code == 0);
  CHECK(run({"train", "--config", cfg, "--kind", "bogus", "--out",
             (dir / "x.ckpt").string()}).code == 1);

  write(dir / "in.txt", "uh the cat sat\nwe ran\n");
  r = run({"decode", "-m", (dir / "j.ckpt").string(), "--mode", "joint", "-i",
           (dir / "in.txt").string(), "-o", (dir / "out.txt").string()});
  REQUIRE(r.code == 0);
  {
    std::ifstream in(dir / "out.txt.timing.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("passes") == 2);
  }
  r = run({"decode", "-m", (dir / "d.ckpt").string(), "--secondary", (dir / "p.ckpt").string(),
           "--mode", "cascade-fwd", "-i", (dir / "in.txt").string(), "-o",
           (dir / "out2.txt").string()});
  REQUIRE(r.code == 0);
  {
    std::ifstream in(dir / "out2.txt.timing.json");
    CHECK(nlohmann::json::parse(in).at("passes") == 4);
  }
  CHECK(run({"decode", "-m", (dir / "j.ckpt").string(), "--mode", "sideways", "-i",
             (dir / "in.txt").string(), "-o", (dir / "o.txt").string()}).code == 1);

  r = run({"bench", "-m", (dir / "j.ckpt").string(), "-i", (dir / "in.txt").string(),
           "--modes", "joint,cascade-fwd", "--repetitions", "2"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string joint_line, cascade_line;
  std::getline(lines, joint_line);
  std::getline(lines, cascade_line);
  CHECK(nlohmann::json::parse(joint_line).at("passes") == 2);
  CHECK(nlohmann::json::parse(cascade_line).at("passes") == 4);

  write(dir / "src.txt", "uh the cat sat\n");
  write(dir / "ref.txt", "the cat sat.\n");
  r = run({"evaluate", "--sources", (dir / "src.txt").string(), "--references",
           (dir / "ref.txt").string(), "--hypotheses", (dir / "ref.txt").string(),
           "--fillers", "uh,um"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find(R"({"metric":"bleu","unit":"word","value":1.0})") != std::string::npos);
  CHECK(r.out.find(R"("f1":1.0)") != std::string::npos);

  write(dir / "empty.csv",
        "model_kind,decode_mode,dataset_size,bleu,meteor,gleu,exact_match,wallclock_s,"
        "passes,params,status\n");
  r = run({"report", "-i", (dir / "empty.csv").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("# Evaluation report") == 0);
  write(dir / "bad.csv", "nope\n");
  CHECK(run({"report", "-i", (dir / "bad.csv").string()}).code == 1);
}

TEST_CASE("experiment subcommand writes the report") {
  testing::TempDir dir;
  write(dir / "c.json", tiny_config_json(dir / "run"));
  const Result r = run({"experiment", "--config", (dir / "c.json").string(), "--quiet",
                        "--set", "train_dedicated=false"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("## 12 sentences per task") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "run" / "report.csv"));
}

}  // namespace switchconv
