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

#include "cli.h"

#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "switchconv/checkpoint.h"
#include "switchconv/config.h"
#include "switchconv/errors.h"
#include "switchconv/harness.h"
#include "switchconv/metrics.h"

namespace switchconv {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("-c,--config", path, "experiment config (JSON)");
    if (required) opt->required();
    cmd->add_option("--set", overrides, "override a config key, e.g. train.max_epochs=5");
  }

  ExperimentConfig load() const {
    json j = json::object();
    if (!path.empty()) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw ConfigError("cannot open config file '" + path + "'");
      std::stringstream buf;
      buf << in.rdbuf();
      j = parse_json_text(buf.str(), path);
    }
    for (const auto& o : overrides) apply_override(j, o);
    return experiment_config_from_json(j);
  }
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

struct ModelArgs {
  std::string checkpoint;
  std::string secondary;
  std::string mode = "joint";
  int beam = 4;

  void attach(CLI::App* cmd) {
    cmd->add_option("-m,--checkpoint", checkpoint, "model checkpoint")->required();
    cmd->add_option("--secondary", secondary,
                    "dedicated punctuation checkpoint for dedicated cascades");
    cmd->add_option("--mode", mode,
                    "disf|punc|same|joint|cascade-fwd|cascade-bwd|plain");
    cmd->add_option("--beam", beam, "beam size")->check(CLI::PositiveNumber);
  }
};

struct LoadedModels {
  std::unique_ptr<Converter> primary;
  std::unique_ptr<Converter> secondary;
};

LoadedModels load_models(const ModelArgs& a) {
  LoadedModels m;
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  m.primary = std::make_unique<Converter>(to_model(ck));
  if (!a.secondary.empty()) {
    const Checkpoint ck2 = load_checkpoint(a.secondary, &ck.vocab);
    m.secondary = std::make_unique<Converter>(to_model(ck2));
  }
  return m;
}

std::vector<const Converter*> counted(const LoadedModels& m) {
  std::vector<const Converter*> out = {m.primary.get()};
  if (m.secondary) out.push_back(m.secondary.get());
  return out;
}

DecodeConfig decode_config(const ModelArgs& a) {
  DecodeConfig dc;
  dc.beam_size = a.beam;
  dc.validate();
  return dc;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Switching-token spoken-text-style conversion"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "generate datasets and the vocabulary");
  ConfigArgs gen_cfg;
  gen_cfg.attach(gen, false);
  std::string gen_out;
  gen->add_option("-o,--out", gen_out, "output directory (default <output_dir>/data)");

  auto* tr = app.add_subcommand("train", "train one model kind at one dataset size");
  ConfigArgs tr_cfg;
  tr_cfg.attach(tr, false);
  std::string tr_kind = kJointKind, tr_out;
  size_t tr_size = 0;
  tr->add_option("--kind", tr_kind, "joint|dedicated-disf|dedicated-punc");
  tr->add_option("--size", tr_size, "per-task training size (default: first of sizes)");
  tr->add_option("-o,--out", tr_out, "checkpoint path")->required();

  auto* dec = app.add_subcommand("decode", "convert a file of sentences");
  ModelArgs dec_model;
  dec_model.attach(dec);
  std::string dec_in, dec_out, dec_timing;
  dec->add_option("-i,--input", dec_in, "one source per line")->required();
  dec->add_option("-o,--output", dec_out, "one conversion per line")->required();
  dec->add_option("--timing", dec_timing, "timing sidecar (default <output>.timing.json)");

  auto* ev = app.add_subcommand("evaluate", "score hypotheses against references");
  std::string ev_src, ev_ref, ev_hyp, ev_gran = "word";
  std::vector<std::string> ev_fillers;
  ev->add_option("--sources", ev_src, "source file")->required();
  ev->add_option("--references", ev_ref, "reference file")->required();
  ev->add_option("--hypotheses", ev_hyp, "hypothesis file")->required();
  ev->add_option("--granularity", ev_gran, "word|character");
  ev->add_option("--fillers", ev_fillers, "filler inventory for the deletion score")
      ->delimiter(',');

  auto* be = app.add_subcommand("bench", "time decoding modes");
  ModelArgs be_model;
  be_model.attach(be);
  std::string be_in;
  std::vector<std::string> be_modes = {"joint", "cascade-fwd"};
  int be_reps = 3;
  be->add_option("-i,--input", be_in, "one source per line")->required();
  be->add_option("--modes", be_modes, "decode modes")->delimiter(',');
  be->add_option("--repetitions", be_reps, "timed runs per mode")->check(CLI::PositiveNumber);

  auto* ex = app.add_subcommand("experiment", "run the full pipeline");
  ConfigArgs ex_cfg;
  ex_cfg.attach(ex, true);
  bool ex_quiet = false;
  ex->add_flag("-q,--quiet", ex_quiet, "suppress progress output");

  auto* rep = app.add_subcommand("report", "render a report CSV");
  std::string rep_in, rep_format = "markdown";
  rep->add_option("-i,--input", rep_in, "report.csv")->required();
  rep->add_option("--format", rep_format, "markdown|csv")
      ->check(CLI::IsMember({"markdown", "csv"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) {
      const ExperimentConfig cfg = gen_cfg.load();
      const fs::path dir = gen_out.empty() ? cfg.output_dir / "data" : fs::path(gen_out);
      const ExperimentData data = generate_experiment_data(cfg);
      write_experiment_data(data, dir);
      out << "wrote datasets and vocabulary (" << data.vocab.size() << " tokens) to "
          << dir.string() << "\n";
    } else if (tr->parsed()) {
      tune_allocator();
      const ExperimentConfig cfg = tr_cfg.load();
      const size_t size = tr_size ? tr_size : cfg.sizes.front();
      ExperimentConfig sized = cfg;
      sized.sizes = {size};
      const ExperimentData data = generate_experiment_data(sized);
      TrainedModel tm = train_model_kind(
          sized, data, tr_kind, size, [&](const std::string&, size_t, const EpochRecord& r) {
            out << json{{"epoch", r.epoch}, {"split", "train"}, {"loss", r.train_loss}}.dump()
                << "\n"
                << json{{"epoch", r.epoch}, {"split", "valid"}, {"loss", r.valid_loss}}.dump()
                << std::endl;
          });
      if (!tm.checkpoint) {
        err << "training failed: " << tm.error << "\n";
        return 1;
      }
      save_checkpoint(*tm.checkpoint, tr_out);
      out << "saved " << tr_kind << " checkpoint (best epoch " << tm.best_epoch << ") to "
          << tr_out << "\n";
    } else if (dec->parsed()) {
      tune_allocator();
      const LoadedModels m = load_models(dec_model);
      const auto fn = make_text_converter(*m.primary, m.secondary.get(),
                                          parse_decode_mode(dec_model.mode),
                                          decode_config(dec_model));
      const auto inputs = read_lines(dec_in);
      const auto c = counted(m);
      const DecodeRun run = decode_lines(fn, inputs, c);
      std::string text;
      for (const auto& o : run.outputs) text += o + "\n";
      write_file(dec_out, text);
      const json timing = {{"wallclock_s", run.wallclock_s},
                           {"passes", run.passes},
                           {"sentences", inputs.size()}};
      write_file(dec_timing.empty() ? dec_out + ".timing.json" : dec_timing,
                 timing.dump(2) + "\n");
    } else if (ev->parsed()) {
      const auto srcs = read_lines(ev_src);
      const auto refs = read_lines(ev_ref);
      const auto hyps = read_lines(ev_hyp);
      const Granularity g = parse_granularity(ev_gran);
      const ScoreTriple s = score_corpus(srcs, refs, hyps, g);
      const std::string unit(granularity_name(g));
      out << json{{"metric", "bleu"}, {"value", s.bleu}, {"unit", unit}}.dump() << "\n"
          << json{{"metric", "meteor"}, {"value", s.meteor}, {"unit", unit}}.dump() << "\n"
          << json{{"metric", "gleu"}, {"value", s.gleu}, {"unit", unit}}.dump() << "\n"
          << json{{"metric", "exact_match"}, {"value", exact_match_rate(refs, hyps)}}.dump()
          << "\n";
      if (!ev_fillers.empty()) {
        const DeletionScore d = filler_deletion_f1(srcs, refs, hyps, ev_fillers);
        out << json{{"metric", "filler_deletion"},
                    {"precision", d.precision},
                    {"recall", d.recall},
                    {"f1", d.f1}}.dump()
            << "\n";
      }
    } else if (be->parsed()) {
      tune_allocator();
      const LoadedModels m = load_models(be_model);
      const DecodeConfig dc = decode_config(be_model);
      const auto inputs = read_lines(be_in);
      const auto c = counted(m);
      for (const auto& mode : be_modes) {
        const auto fn = make_text_converter(*m.primary, m.secondary.get(),
                                            parse_decode_mode(mode), dc);
        const BenchRecord r = bench_decode(fn, inputs, c, be_reps, mode);
        out << json{{"mode", r.mode},
                    {"runs_s", r.runs_s},
                    {"median_s", r.median_s},
                    {"per_sentence_s", r.per_sentence_s},
                    {"passes", r.passes},
                    {"passes_stable", r.passes_stable}}.dump()
            << "\n";
      }
    } else if (ex->parsed()) {
      tune_allocator();
      const ExperimentConfig cfg = ex_cfg.load();
      const EvalReport report = run_experiment(cfg, ex_quiet ? nullptr : &err);
      out << render_report(report, ReportFormat::kMarkdown);
    } else if (rep->parsed()) {
      std::ifstream in(rep_in, std::ios::binary);
      if (!in) throw Error("cannot open '" + rep_in + "'");
      std::stringstream buf;
      buf << in.rdbuf();
      const EvalReport report = parse_report_csv(buf.str());
      out << render_report(report, rep_format == "csv" ? ReportFormat::kCsv
                                                       : ReportFormat::kMarkdown);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    err << "parse error";
    if (e.line() > 0) err << " at line " << e.line();
    err << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace switchconv
