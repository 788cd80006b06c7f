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

#include "switchconv/harness.h"

#include <sys/resource.h>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "switchconv/errors.h"
#include "switchconv/training.h"

namespace switchconv {
namespace fs = std::filesystem;
namespace {

using nlohmann::json;

constexpr const char* kPairKind = "dedicated-pair";
constexpr const char* kIdentityKind = "identity";

const char* const kCsvColumns[] = {"model_kind", "decode_mode", "dataset_size",
                                   "bleu",       "meteor",      "gleu",
                                   "exact_match", "wallclock_s", "passes",
                                   "params",     "status"};

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view s) {
  if (s.empty()) return 0.0;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("bad number '" + std::string(s) + "'", 0);
  }
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Dataset slice(const Dataset& ds, size_t n) {
  Dataset out{ds.split, ds.task, {}};
  out.pairs.assign(ds.pairs.begin(), ds.pairs.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

Dataset same_of(const Dataset& disf, const Dataset& punc) {
  Dataset out{disf.split, Task::kSame, {}};
  for (const Dataset* ds : {&disf, &punc}) {
    for (const auto& p : ds->pairs) out.pairs.push_back({p.source, p.source, Task::kSame});
  }
  return out;
}

std::vector<std::string> sources_of(const Dataset& ds) {
  std::vector<std::string> out;
  out.reserve(ds.size());
  for (const auto& p : ds.pairs) out.push_back(p.source);
  return out;
}

void write_lines(const fs::path& path, std::span<const std::string> lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& l : lines) out << l << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

std::string dataset_file(const std::string& prefix, Task task) {
  return prefix + "." + std::string(task_name(task)) + ".jsonl";
}

bool removes_fillers(const std::string& mode) {
  return mode != "punc" && mode != "same";
}

const Dataset& test_set_for(const TestDatasets& test, const std::string& mode) {
  if (mode == "disf") return test.disf;
  if (mode == "punc") return test.punc;
  if (mode == "same") return test.same;
  return test.joint;
}

}  // namespace

const TaskDatasets& ExperimentData::train_for(size_t size) const {
  for (size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == size) return train[i];
  }
  throw Error("no training data for size " + std::to_string(size));
}

ExperimentData generate_experiment_data(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentData data;
  data.sizes = cfg.sizes;
  const size_t largest = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
  const auto variants =
      generate_variants(cfg.corpus, 2 * largest + 2 * cfg.valid_size + cfg.test_size);
  const std::span<const VariantSet> all(variants);
  const auto full = build_task_datasets(all.first(2 * largest), {largest, largest, 0});
  for (size_t s : cfg.sizes) {
    TaskDatasets t;
    t.disf = slice(full.disf, s);
    t.punc = slice(full.punc, s);
    t.same = same_of(t.disf, t.punc);
    t.joint_test = {Split::kTest, Task::kJoint, {}};
    data.train.push_back(std::move(t));
  }
  data.valid = build_task_datasets(all.subspan(2 * largest, 2 * cfg.valid_size),
                                   {cfg.valid_size, cfg.valid_size, 0}, Split::kValid);
  data.test = build_test_datasets(all.subspan(2 * largest + 2 * cfg.valid_size));
  std::vector<Dataset> vocab_sources = {full.disf, full.punc, data.valid.disf,
                                        data.valid.punc};
  data.vocab = Vocabulary::build(vocab_sources);
  return data;
}

void write_experiment_data(const ExperimentData& data, const fs::path& dir) {
  fs::create_directories(dir);
  for (size_t i = 0; i < data.sizes.size(); ++i) {
    const std::string prefix = "train." + std::to_string(data.sizes[i]);
    write_dataset(data.train[i].disf, dir / dataset_file(prefix, Task::kDisf));
    write_dataset(data.train[i].punc, dir / dataset_file(prefix, Task::kPunc));
    write_dataset(data.train[i].same, dir / dataset_file(prefix, Task::kSame));
  }
  write_dataset(data.valid.disf, dir / dataset_file("valid", Task::kDisf));
  write_dataset(data.valid.punc, dir / dataset_file("valid", Task::kPunc));
  write_dataset(data.valid.same, dir / dataset_file("valid", Task::kSame));
  write_dataset(data.test.disf, dir / dataset_file("test", Task::kDisf));
  write_dataset(data.test.punc, dir / dataset_file("test", Task::kPunc));
  write_dataset(data.test.same, dir / dataset_file("test", Task::kSame));
  write_dataset(data.test.joint, dir / dataset_file("test", Task::kJoint));
  data.vocab.save(dir / "vocab.tsv");
}

ExperimentData read_experiment_data(const fs::path& dir, std::span<const size_t> sizes) {
  ExperimentData data;
  data.sizes.assign(sizes.begin(), sizes.end());
  auto read = [&](const std::string& prefix, Split split, Task task) {
    return read_dataset(dir / dataset_file(prefix, task), split, task);
  };
  for (size_t s : sizes) {
    const std::string prefix = "train." + std::to_string(s);
    TaskDatasets t;
    t.disf = read(prefix, Split::kTrain, Task::kDisf);
    t.punc = read(prefix, Split::kTrain, Task::kPunc);
    t.same = read(prefix, Split::kTrain, Task::kSame);
    data.train.push_back(std::move(t));
  }
  data.valid.disf = read("valid", Split::kValid, Task::kDisf);
  data.valid.punc = read("valid", Split::kValid, Task::kPunc);
  data.valid.same = read("valid", Split::kValid, Task::kSame);
  data.test.disf = read("test", Split::kTest, Task::kDisf);
  data.test.punc = read("test", Split::kTest, Task::kPunc);
  data.test.same = read("test", Split::kTest, Task::kSame);
  data.test.joint = read("test", Split::kTest, Task::kJoint);
  data.vocab = Vocabulary::load(dir / "vocab.tsv");
  return data;
}

TrainedModel train_model_kind(const ExperimentConfig& cfg, const ExperimentData& data,
                              const std::string& kind, size_t size,
                              const EpochLogger& log) {
  const TaskDatasets& tr = data.train_for(size);
  std::vector<Dataset> train_sets, valid_sets;
  TrainMode mode = TrainMode::kSingleTask;
  if (kind == kJointKind) {
    train_sets = {tr.disf, tr.punc, tr.same};
    valid_sets = {data.valid.disf, data.valid.punc, data.valid.same};
    mode = TrainMode::kJointSwitching;
  } else if (kind == kDedicatedDisfKind) {
    train_sets = {tr.disf};
    valid_sets = {data.valid.disf};
  } else if (kind == kDedicatedPuncKind) {
    train_sets = {tr.punc};
    valid_sets = {data.valid.punc};
  } else {
    throw ConfigError("unknown model kind '" + kind + "'");
  }
  ModelConfig mc = cfg.model;
  mc.vocab_size = data.vocab.size();

  TrainedModel out;
  out.model_kind = kind;
  out.dataset_size = size;
  const auto start = std::chrono::steady_clock::now();
  try {
    auto result = train(mc, cfg.train, data.vocab, train_sets, valid_sets, mode,
                        [&](const EpochRecord& r) {
                          if (log) log(kind, size, r);
                        });
    Checkpoint ck;
    ck.model_kind = kind;
    ck.config = mc;
    ck.vocab = data.vocab;
    ck.params = std::move(result.params);
    ck.experiment = to_json(cfg);
    out.checkpoint = std::move(ck);
    out.trace = std::move(result.trace);
    out.best_epoch = result.best_epoch;
  } catch (const TrainingDiverged& e) {
    out.trace = e.trace();
    out.error = e.what();
  } catch (const NumericError& e) {
    out.error = e.what();
  }
  out.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::shared_ptr<const Model> to_model(const Checkpoint& ck) {
  return std::make_shared<const Model>(Model{ck.config, ck.vocab, ck.params});
}

std::vector<RowSpec> report_layout() {
  return {{kDedicatedDisfKind, "disf"},  {kDedicatedPuncKind, "punc"},
          {kJointKind, "disf"},          {kJointKind, "punc"},
          {kJointKind, "same"},          {kPairKind, "cascade-fwd"},
          {kPairKind, "cascade-bwd"},    {kJointKind, "cascade-fwd"},
          {kJointKind, "cascade-bwd"},   {kJointKind, "joint"},
          {kIdentityKind, "none"}};
}

const ReportRow* EvalReport::find(std::string_view kind, std::string_view mode,
                                  size_t size) const {
  for (const auto& r : rows) {
    if (r.model_kind == kind && r.decode_mode == mode && r.dataset_size == size) return &r;
  }
  return nullptr;
}

const Diagnostic* EvalReport::find_diagnostic(std::string_view kind,
                                              std::string_view mode,
                                              size_t size) const {
  for (const auto& d : diagnostics) {
    if (d.model_kind == kind && d.decode_mode == mode && d.dataset_size == size) return &d;
  }
  return nullptr;
}

BenchRecord bench_decode(const TextConverter& fn, std::span<const std::string> sources,
                         std::span<const Converter* const> counted, int repetitions,
                         std::string mode) {
  if (repetitions < 1) throw ConfigError("bench needs at least one repetition");
  BenchRecord rec;
  rec.mode = std::move(mode);
  if (!sources.empty()) fn(sources.front());
  for (int r = 0; r < repetitions; ++r) {
    DecodeRun run = decode_lines(fn, sources, counted);
    rec.runs_s.push_back(run.wallclock_s);
    if (r == 0) {
      rec.passes = run.passes;
      rec.outputs = std::move(run.outputs);
    } else {
      rec.passes_stable = rec.passes_stable && run.passes == rec.passes;
      rec.outputs_stable = rec.outputs_stable && run.outputs == rec.outputs;
    }
  }
  std::vector<double> sorted = rec.runs_s;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  rec.median_s = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  rec.per_sentence_s =
      sources.empty() ? 0.0 : rec.median_s / static_cast<double>(sources.size());
  return rec;
}

ReportRow score_row(const Dataset& test, std::span<const std::string> hypotheses,
                    Granularity g) {
  std::vector<std::string> srcs, refs;
  for (const auto& p : test.pairs) {
    srcs.push_back(p.source);
    refs.push_back(p.target);
  }
  ReportRow row;
  row.scores = score_corpus(srcs, refs, hypotheses, g);
  row.exact_match = exact_match_rate(refs, hypotheses);
  return row;
}

std::string render_report(const EvalReport& report, ReportFormat format, bool timing) {
  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    for (size_t i = 0; i < std::size(kCsvColumns); ++i) {
      out << (i ? "," : "") << kCsvColumns[i];
    }
    out << "\n";
    for (const auto& r : report.rows) {
      const bool ok = r.status == "ok";
      auto num = [&](double v) { return ok ? format_number(v) : std::string(); };
      out << r.model_kind << ',' << r.decode_mode << ',' << r.dataset_size << ','
          << num(r.scores.bleu) << ',' << num(r.scores.meteor) << ','
          << num(r.scores.gleu) << ',' << num(r.exact_match) << ','
          << (timing ? num(r.wallclock_s) : std::string()) << ',' << num(r.passes)
          << ',' << r.params << ',' << r.status << "\n";
    }
    return out.str();
  }

  out << "# Evaluation report\n\nMetric unit: " << granularity_name(report.granularity)
      << "\n";
  std::vector<size_t> sizes;
  for (const auto& r : report.rows) {
    if (std::find(sizes.begin(), sizes.end(), r.dataset_size) == sizes.end()) {
      sizes.push_back(r.dataset_size);
    }
  }
  auto cell = [](double v, const char* fmt) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return std::string(buf);
  };
  for (size_t size : sizes) {
    out << "\n## " << size << " sentences per task\n\n"
        << "| model | mode | disf | punc | BLEU | METEOR | GLEU | exact | "
           "wall-clock s | passes/sent | params | status |\n"
        << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : report.rows) {
      if (r.dataset_size != size) continue;
      std::string disf = "-", punc = "-";
      if (r.model_kind == kJointKind) {
        if (r.decode_mode == "disf" || r.decode_mode == "joint") disf = "on";
        else if (r.decode_mode == "punc" || r.decode_mode == "same") disf = "off";
        if (r.decode_mode == "punc" || r.decode_mode == "joint") punc = "on";
        else if (r.decode_mode == "disf" || r.decode_mode == "same") punc = "off";
      }
      const bool ok = r.status == "ok";
      auto metric = [&](double v) { return ok ? cell(v, "%.4f") : std::string("-"); };
      out << "| " << r.model_kind << " | " << r.decode_mode << " | " << disf << " | "
          << punc << " | " << metric(r.scores.bleu) << " | " << metric(r.scores.meteor)
          << " | " << metric(r.scores.gleu) << " | " << metric(r.exact_match) << " | "
          << (ok && timing ? cell(r.wallclock_s, "%.3f") : std::string("-")) << " | "
          << (ok ? cell(r.passes, "%g") : std::string("-")) << " | " << r.params
          << " | " << r.status << " |\n";
    }
  }
  return out.str();
}

EvalReport parse_report_csv(std::string_view text) {
  EvalReport report;
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("report CSV is empty", 1);
  ++line_no;
  const auto header = split_csv_line(line);
  if (!std::equal(header.begin(), header.end(), std::begin(kCsvColumns),
                  std::end(kCsvColumns)) ||
      header.size() != std::size(kCsvColumns)) {
    throw ParseError("unexpected report CSV header", line_no);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != std::size(kCsvColumns)) {
      throw ParseError("expected " + std::to_string(std::size(kCsvColumns)) + " fields",
                       line_no);
    }
    try {
      ReportRow r;
      r.model_kind = f[0];
      r.decode_mode = f[1];
      r.dataset_size = static_cast<size_t>(parse_number(f[2]));
      r.scores = {parse_number(f[3]), parse_number(f[4]), parse_number(f[5])};
      r.exact_match = parse_number(f[6]);
      r.wallclock_s = parse_number(f[7]);
      r.passes = parse_number(f[8]);
      r.params = static_cast<size_t>(parse_number(f[9]));
      r.status = f[10];
      report.rows.push_back(std::move(r));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return report;
}

int64_t peak_rss_kib() {
  struct rusage usage {};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

EvalReport run_experiment(const ExperimentConfig& cfg, std::ostream* progress) {
  cfg.validate();
  const fs::path root = cfg.output_dir;
  fs::create_directories(root / "models");
  fs::create_directories(root / "outputs");
  auto note = [&](const std::string& msg) {
    if (progress) *progress << msg << std::endl;
  };

  const ExperimentData data = generate_experiment_data(cfg);
  write_experiment_data(data, root / "data");
  ExperimentConfig materialized = cfg;
  materialized.model.vocab_size = data.vocab.size();
  save_experiment_config(materialized, root / "config.json");

  std::ofstream metrics_log(root / "metrics.jsonl", std::ios::binary);
  const EpochLogger log = [&](const std::string& kind, size_t size, const EpochRecord& r) {
    metrics_log << json{{"model", kind}, {"size", size}, {"epoch", r.epoch},
                        {"split", "train"}, {"loss", r.train_loss}}.dump()
                << "\n"
                << json{{"model", kind}, {"size", size}, {"epoch", r.epoch},
                        {"split", "valid"}, {"loss", r.valid_loss}}.dump()
                << "\n";
    metrics_log.flush();
    note("  " + kind + " size " + std::to_string(size) + " epoch " +
         std::to_string(r.epoch) + " train " + format_number(r.train_loss) + " valid " +
         format_number(r.valid_loss));
  };

  EvalReport report;
  report.granularity = cfg.granularity;
  json diag = {{"granularity", std::string(granularity_name(cfg.granularity))},
               {"training", json::array()},
               {"bench", json::array()},
               {"fillers", json::array()}};

  for (size_t size : cfg.sizes) {
    std::map<std::string, TrainedModel> models;
    std::vector<std::string> kinds = {kJointKind};
    if (cfg.train_dedicated) {
      kinds.push_back(kDedicatedDisfKind);
      kinds.push_back(kDedicatedPuncKind);
    }
    for (const auto& kind : kinds) {
      note("training " + kind + " at size " + std::to_string(size));
      TrainedModel tm = train_model_kind(cfg, data, kind, size, log);
      if (tm.checkpoint) {
        save_checkpoint(*tm.checkpoint,
                        root / "models" / (kind + "." + std::to_string(size) + ".ckpt"));
      } else {
        note("  training failed: " + tm.error);
      }
      diag["training"].push_back({{"model", kind},
                                  {"size", size},
                                  {"status", tm.checkpoint ? "ok" : "failed"},
                                  {"error", tm.error},
                                  {"best_epoch", tm.best_epoch},
                                  {"epochs", tm.trace.size()},
                                  {"seconds", tm.train_seconds}});
      models.emplace(kind, std::move(tm));
    }

    std::map<std::string, std::unique_ptr<Converter>> converters;
    for (const auto& [kind, tm] : models) {
      if (tm.checkpoint) converters[kind] = std::make_unique<Converter>(to_model(*tm.checkpoint));
    }
    auto params_of = [&](const std::string& kind) -> size_t {
      auto it = models.find(kind);
      if (it == models.end() || !it->second.checkpoint) return 0;
      return it->second.checkpoint->params.parameter_count();
    };

    const fs::path out_dir = root / "outputs" / std::to_string(size);
    fs::create_directories(out_dir);
    for (const RowSpec& spec : report_layout()) {
      const Dataset& test = test_set_for(data.test, spec.decode_mode);
      const auto sources = sources_of(test);
      ReportRow row;
      row.model_kind = spec.model_kind;
      row.decode_mode = spec.decode_mode;
      row.dataset_size = size;
      std::vector<std::string> hyps;

      const Converter* primary = nullptr;
      const Converter* secondary = nullptr;
      DecodeMode mode = DecodeMode::kPlain;
      bool trained_kind_missing = false;
      bool failed = false;
      auto need = [&](const std::string& kind) -> const Converter* {
        if (!models.count(kind)) {
          trained_kind_missing = true;
          return nullptr;
        }
        auto it = converters.find(kind);
        if (it == converters.end()) {
          failed = true;
          return nullptr;
        }
        return it->second.get();
      };
      if (spec.model_kind == kIdentityKind) {
        hyps = sources;
      } else if (spec.model_kind == kPairKind) {
        primary = need(kDedicatedDisfKind);
        secondary = need(kDedicatedPuncKind);
        mode = parse_decode_mode(spec.decode_mode);
        row.params = params_of(kDedicatedDisfKind) + params_of(kDedicatedPuncKind);
      } else {
        primary = need(spec.model_kind);
        mode = spec.model_kind == kJointKind ? parse_decode_mode(spec.decode_mode)
                                             : DecodeMode::kPlain;
        row.params = params_of(spec.model_kind);
      }

      if (trained_kind_missing || failed) {
        const bool skipped = trained_kind_missing;
        row = ReportRow{spec.model_kind, spec.decode_mode, size, {}, 0.0, 0.0, 0.0,
                        row.params, skipped ? "skipped" : "failed"};
        report.rows.push_back(row);
        continue;
      }

      double wallclock = 0.0, passes = 0.0;
      int64_t unfinished = 0;
      if (primary) {
        std::vector<const Converter*> counted = {primary};
        if (secondary) counted.push_back(secondary);
        int64_t unfinished_before = 0;
        for (const Converter* c : counted) unfinished_before += c->unfinished();
        const TextConverter fn = make_text_converter(*primary, secondary, mode, cfg.decode);
        const bool benched = test.task == Task::kJoint;
        note("decoding " + spec.model_kind + " " + spec.decode_mode + " at size " +
             std::to_string(size));
        BenchRecord rec = bench_decode(fn, sources, counted,
                                       benched ? cfg.bench_repetitions : 1,
                                       spec.decode_mode);
        for (const Converter* c : counted) unfinished += c->unfinished();
        unfinished -= unfinished_before;
        hyps = std::move(rec.outputs);
        wallclock = rec.median_s;
        passes = sources.empty() ? 0.0
                                 : static_cast<double>(rec.passes) /
                                       static_cast<double>(sources.size());
        if (benched) {
          diag["bench"].push_back({{"model", spec.model_kind},
                                   {"mode", spec.decode_mode},
                                   {"size", size},
                                   {"runs_s", rec.runs_s},
                                   {"median_s", rec.median_s},
                                   {"per_sentence_s", rec.per_sentence_s},
                                   {"passes", rec.passes},
                                   {"passes_stable", rec.passes_stable},
                                   {"outputs_stable", rec.outputs_stable}});
        }
      }
      write_lines(out_dir / (spec.model_kind + "." + spec.decode_mode + ".txt"), hyps);

      ReportRow scored = score_row(test, hyps, cfg.granularity);
      row.scores = scored.scores;
      row.exact_match = scored.exact_match;
      row.wallclock_s = wallclock;
      row.passes = passes;
      report.rows.push_back(row);

      Diagnostic d{spec.model_kind, spec.decode_mode, size, {}, unfinished};
      if (removes_fillers(spec.decode_mode)) {
        std::vector<std::string> refs;
        for (const auto& p : test.pairs) refs.push_back(p.target);
        d.fillers = filler_deletion_f1(sources, refs, hyps, cfg.corpus.filler_inventory);
        diag["fillers"].push_back({{"model", d.model_kind},
                                   {"mode", d.decode_mode},
                                   {"size", size},
                                   {"precision", d.fillers.precision},
                                   {"recall", d.fillers.recall},
                                   {"f1", d.fillers.f1}});
      }
      report.diagnostics.push_back(d);
    }
  }

  diag["unfinished"] = json::array();
  for (const auto& d : report.diagnostics) {
    diag["unfinished"].push_back({{"model", d.model_kind},
                                  {"mode", d.decode_mode},
                                  {"size", d.dataset_size},
                                  {"count", d.unfinished}});
  }
  diag["peak_rss_kib"] = peak_rss_kib();
  write_text(root / "diagnostics.json", diag.dump(2) + "\n");
  write_text(root / "report.md", render_report(report, ReportFormat::kMarkdown));
  write_text(root / "report.csv", render_report(report, ReportFormat::kCsv));
  write_text(root / "report.stable.csv",
             render_report(report, ReportFormat::kCsv, /*timing=*/false));
  return report;
}

}  // namespace switchconv
