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

#ifndef SWITCHCONV_HARNESS_H_
#define SWITCHCONV_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "switchconv/checkpoint.h"
#include "switchconv/config.h"
#include "switchconv/corpus.h"
#include "switchconv/decoding.h"
#include "switchconv/metrics.h"
#include "switchconv/vocab.h"

namespace switchconv {

// All data of one experiment. Training sets are nested across the size
// ladder: the size-s disf set is the first s disf pairs of the largest one.
struct ExperimentData {
  std::vector<size_t> sizes;
  std::vector<TaskDatasets> train;  // parallel to `sizes`
  TaskDatasets valid;
  TestDatasets test;
  Vocabulary vocab;

  const TaskDatasets& train_for(size_t size) const;
};

ExperimentData generate_experiment_data(const ExperimentConfig& cfg);

// data/{train.<size>,valid,test}.<task>.jsonl and data/vocab.tsv.
void write_experiment_data(const ExperimentData& data, const std::filesystem::path& dir);
ExperimentData read_experiment_data(const std::filesystem::path& dir,
                                    std::span<const size_t> sizes);

struct TrainedModel {
  std::string model_kind;
  size_t dataset_size = 0;
  std::optional<Checkpoint> checkpoint;  // empty when training failed
  std::vector<EpochRecord> trace;
  int best_epoch = 0;
  double train_seconds = 0.0;
  std::string error;
};

using EpochLogger =
    std::function<void(const std::string& kind, size_t size, const EpochRecord&)>;

// Trains one model kind (joint, dedicated-disf, dedicated-punc) at one size.
// Divergence is reported through `error` rather than thrown.
TrainedModel train_model_kind(const ExperimentConfig& cfg, const ExperimentData& data,
                              const std::string& kind, size_t size,
                              const EpochLogger& log = {});

std::shared_ptr<const Model> to_model(const Checkpoint& ck);

// One cell of the report.
struct ReportRow {
  std::string model_kind;
  std::string decode_mode;
  size_t dataset_size = 0;
  ScoreTriple scores;
  double exact_match = 0.0;
  double wallclock_s = 0.0;
  double passes = 0.0;  // decoding passes per input sentence
  size_t params = 0;
  std::string status = "ok";  // ok | failed | skipped

  bool operator==(const ReportRow&) const = default;
};

struct RowSpec {
  std::string model_kind;
  std::string decode_mode;
};

// The eleven row kinds evaluated per dataset size: five single-task rows,
// four cascades, the zero-shot joint row and the no-conversion baseline.
std::vector<RowSpec> report_layout();

struct Diagnostic {
  std::string model_kind;
  std::string decode_mode;
  size_t dataset_size = 0;
  DeletionScore fillers;
  int64_t unfinished = 0;
};

struct EvalReport {
  Granularity granularity = Granularity::kWord;
  std::vector<ReportRow> rows;
  std::vector<Diagnostic> diagnostics;

  const ReportRow* find(std::string_view kind, std::string_view mode, size_t size) const;
  const Diagnostic* find_diagnostic(std::string_view kind, std::string_view mode,
                                    size_t size) const;
};

struct BenchRecord {
  std::string mode;
  std::vector<double> runs_s;
  double median_s = 0.0;
  double per_sentence_s = 0.0;
  int64_t passes = 0;  // per repetition
  bool passes_stable = true;
  bool outputs_stable = true;
  std::vector<std::string> outputs;
};

// Warms up on one sentence, then times `repetitions` full runs.
BenchRecord bench_decode(const TextConverter& fn, std::span<const std::string> sources,
                         std::span<const Converter* const> counted, int repetitions,
                         std::string mode);

// Scores `hypotheses` against a test set into a report row.
ReportRow score_row(const Dataset& test, std::span<const std::string> hypotheses,
                    Granularity g);

enum class ReportFormat { kMarkdown, kCsv };

// With `timing` false the wall-clock column is left blank, giving a
// rendering that is a pure function of the config and seed.
std::string render_report(const EvalReport& report, ReportFormat format,
                          bool timing = true);
EvalReport parse_report_csv(std::string_view text);

// Runs the full pipeline and writes every artifact under cfg.output_dir.
EvalReport run_experiment(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

// Peak resident set size of this process in KiB.
int64_t peak_rss_kib();

// Raises glibc's mmap and trim thresholds so per-step tensor buffers are
// recycled instead of being returned to the kernel. No-op elsewhere.
void tune_allocator();

}  // namespace switchconv

#endif  // SWITCHCONV_HARNESS_H_
