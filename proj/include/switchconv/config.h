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

#ifndef SWITCHCONV_CONFIG_H_
#define SWITCHCONV_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "switchconv/corpus.h"
#include "switchconv/decoding.h"
#include "switchconv/metrics.h"
#include "switchconv/model.h"
#include "switchconv/training.h"

namespace switchconv {

struct ExperimentConfig {
  CorpusConfig corpus = CorpusConfig::desk_default();
  // vocab_size is derived from the generated data and ignored on input.
  ModelConfig model;
  TrainConfig train;
  // Per-task training set sizes, one experiment cell each.
  std::vector<size_t> sizes = {1000, 3000, 5000};
  // Per-task validation pairs.
  size_t valid_size = 200;
  // Held-out variants behind every test set.
  size_t test_size = 1000;
  DecodeConfig decode;
  Granularity granularity = Granularity::kWord;
  int bench_repetitions = 3;
  bool train_dedicated = true;
  std::filesystem::path output_dir = "runs/desk";
  // Seeds the corpus and training streams unless those set their own.
  uint64_t seed = 1;

  void validate() const;
};

// Strict JSON mapping: unknown keys and wrong types raise ConfigError.
nlohmann::json to_json(const CorpusConfig& c);
nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const DecodeConfig& c);
nlohmann::json to_json(const ExperimentConfig& c);

CorpusConfig corpus_config_from_json(const nlohmann::json& j);
ModelConfig model_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);
DecodeConfig decode_config_from_json(const nlohmann::json& j);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

// Parses JSON text; syntax errors name `origin`, line and column.
nlohmann::json parse_json_text(std::string_view text, const std::string& origin);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const ExperimentConfig& cfg,
                            const std::filesystem::path& path);

// Applies "a.b.c=value" overrides; the value is parsed as JSON and falls
// back to a plain string.
void apply_override(nlohmann::json& j, std::string_view assignment);

}  // namespace switchconv

#endif  // SWITCHCONV_CONFIG_H_
