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

#ifndef SWITCHCONV_CHECKPOINT_H_
#define SWITCHCONV_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "switchconv/model.h"
#include "switchconv/training.h"
#include "switchconv/vocab.h"

namespace switchconv {

inline constexpr uint32_t kCheckpointVersion = 1;

// Model kinds stored in checkpoints and reports.
inline constexpr const char* kJointKind = "joint";
inline constexpr const char* kDedicatedDisfKind = "dedicated-disf";
inline constexpr const char* kDedicatedPuncKind = "dedicated-punc";

struct Checkpoint {
  std::string model_kind = kJointKind;
  ModelConfig config;
  Vocabulary vocab;
  ModelParameters<float> params;
  std::optional<OptimizerState<float>> optimizer;
  // Free-form snapshot of the producing experiment config.
  nlohmann::json experiment = nlohmann::json::object();
  uint32_t version = kCheckpointVersion;

  // Switch prefixes are used by joint models only.
  bool uses_switches() const { return model_kind == kJointKind; }
};

// Layout: "SWCK", u32 version, u64 header length, JSON header, raw
// little-endian float32 tensors in header order, u32 CRC-32 of all
// preceding bytes.
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);

// Throws VersionError, IntegrityError (bad magic, truncation, checksum) or
// ShapeError; nothing is returned on failure. With `expected_vocab`, a
// vocabulary of a different size is a ShapeError.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const Vocabulary* expected_vocab = nullptr);

}  // namespace switchconv

#endif  // SWITCHCONV_CHECKPOINT_H_
