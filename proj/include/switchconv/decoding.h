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

#ifndef SWITCHCONV_DECODING_H_
#define SWITCHCONV_DECODING_H_

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "switchconv/inference.h"
#include "switchconv/model.h"
#include "switchconv/vocab.h"

namespace switchconv {

struct Hypothesis {
  TokenSequence ids;  // generated tokens, EOS last when finished
  double logprob = 0.0;
  bool finished = false;
};

struct DecodeConfig {
  int beam_size = 4;
  int max_len = 160;
  // Unset for dedicated models trained without switch prefixes.
  std::optional<SwitchSetting> switches;

  void validate() const;
};

// Tokens a hypothesis may be extended with: EOS and every character id.
inline bool is_output_token(TokenId id) { return id == kEos || !is_reserved(id); }

// Beam search over next-token log-probabilities without length
// normalization. Hypotheses ending in EOS retire; the search ends once
// beam_size of them have retired, no live hypothesis can still overtake the
// best retired one, or max_len tokens were generated. Returns the best
// finished hypothesis, or the best live one flagged unfinished.
template <typename T>
Hypothesis beam_search(const IncrementalDecoder<T>& decoder,
                       std::span<const TokenId> source, const DecodeConfig& dc);

// A trained model bundled with its vocabulary.
struct Model {
  ModelConfig config;
  Vocabulary vocab;
  ModelParameters<float> params;
};

// Text-to-text conversion with one model. Every beam search run counts as
// one decoding pass.
class Converter {
 public:
  explicit Converter(std::shared_ptr<const Model> model);

  Hypothesis search(std::span<const TokenId> source, const DecodeConfig& dc) const;
  std::string convert(std::string_view text, const DecodeConfig& dc) const;

  const Model& model() const { return *model_; }
  int64_t passes() const { return passes_.load(); }
  void reset_passes() { passes_.store(0); }
  // Searches that hit max_len without emitting EOS.
  int64_t unfinished() const { return unfinished_.load(); }

 private:
  std::shared_ptr<const Model> model_;
  IncrementalDecoder<float> decoder_;
  mutable std::atomic<int64_t> passes_{0};
  mutable std::atomic<int64_t> unfinished_{0};
};

using TextConverter = std::function<std::string(std::string_view)>;

// Runs `converter` with the switch setting of `task` (disf, punc or same).
std::string decode_single(const Converter& converter, std::string_view source,
                          Task task, DecodeConfig dc);

// second(first(source)).
std::string cascade(const TextConverter& first, const TextConverter& second,
                    std::string_view source);

// One pass with both switches on.
std::string joint_decode(const Converter& converter, std::string_view source,
                         DecodeConfig dc);

enum class DecodeMode {
  kDisf,            // single task, (on, off)
  kPunc,            // single task, (off, on)
  kSame,            // single task, (off, off)
  kJoint,           // (on, on)
  kCascadeForward,  // disf then punc
  kCascadeBackward, // punc then disf
  kPlain,           // dedicated model, no switches
};

std::string_view decode_mode_name(DecodeMode mode);
DecodeMode parse_decode_mode(std::string_view name);

// Builds the text converter for a decode mode. Single-task and joint modes
// use `primary`; cascades with a null `secondary` reuse `primary` with two
// switch settings, otherwise `primary` performs disfluency deletion and
// `secondary` punctuation restoration, both without switches.
TextConverter make_text_converter(const Converter& primary,
                                  const Converter* secondary, DecodeMode mode,
                                  const DecodeConfig& base);

struct DecodeRun {
  std::vector<std::string> outputs;
  double wallclock_s = 0.0;
  int64_t passes = 0;
};

// Converts every line and records wall-clock time and decoding passes
// counted on the given converters.
DecodeRun decode_lines(const TextConverter& fn,
                       std::span<const std::string> inputs,
                       std::span<const Converter* const> counted);

}  // namespace switchconv

#endif  // SWITCHCONV_DECODING_H_
