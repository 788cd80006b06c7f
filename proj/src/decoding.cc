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

#include "switchconv/decoding.h"

#include <algorithm>
#include <chrono>
#include <limits>
#include <tuple>

#include "switchconv/errors.h"

namespace switchconv {

void DecodeConfig::validate() const {
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  if (max_len < 1) throw ConfigError("decode max_len must be >= 1");
}

template <typename T>
Hypothesis beam_search(const IncrementalDecoder<T>& decoder,
                       std::span<const TokenId> source, const DecodeConfig& dc) {
  using State = typename IncrementalDecoder<T>::State;
  dc.validate();
  const ModelConfig& cfg = decoder.config();
  const auto memory = decoder.encode(source);
  const TokenSequence prefix = build_decoder_input(dc.switches, {}, cfg.max_len);
  const int max_steps =
      std::min(dc.max_len, cfg.max_len - prefix_length(dc.switches));

  struct Live {
    TokenSequence ids;
    double logprob = 0.0;
    State state;
    Eigen::Matrix<T, 1, Eigen::Dynamic> next;
  };
  std::vector<Live> live(1);
  live[0].state = decoder.initial_state();
  {
    State* s = &live[0].state;
    Matrix<T> lp;
    for (TokenId tok : prefix) lp = decoder.step(memory, std::span(&s, 1), std::span(&tok, 1));
    live[0].next = lp.row(0);
  }

  std::vector<Hypothesis> finished;
  const int vocab = cfg.vocab_size;
  using Candidate = std::tuple<double, int, TokenId>;
  std::vector<Candidate> candidates;
  for (int step = 1; step <= max_steps && !live.empty(); ++step) {
    const int width = dc.beam_size - static_cast<int>(finished.size());
    candidates.clear();
    for (int h = 0; h < static_cast<int>(live.size()); ++h) {
      for (TokenId v = 0; v < vocab; ++v) {
        if (!is_output_token(v)) continue;
        candidates.emplace_back(live[h].logprob + static_cast<double>(live[h].next(v)), h, v);
      }
    }
    const auto better = [](const Candidate& a, const Candidate& b) {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
      if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
      return std::get<2>(a) < std::get<2>(b);
    };
    const size_t keep = std::min(candidates.size(), static_cast<size_t>(width));
    std::partial_sort(candidates.begin(), candidates.begin() + keep,
                      candidates.end(), better);
    candidates.resize(keep);

    std::vector<int> uses(live.size(), 0);
    for (const auto& [score, h, v] : candidates) {
      if (v != kEos) ++uses[h];
    }
    std::vector<Live> next_live;
    std::vector<TokenId> fed;
    for (const auto& [score, h, v] : candidates) {
      Live& parent = live[h];
      TokenSequence ids = parent.ids;
      ids.push_back(v);
      if (v == kEos) {
        finished.push_back({std::move(ids), score, true});
        continue;
      }
      Live child;
      child.ids = std::move(ids);
      child.logprob = score;
      child.state = --uses[h] == 0 ? std::move(parent.state) : parent.state;
      next_live.push_back(std::move(child));
      fed.push_back(v);
    }
    live = std::move(next_live);
    if (static_cast<int>(finished.size()) >= dc.beam_size || live.empty()) break;
    if (!finished.empty()) {
      double best_finished = -std::numeric_limits<double>::infinity();
      for (const auto& f : finished) best_finished = std::max(best_finished, f.logprob);
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& l : live) best_live = std::max(best_live, l.logprob);
      // Extending a live hypothesis can only lower its score.
      if (best_finished >= best_live) break;
    }
    if (step == max_steps) break;
    std::vector<State*> states;
    for (auto& l : live) states.push_back(&l.state);
    const Matrix<T> lp = decoder.step(memory, states, fed);
    for (size_t i = 0; i < live.size(); ++i) live[i].next = lp.row(i);
  }

  const auto by_score = [](const auto& a, const auto& b) { return a.logprob < b.logprob; };
  if (!finished.empty()) {
    // max_element keeps the first of equal maxima, i.e. the earliest retired.
    auto best = std::max_element(finished.begin(), finished.end(),
                                 [](const Hypothesis& a, const Hypothesis& b) {
                                   return a.logprob < b.logprob;
                                 });
    return *best;
  }
  auto best = std::max_element(live.begin(), live.end(), by_score);
  return {best->ids, best->logprob, false};
}

template Hypothesis beam_search<float>(const IncrementalDecoder<float>&,
                                       std::span<const TokenId>, const DecodeConfig&);
template Hypothesis beam_search<double>(const IncrementalDecoder<double>&,
                                        std::span<const TokenId>, const DecodeConfig&);

Converter::Converter(std::shared_ptr<const Model> model)
    : model_(std::move(model)), decoder_(model_->params, model_->config) {}

Hypothesis Converter::search(std::span<const TokenId> source,
                             const DecodeConfig& dc) const {
  ++passes_;
  Hypothesis h = beam_search(decoder_, source, dc);
  if (!h.finished) ++unfinished_;
  return h;
}

std::string Converter::convert(std::string_view text, const DecodeConfig& dc) const {
  const TokenSequence ids = model_->vocab.encode(text);
  if (ids.empty()) return {};
  return model_->vocab.decode(search(ids, dc).ids);
}

std::string decode_single(const Converter& converter, std::string_view source,
                          Task task, DecodeConfig dc) {
  if (task == Task::kJoint) throw Error("decode_single: joint is not a single task");
  dc.switches = switch_for_task(task);
  return converter.convert(source, dc);
}

std::string cascade(const TextConverter& first, const TextConverter& second,
                    std::string_view source) {
  return second(first(source));
}

std::string joint_decode(const Converter& converter, std::string_view source,
                         DecodeConfig dc) {
  dc.switches = SwitchSetting{true, true};
  return converter.convert(source, dc);
}

std::string_view decode_mode_name(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::kDisf: return "disf";
    case DecodeMode::kPunc: return "punc";
    case DecodeMode::kSame: return "same";
    case DecodeMode::kJoint: return "joint";
    case DecodeMode::kCascadeForward: return "cascade-fwd";
    case DecodeMode::kCascadeBackward: return "cascade-bwd";
    case DecodeMode::kPlain: return "plain";
  }
  return "plain";
}

DecodeMode parse_decode_mode(std::string_view name) {
  for (DecodeMode m : {DecodeMode::kDisf, DecodeMode::kPunc, DecodeMode::kSame,
                       DecodeMode::kJoint, DecodeMode::kCascadeForward,
                       DecodeMode::kCascadeBackward, DecodeMode::kPlain}) {
    if (decode_mode_name(m) == name) return m;
  }
  throw ConfigError("unknown decode mode '" + std::string(name) + "'");
}

TextConverter make_text_converter(const Converter& primary,
                                  const Converter* secondary, DecodeMode mode,
                                  const DecodeConfig& base) {
  auto with = [&base](const Converter& c, std::optional<SwitchSetting> s) -> TextConverter {
    DecodeConfig dc = base;
    dc.switches = s;
    return [&c, dc](std::string_view text) { return c.convert(text, dc); };
  };
  switch (mode) {
    case DecodeMode::kDisf: return with(primary, switch_for_task(Task::kDisf));
    case DecodeMode::kPunc: return with(primary, switch_for_task(Task::kPunc));
    case DecodeMode::kSame: return with(primary, switch_for_task(Task::kSame));
    case DecodeMode::kJoint: return with(primary, switch_for_task(Task::kJoint));
    case DecodeMode::kPlain: return with(primary, std::nullopt);
    case DecodeMode::kCascadeForward:
    case DecodeMode::kCascadeBackward: {
      TextConverter disf = secondary ? with(primary, std::nullopt)
                                     : with(primary, switch_for_task(Task::kDisf));
      TextConverter punc = secondary ? with(*secondary, std::nullopt)
                                     : with(primary, switch_for_task(Task::kPunc));
      if (mode == DecodeMode::kCascadeBackward) std::swap(disf, punc);
      return [disf, punc](std::string_view text) { return cascade(disf, punc, text); };
    }
  }
  throw ConfigError("unhandled decode mode");
}

DecodeRun decode_lines(const TextConverter& fn,
                       std::span<const std::string> inputs,
                       std::span<const Converter* const> counted) {
  DecodeRun run;
  int64_t before = 0;
  for (const Converter* c : counted) before += c->passes();
  run.outputs.reserve(inputs.size());
  const auto start = std::chrono::steady_clock::now();
  for (const auto& line : inputs) run.outputs.push_back(fn(line));
  run.wallclock_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  for (const Converter* c : counted) run.passes += c->passes();
  run.passes -= before;
  return run;
}

}  // namespace switchconv
