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

#include <map>

#include "doctest.h"
#include "switchconv/decoding.h"
#include "switchconv/errors.h"
#include "test_util.h"

namespace switchconv {
namespace {

using testing::random_chars;
using testing::random_params;
using testing::tiny_config;

// Greedy argmax decoding by full recomputation at every step.
TokenSequence greedy_oracle(const ModelParameters<float>& p, const ModelConfig& cfg,
                            const TokenSequence& src, const std::optional<SwitchSetting>& s,
                            int max_len) {
  TokenSequence out;
  for (int step = 0; step < max_len; ++step) {
    const std::vector<TokenSequence> srcs = {src};
    const std::vector<TokenSequence> dec = {build_decoder_input(s, out, cfg.max_len)};
    const auto l = forward(p, cfg, srcs, dec, false);
    const int t = l.length - 1;
    TokenId best = -1;
    float best_v = 0;
    for (int v = 0; v < l.vocab; ++v) {
      if (!is_output_token(v)) continue;
      if (best < 0 || l.at(0, t, v) > best_v) {
        best = v;
        best_v = l.at(0, t, v);
      }
    }
    out.push_back(best);
    if (best == kEos) break;
  }
  return out;
}

std::shared_ptr<const Model> small_model(uint64_t seed) {
  auto tokens = Vocabulary().tokens();
  for (const char* c : {" ", ",", ".", "a", "b", "c", "h", "t", "u"}) tokens.push_back(c);
  auto vocab = Vocabulary::from_tokens(tokens);
  auto cfg = tiny_config(vocab.size(), 16);
  cfg.max_len = 40;
  return std::make_shared<const Model>(Model{cfg, vocab, random_params<float>(cfg, seed, 0.3)});
}

}  // namespace

TEST_CASE("beam size one equals greedy decoding on random models") {
  Rng rng(1);
  for (uint64_t seed = 0; seed < 100; ++seed) {
    auto cfg = tiny_config(12, 8);
    cfg.max_len = 24;
    const auto p = random_params<float>(cfg, seed, 0.5);
    IncrementalDecoder<float> dec(p, cfg);
    const TokenSequence src = random_chars(rng, cfg.vocab_size, 1, 8);
    const std::optional<SwitchSetting> s =
        seed % 2 ? std::optional(SwitchSetting{seed % 3 == 0, seed % 5 == 0}) : std::nullopt;
    DecodeConfig dc;
    dc.beam_size = 1;
    dc.max_len = 12;
    dc.switches = s;
    const Hypothesis h = beam_search(dec, src, dc);
    CHECK(h.ids == greedy_oracle(p, cfg, src, s, dc.max_len));
  }
}

TEST_CASE("beam hypotheses are consistent and no worse than greedy") {
  Rng rng(2);
  int better = 0;
  for (uint64_t seed = 0; seed < 40; ++seed) {
    auto cfg = tiny_config(12, 8);
    cfg.max_len = 24;
    const auto p = random_params<float>(cfg, 100 + seed, 0.5);
    const auto pd = p.cast<double>();
    IncrementalDecoder<float> dec(p, cfg);
    const TokenSequence src = random_chars(rng, cfg.vocab_size, 1, 8);
    DecodeConfig dc;
    dc.max_len = 12;
    dc.switches = SwitchSetting{true, true};
    dc.beam_size = 1;
    const Hypothesis greedy = beam_search(dec, src, dc);
    dc.beam_size = 4;
    const Hypothesis beam = beam_search(dec, src, dc);
    if (greedy.finished) {
      CHECK(beam.finished);
      CHECK(beam.logprob >= greedy.logprob - 1e-5);
      better += beam.logprob > greedy.logprob + 1e-5;
    }
    if (beam.finished) {
      REQUIRE(!beam.ids.empty());
      CHECK(beam.ids.back() == kEos);
      CHECK(beam.logprob == doctest::Approx(logprob_of(pd, cfg, src, dc.switches, beam.ids))
                                .epsilon(1e-4));
    }
    for (TokenId id : beam.ids) CHECK(is_output_token(id));
    CHECK(beam.ids.size() <= static_cast<size_t>(dc.max_len));
  }
  MESSAGE("beam strictly better than greedy on " << better << " of 40 sources");
}

TEST_CASE("degenerate output distributions") {
  auto cfg = tiny_config(12, 8);
  auto p = random_params<float>(cfg, 3);
  p.get("out.w").setZero();
  p.get("out.b").setZero();
  p.get("out.b")(0, kEos) = 100.0f;
  IncrementalDecoder<float> eos_dec(p, cfg);
  const TokenSequence src = {8, 9, 10};
  for (int beam : {1, 2, 4}) {
    DecodeConfig dc;
    dc.beam_size = beam;
    const Hypothesis h = beam_search(eos_dec, src, dc);
    CHECK(h.finished);
    CHECK(h.ids == TokenSequence{kEos});
  }
  // Mass on a character: the search stops at max_len and flags the result.
  p.get("out.b")(0, kEos) = 0.0f;
  p.get("out.b")(0, 9) = 100.0f;
  IncrementalDecoder<float> char_dec(p, cfg);
  DecodeConfig greedy;
  greedy.beam_size = 1;
  greedy.max_len = 7;
  const Hypothesis h = beam_search(char_dec, src, greedy);
  CHECK_FALSE(h.finished);
  CHECK(h.ids == TokenSequence(7, 9));
  // A wider beam retires an EOS candidate, which outranks any unfinished one.
  DecodeConfig wide = greedy;
  wide.beam_size = 3;
  const Hypothesis w = beam_search(char_dec, src, wide);
  CHECK(w.finished);
  CHECK(w.ids.back() == kEos);
  CHECK(w.logprob < -99.0);
  // Reserved tokens are never emitted even when they dominate.
  p.get("out.b")(0, 9) = 0.0f;
  p.get("out.b")(0, kDisfOn) = 100.0f;
  p.get("out.b")(0, kEos) = 1.0f;
  IncrementalDecoder<float> reserved_dec(p, cfg);
  DecodeConfig dc;
  CHECK(beam_search(reserved_dec, src, dc).ids == TokenSequence{kEos});
}

TEST_CASE("decode config validation") {
  DecodeConfig dc;
  dc.beam_size = 0;
  CHECK_THROWS_AS(dc.validate(), ConfigError);
  dc.beam_size = 1;
  dc.max_len = 0;
  CHECK_THROWS_AS(dc.validate(), ConfigError);
}

TEST_CASE("single, joint and cascade entry points") {
  const auto model = small_model(5);
  Converter conv(model);
  DecodeConfig dc;
  dc.max_len = 20;
  const std::vector<std::string> inputs = {"uh the cat", "a b c", "t", "hat bat", "cab"};
  for (const auto& x : inputs) {
    const auto disf = make_text_converter(conv, nullptr, DecodeMode::kDisf, dc);
    CHECK(disf(x) == decode_single(conv, x, Task::kDisf, dc));
    DecodeConfig on_off = dc;
    on_off.switches = SwitchSetting{true, false};
    CHECK(conv.convert(x, on_off) == decode_single(conv, x, Task::kDisf, dc));
    const auto joint = make_text_converter(conv, nullptr, DecodeMode::kJoint, dc);
    CHECK(joint(x) == joint_decode(conv, x, dc));
    const auto fwd = make_text_converter(conv, nullptr, DecodeMode::kCascadeForward, dc);
    const auto bwd = make_text_converter(conv, nullptr, DecodeMode::kCascadeBackward, dc);
    CHECK(fwd(x) == decode_single(conv, decode_single(conv, x, Task::kDisf, dc), Task::kPunc, dc));
    CHECK(bwd(x) == decode_single(conv, decode_single(conv, x, Task::kPunc, dc), Task::kDisf, dc));
  }
  CHECK_THROWS_AS(decode_single(conv, "a", Task::kJoint, dc), Error);
}

TEST_CASE("dedicated pair cascade uses both models without prefixes") {
  const auto disf_model = small_model(6);
  const auto punc_model = small_model(7);
  Converter disf(disf_model), punc(punc_model);
  DecodeConfig dc;
  dc.max_len = 20;
  const auto fwd = make_text_converter(disf, &punc, DecodeMode::kCascadeForward, dc);
  const auto bwd = make_text_converter(disf, &punc, DecodeMode::kCascadeBackward, dc);
  DecodeConfig plain = dc;
  plain.switches.reset();
  for (const std::string x : {"a cat", "bat hut"}) {
    CHECK(fwd(x) == punc.convert(disf.convert(x, plain), plain));
    CHECK(bwd(x) == disf.convert(punc.convert(x, plain), plain));
  }
}

TEST_CASE("cascade composition") {
  const TextConverter identity = [](std::string_view s) { return std::string(s); };
  CHECK(cascade(identity, identity, "uh the cat") == "uh the cat");

  const auto cfg = CorpusConfig::desk_default();
  const auto vars = generate_variants(cfg, 200);
  std::map<std::string, std::string> punc_oracle;
  for (const auto& v : vars) {
    punc_oracle[v.spoken] = v.punc_target;
    punc_oracle[v.disf_target] = v.joint_target;
  }
  const TextConverter disf = [&](std::string_view s) {
    return remove_disfluencies(s, cfg.filler_inventory);
  };
  const TextConverter punc = [&](std::string_view s) { return punc_oracle.at(std::string(s)); };
  for (const auto& v : vars) CHECK(cascade(disf, punc, v.spoken) == v.joint_target);
}

TEST_CASE("decoding passes are counted per beam search") {
  const auto model = small_model(8);
  Converter conv(model);
  DecodeConfig dc;
  dc.max_len = 10;
  const std::vector<std::string> inputs = {"a", "b c", "cat", "hat"};
  const std::vector<const Converter*> counted = {&conv};
  const auto joint = make_text_converter(conv, nullptr, DecodeMode::kJoint, dc);
  const auto fwd = make_text_converter(conv, nullptr, DecodeMode::kCascadeForward, dc);
  const DecodeRun j = decode_lines(joint, inputs, counted);
  const DecodeRun c = decode_lines(fwd, inputs, counted);
  CHECK(j.passes == 4);
  CHECK(c.passes == 8);
  CHECK(j.outputs.size() == 4);
  conv.reset_passes();
  CHECK(conv.convert("", dc).empty());
  CHECK(conv.passes() == 0);
}

TEST_CASE("decode mode names") {
  for (DecodeMode m : {DecodeMode::kDisf, DecodeMode::kPunc, DecodeMode::kSame,
                       DecodeMode::kJoint, DecodeMode::kCascadeForward,
                       DecodeMode::kCascadeBackward, DecodeMode::kPlain}) {
    CHECK(parse_decode_mode(decode_mode_name(m)) == m);
  }
  CHECK_THROWS_AS(parse_decode_mode("sideways"), ConfigError);
}

}  // namespace switchconv
