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

#include "switchconv/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "switchconv/errors.h"

namespace switchconv {
namespace {

using nlohmann::json;

// Reads typed fields from one JSON object and rejects leftovers.
class Reader {
 public:
  Reader(const json& j, std::string scope) : j_(j), scope_(std::move(scope)) {
    if (!j.is_object()) throw ConfigError(scope_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(scope_ + "." + key + ": wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(scope_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string scope_;
  std::set<std::string> seen_;
};

}  // namespace

json to_json(const CorpusConfig& c) {
  return {{"lexicon", c.lexicon},
          {"conjunctions", c.conjunctions},
          {"filler_inventory", c.filler_inventory},
          {"p_filler", c.p_filler},
          {"p_repeat", c.p_repeat},
          {"p_comma", c.p_comma},
          {"p_clause", c.p_clause},
          {"min_words", c.min_words},
          {"max_words", c.max_words},
          {"seed", c.seed}};
}

json to_json(const ModelConfig& c) {
  return {{"d_model", c.d_model},     {"n_heads", c.n_heads},
          {"enc_layers", c.enc_layers}, {"dec_layers", c.dec_layers},
          {"ffn_dim", c.ffn_dim},     {"dropout", c.dropout},
          {"max_len", c.max_len},     {"vocab_size", c.vocab_size}};
}

json to_json(const TrainConfig& c) {
  json j = {{"learning_rate", c.learning_rate},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"eps", c.eps},
            {"label_smoothing", c.label_smoothing},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"seed", c.seed},
            {"shuffle", c.shuffle}};
  j["grad_clip_norm"] = c.grad_clip_norm ? json(*c.grad_clip_norm) : json(nullptr);
  return j;
}

json to_json(const DecodeConfig& c) {
  return {{"beam_size", c.beam_size}, {"max_len", c.max_len}};
}

json to_json(const ExperimentConfig& c) {
  return {{"corpus", to_json(c.corpus)},
          {"model", to_json(c.model)},
          {"train", to_json(c.train)},
          {"sizes", c.sizes},
          {"valid_size", c.valid_size},
          {"test_size", c.test_size},
          {"decode", to_json(c.decode)},
          {"granularity", std::string(granularity_name(c.granularity))},
          {"bench_repetitions", c.bench_repetitions},
          {"train_dedicated", c.train_dedicated},
          {"output_dir", c.output_dir.string()},
          {"seed", c.seed}};
}

CorpusConfig corpus_config_from_json(const json& j) {
  CorpusConfig c = CorpusConfig::desk_default();
  Reader r(j, "corpus");
  r.get("lexicon", c.lexicon);
  r.get("conjunctions", c.conjunctions);
  r.get("filler_inventory", c.filler_inventory);
  r.get("p_filler", c.p_filler);
  r.get("p_repeat", c.p_repeat);
  r.get("p_comma", c.p_comma);
  r.get("p_clause", c.p_clause);
  r.get("min_words", c.min_words);
  r.get("max_words", c.max_words);
  r.get("seed", c.seed);
  r.finish();
  return c;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  Reader r(j, "model");
  r.get("d_model", c.d_model);
  r.get("n_heads", c.n_heads);
  r.get("enc_layers", c.enc_layers);
  r.get("dec_layers", c.dec_layers);
  r.get("ffn_dim", c.ffn_dim);
  r.get("dropout", c.dropout);
  r.get("max_len", c.max_len);
  r.get("vocab_size", c.vocab_size);
  r.finish();
  return c;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  Reader r(j, "train");
  r.get("learning_rate", c.learning_rate);
  r.get("beta1", c.beta1);
  r.get("beta2", c.beta2);
  r.get("eps", c.eps);
  r.get("label_smoothing", c.label_smoothing);
  r.get("batch_size", c.batch_size);
  r.get("max_epochs", c.max_epochs);
  r.get("seed", c.seed);
  r.get("shuffle", c.shuffle);
  if (const json* clip = r.child("grad_clip_norm")) {
    if (clip->is_null()) {
      c.grad_clip_norm.reset();
    } else if (clip->is_number()) {
      c.grad_clip_norm = clip->get<double>();
    } else {
      throw ConfigError("train.grad_clip_norm: wrong type");
    }
  }
  r.finish();
  return c;
}

DecodeConfig decode_config_from_json(const json& j) {
  DecodeConfig c;
  Reader r(j, "decode");
  r.get("beam_size", c.beam_size);
  r.get("max_len", c.max_len);
  r.finish();
  return c;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  Reader r(j, "config");
  r.get("seed", c.seed);
  c.corpus.seed = c.seed;
  c.train.seed = c.seed;
  if (const json* x = r.child("corpus")) {
    c.corpus = corpus_config_from_json(*x);
    if (!x->contains("seed")) c.corpus.seed = c.seed;
  }
  if (const json* x = r.child("model")) c.model = model_config_from_json(*x);
  if (const json* x = r.child("train")) {
    c.train = train_config_from_json(*x);
    if (!x->contains("seed")) c.train.seed = c.seed;
  }
  if (const json* x = r.child("decode")) c.decode = decode_config_from_json(*x);
  r.get("sizes", c.sizes);
  r.get("valid_size", c.valid_size);
  r.get("test_size", c.test_size);
  std::string granularity(granularity_name(c.granularity));
  r.get("granularity", granularity);
  c.granularity = parse_granularity(granularity);
  r.get("bench_repetitions", c.bench_repetitions);
  r.get("train_dedicated", c.train_dedicated);
  std::string out = c.output_dir.string();
  r.get("output_dir", out);
  c.output_dir = out;
  r.finish();
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  corpus.validate();
  train.validate();
  decode.validate();
  ModelConfig probe = model;
  if (probe.vocab_size <= 0) probe.vocab_size = kNumReserved + 1;
  probe.validate();
  if (sizes.empty()) throw ConfigError("sizes must not be empty");
  for (size_t s : sizes) {
    if (s == 0) throw ConfigError("sizes must be positive");
  }
  if (valid_size == 0) throw ConfigError("valid_size must be positive");
  if (test_size == 0) throw ConfigError("test_size must be positive");
  if (bench_repetitions < 1) throw ConfigError("bench_repetitions must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

json parse_json_text(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Convert the byte offset into a line and column.
    size_t line = 1, col = 1;
    const size_t end = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": " + msg);
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return experiment_config_from_json(parse_json_text(buf.str(), path.string()));
}

void save_experiment_config(const ExperimentConfig& cfg,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_json(cfg).dump(2) << "\n";
}

void apply_override(json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &j;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError("override '" + key + "' crosses a non-object");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw ConfigError("override '" + key + "' crosses a non-object");
  (*node)[parts.back()] = value;
}

}  // namespace switchconv
