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

#include "switchconv/model.h"

#include <cmath>

#include "switchconv/errors.h"

namespace switchconv {
namespace {

std::string layer_prefix(const char* stack, int i) {
  return std::string(stack) + "." + std::to_string(i) + ".";
}

void add_attention_shapes(std::vector<TensorShape>& out, const std::string& p,
                          int d) {
  for (const char* proj : {"q", "k", "v", "o"}) {
    out.push_back({p + proj + ".w", d, d});
    out.push_back({p + proj + ".b", 1, d});
  }
}

void add_norm_shapes(std::vector<TensorShape>& out, const std::string& p,
                     int d) {
  out.push_back({p + "g", 1, d});
  out.push_back({p + "b", 1, d});
}

void add_ffn_shapes(std::vector<TensorShape>& out, const std::string& p, int d,
                    int f) {
  out.push_back({p + "in.w", d, f});
  out.push_back({p + "in.b", 1, f});
  out.push_back({p + "out.w", f, d});
  out.push_back({p + "out.b", 1, d});
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

template <typename T>
using Var = typename Tape<T>::Var;

template <typename T>
Var<T> attention_block(Tape<T>& tape, const ParameterVars<T>& p,
                       const std::string& prefix, Var<T> query_in,
                       Var<T> memory, const PackedLayout& q_layout,
                       const PackedLayout& k_layout, int heads, bool causal) {
  auto q = tape.linear(query_in, p[prefix + "q.w"], p[prefix + "q.b"]);
  auto k = tape.linear(memory, p[prefix + "k.w"], p[prefix + "k.b"]);
  auto v = tape.linear(memory, p[prefix + "v.w"], p[prefix + "v.b"]);
  auto att = tape.attention(q, k, v, q_layout, k_layout, heads, causal);
  return tape.linear(att, p[prefix + "o.w"], p[prefix + "o.b"]);
}

template <typename T>
Var<T> ffn_block(Tape<T>& tape, const ParameterVars<T>& p,
                 const std::string& prefix, Var<T> x) {
  auto h = tape.relu(tape.linear(x, p[prefix + "in.w"], p[prefix + "in.b"]));
  return tape.linear(h, p[prefix + "out.w"], p[prefix + "out.b"]);
}

template <typename T>
Var<T> residual_norm(Tape<T>& tape, const ParameterVars<T>& p,
                     const std::string& prefix, Var<T> x, Var<T> sub,
                     T dropout, bool train, Rng* rng) {
  if (train) sub = tape.dropout(sub, dropout, *rng);
  return tape.layer_norm(tape.add(x, sub), p[prefix + "g"], p[prefix + "b"]);
}

template <typename T>
Var<T> embed(Tape<T>& tape, const ParameterVars<T>& p, const ModelConfig& cfg,
             std::span<const int> ids, const PackedLayout& layout, bool train,
             Rng* rng) {
  static thread_local Matrix<T> table;
  if (table.rows() != cfg.max_len || table.cols() != cfg.d_model) {
    table = positional_encoding<T>(cfg.max_len, cfg.d_model);
  }
  Matrix<T> pe(layout.rows(), cfg.d_model);
  for (int b = 0; b < layout.batch(); ++b) {
    for (int t = 0; t < layout.lengths[b]; ++t) {
      pe.row(layout.offsets[b] + t) = table.row(t);
    }
  }
  auto x = tape.scale(tape.gather_rows(p["embed.token"], ids),
                      std::sqrt(static_cast<T>(cfg.d_model)));
  x = tape.add(x, tape.constant(std::move(pe)));
  if (train) x = tape.dropout(x, static_cast<T>(cfg.dropout), *rng);
  return x;
}

template <typename T>
void check_block(const Tape<T>& tape, Var<T> x, const std::string& name) {
  if (!tape.value(x).allFinite()) {
    throw NumericError("non-finite activation after " + name);
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0) {
    throw ConfigError("model d_model must be a positive multiple of n_heads");
  }
  if (enc_layers < 1 || dec_layers < 1 || ffn_dim < 1) {
    throw ConfigError("model layer counts and ffn_dim must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("model dropout must lie in [0, 1)");
  }
  if (max_len < 3) throw ConfigError("model max_len must be >= 3");
  if (vocab_size <= kNumReserved) {
    throw ConfigError("model vocab_size must exceed the reserved ids");
  }
}

ModelConfig ModelConfig::paper_scale(int vocab_size) {
  ModelConfig c;
  c.d_model = 512;
  c.n_heads = 8;
  c.enc_layers = 4;
  c.dec_layers = 2;
  c.ffn_dim = 2048;
  c.dropout = 0.1;
  c.max_len = 512;
  c.vocab_size = vocab_size;
  return c;
}

ModelConfig ModelConfig::desk(int vocab_size) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  return c;
}

SwitchSetting switch_for_task(Task task) {
  switch (task) {
    case Task::kDisf: return {true, false};
    case Task::kPunc: return {false, true};
    case Task::kSame: return {false, false};
    case Task::kJoint: return {true, true};
  }
  return {};
}

std::string switch_name(const SwitchSetting& s) {
  return std::string(s.disf ? "on" : "off") + "/" + (s.punc ? "on" : "off");
}

std::vector<TensorShape> parameter_shapes(const ModelConfig& cfg) {
  const int d = cfg.d_model, f = cfg.ffn_dim, v = cfg.vocab_size;
  std::vector<TensorShape> out;
  out.push_back({"embed.token", v, d});
  for (int i = 0; i < cfg.enc_layers; ++i) {
    const auto p = layer_prefix("enc", i);
    add_attention_shapes(out, p + "self.", d);
    add_norm_shapes(out, p + "ln1.", d);
    add_ffn_shapes(out, p + "ffn.", d, f);
    add_norm_shapes(out, p + "ln2.", d);
  }
  for (int i = 0; i < cfg.dec_layers; ++i) {
    const auto p = layer_prefix("dec", i);
    add_attention_shapes(out, p + "self.", d);
    add_norm_shapes(out, p + "ln1.", d);
    add_attention_shapes(out, p + "cross.", d);
    add_norm_shapes(out, p + "ln2.", d);
    add_ffn_shapes(out, p + "ffn.", d, f);
    add_norm_shapes(out, p + "ln3.", d);
  }
  out.push_back({"out.w", d, v});
  out.push_back({"out.b", 1, v});
  return out;
}

template <typename T>
ModelParameters<T> ModelParameters<T>::init(const ModelConfig& cfg,
                                            uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ModelParameters<T> out;
  for (const auto& s : parameter_shapes(cfg)) {
    Matrix<T> m(s.rows, s.cols);
    if (ends_with(s.name, ".g")) {
      m.setOnes();
    } else if (s.rows == 1) {
      m.setZero();
    } else {
      const double a = std::sqrt(6.0 / (s.rows + s.cols));
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = static_cast<T>((2.0 * uniform01(rng) - 1.0) * a);
      }
    }
    out.add(s.name, std::move(m));
  }
  return out;
}

template <typename T>
ModelParameters<T> ModelParameters<T>::zeros_like(const ModelParameters& other) {
  ModelParameters<T> out;
  for (const auto& t : other.tensors_) {
    out.add(t.name, Matrix<T>::Zero(t.value.rows(), t.value.cols()));
  }
  return out;
}

template <typename T>
void ModelParameters<T>::add(std::string name, Matrix<T> value) {
  if (index_.count(name)) throw ShapeError("duplicate tensor " + name);
  index_.emplace(name, tensors_.size());
  tensors_.push_back({std::move(name), std::move(value)});
}

template <typename T>
const Matrix<T>& ModelParameters<T>::get(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("missing tensor " + std::string(name));
  return tensors_[it->second].value;
}

template <typename T>
Matrix<T>& ModelParameters<T>::get(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("missing tensor " + std::string(name));
  return tensors_[it->second].value;
}

template <typename T>
bool ModelParameters<T>::contains(std::string_view name) const {
  return index_.find(name) != index_.end();
}

template <typename T>
size_t ModelParameters<T>::parameter_count() const {
  size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<size_t>(t.value.size());
  return n;
}

template <typename T>
void ModelParameters<T>::check_shapes(const ModelConfig& cfg) const {
  const auto shapes = parameter_shapes(cfg);
  if (shapes.size() != tensors_.size()) {
    throw ShapeError("expected " + std::to_string(shapes.size()) +
                     " tensors, found " + std::to_string(tensors_.size()));
  }
  for (size_t i = 0; i < shapes.size(); ++i) {
    const auto& t = tensors_[i];
    if (t.name != shapes[i].name || t.value.rows() != shapes[i].rows ||
        t.value.cols() != shapes[i].cols) {
      throw ShapeError("tensor " + t.name + " [" +
                       std::to_string(t.value.rows()) + "x" +
                       std::to_string(t.value.cols()) + "] does not match " +
                       shapes[i].name + " [" + std::to_string(shapes[i].rows) +
                       "x" + std::to_string(shapes[i].cols) + "]");
    }
  }
}

template <typename T>
void ModelParameters<T>::check_finite() const {
  for (const auto& t : tensors_) {
    if (!t.value.allFinite()) throw NumericError("non-finite values in " + t.name);
  }
}

TokenSequence build_decoder_input(const std::optional<SwitchSetting>& s,
                                  std::span<const TokenId> prefix,
                                  int max_len) {
  if (!prefix.empty() && prefix.front() == kBos) prefix = prefix.subspan(1);
  TokenSequence out;
  if (s) {
    out.push_back(s->disf ? kDisfOn : kDisfOff);
    out.push_back(s->punc ? kPuncOn : kPuncOff);
  }
  out.push_back(kBos);
  for (TokenId id : prefix) {
    if (is_reserved(id)) {
      throw Error("decoder prefix contains reserved id " + std::to_string(id));
    }
    out.push_back(id);
  }
  if (static_cast<int>(out.size()) > max_len) {
    throw LengthError("decoder input of length " + std::to_string(out.size()) +
                      " exceeds max_len " + std::to_string(max_len));
  }
  return out;
}

PackedBatch PackedBatch::pack(std::span<const TokenSequence> sources,
                              std::span<const TokenSequence> decoder_inputs,
                              const ModelConfig& cfg) {
  if (sources.size() != decoder_inputs.size() || sources.empty()) {
    throw ShapeError("batch size mismatch between sources and decoder inputs");
  }
  auto append = [&](const TokenSequence& seq, std::vector<int>& ids,
                    std::vector<int>& lengths, const char* what) {
    size_t len = seq.size();
    while (len > 0 && seq[len - 1] == kPad) --len;
    if (len == 0) throw LengthError(std::string("empty ") + what + " sequence");
    if (static_cast<int>(len) > cfg.max_len) {
      throw LengthError(std::string(what) + " length " + std::to_string(len) +
                        " exceeds max_len " + std::to_string(cfg.max_len));
    }
    for (size_t i = 0; i < len; ++i) {
      if (seq[i] < 0 || seq[i] >= cfg.vocab_size) {
        throw LengthError(std::string(what) + " id " + std::to_string(seq[i]) +
                          " outside vocabulary");
      }
      ids.push_back(seq[i]);
    }
    lengths.push_back(static_cast<int>(len));
  };
  PackedBatch batch;
  std::vector<int> src_len, dec_len;
  for (size_t b = 0; b < sources.size(); ++b) {
    append(sources[b], batch.source_ids, src_len, "source");
    append(decoder_inputs[b], batch.decoder_ids, dec_len, "decoder");
  }
  batch.source = PackedLayout::from_lengths(src_len);
  batch.decoder = PackedLayout::from_lengths(dec_len);
  return batch;
}

template <typename T>
ParameterVars<T>::ParameterVars(Tape<T>& tape, const ModelParameters<T>& params,
                                ModelParameters<T>* grads) {
  for (const auto& t : params.tensors()) {
    Matrix<T>* g = grads ? &grads->get(t.name) : nullptr;
    vars_.emplace(t.name, tape.parameter(t.value, g));
  }
}

template <typename T>
typename Tape<T>::Var ParameterVars<T>::operator[](std::string_view name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ShapeError("missing tensor " + std::string(name));
  return it->second;
}

template <typename T>
Matrix<T> positional_encoding(int n, int d_model) {
  Matrix<T> pe(n, d_model);
  for (int pos = 0; pos < n; ++pos) {
    for (int i = 0; i < d_model; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / d_model);
      pe(pos, i) = static_cast<T>(std::sin(pos * freq));
      if (i + 1 < d_model) pe(pos, i + 1) = static_cast<T>(std::cos(pos * freq));
    }
  }
  return pe;
}

template <typename T>
typename Tape<T>::Var forward_packed(Tape<T>& tape, const ParameterVars<T>& p,
                                    const ModelConfig& cfg,
                                    const PackedBatch& batch, bool train,
                                    Rng* rng) {
  if (train && cfg.dropout > 0 && rng == nullptr) {
    throw Error("forward: training mode needs an rng");
  }
  const T drop = static_cast<T>(cfg.dropout);
  auto x = embed(tape, p, cfg, batch.source_ids, batch.source, train, rng);
  for (int i = 0; i < cfg.enc_layers; ++i) {
    const auto pre = layer_prefix("enc", i);
    auto att = attention_block(tape, p, pre + "self.", x, x, batch.source,
                               batch.source, cfg.n_heads, false);
    x = residual_norm(tape, p, pre + "ln1.", x, att, drop, train, rng);
    x = residual_norm(tape, p, pre + "ln2.", x, ffn_block(tape, p, pre + "ffn.", x),
                      drop, train, rng);
    check_block(tape, x, "enc." + std::to_string(i));
  }
  const auto memory = x;
  auto y = embed(tape, p, cfg, batch.decoder_ids, batch.decoder, train, rng);
  for (int i = 0; i < cfg.dec_layers; ++i) {
    const auto pre = layer_prefix("dec", i);
    auto self = attention_block(tape, p, pre + "self.", y, y, batch.decoder,
                                batch.decoder, cfg.n_heads, true);
    y = residual_norm(tape, p, pre + "ln1.", y, self, drop, train, rng);
    auto cross = attention_block(tape, p, pre + "cross.", y, memory,
                                 batch.decoder, batch.source, cfg.n_heads, false);
    y = residual_norm(tape, p, pre + "ln2.", y, cross, drop, train, rng);
    y = residual_norm(tape, p, pre + "ln3.", y, ffn_block(tape, p, pre + "ffn.", y),
                      drop, train, rng);
    check_block(tape, y, "dec." + std::to_string(i));
  }
  auto logits = tape.linear(y, p["out.w"], p["out.b"]);
  check_block(tape, logits, "out");
  return logits;
}

template <typename T>
Logits<T> forward(const ModelParameters<T>& params, const ModelConfig& cfg,
                  std::span<const TokenSequence> sources,
                  std::span<const TokenSequence> decoder_inputs, bool train,
                  Rng* rng) {
  const auto batch = PackedBatch::pack(sources, decoder_inputs, cfg);
  Tape<T> tape;
  ParameterVars<T> vars(tape, params, nullptr);
  const auto& lv = tape.value(forward_packed(tape, vars, cfg, batch, train, rng));
  Logits<T> out;
  out.batch = batch.decoder.batch();
  out.vocab = cfg.vocab_size;
  for (const auto& seq : decoder_inputs) {
    out.length = std::max(out.length, static_cast<int>(seq.size()));
  }
  out.data.assign(static_cast<size_t>(out.batch) * out.length * out.vocab, T(0));
  for (int b = 0; b < out.batch; ++b) {
    for (int t = 0; t < batch.decoder.lengths[b]; ++t) {
      const auto row = lv.row(batch.decoder.offsets[b] + t);
      std::copy(row.data(), row.data() + out.vocab,
                out.data.begin() +
                    (static_cast<size_t>(b) * out.length + t) * out.vocab);
    }
  }
  return out;
}

template <typename T>
double logprob_of(const ModelParameters<T>& params, const ModelConfig& cfg,
                  std::span<const TokenId> source,
                  const std::optional<SwitchSetting>& s,
                  std::span<const TokenId> target) {
  if (target.empty() || target.back() != kEos) {
    throw Error("logprob_of: target must end with EOS");
  }
  const TokenSequence src(source.begin(), source.end());
  const TokenSequence dec =
      build_decoder_input(s, target.first(target.size() - 1), cfg.max_len);
  const auto batch = PackedBatch::pack(std::span(&src, 1), std::span(&dec, 1), cfg);
  Tape<T> tape;
  ParameterVars<T> vars(tape, params, nullptr);
  const auto& lv = tape.value(forward_packed(tape, vars, cfg, batch, false, nullptr));
  const int offset = prefix_length(s);
  double total = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    const auto row = lv.row(offset + static_cast<int>(i)).template cast<double>();
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    total += row(target[i]) - lse;
  }
  return total;
}

#define SWITCHCONV_INSTANTIATE(T)                                              \
  template class ModelParameters<T>;                                           \
  template class ParameterVars<T>;                                             \
  template Matrix<T> positional_encoding<T>(int, int);                         \
  template Tape<T>::Var forward_packed<T>(Tape<T>&, const ParameterVars<T>&,   \
                                          const ModelConfig&,                  \
                                          const PackedBatch&, bool, Rng*);     \
  template Logits<T> forward<T>(const ModelParameters<T>&, const ModelConfig&, \
                                std::span<const TokenSequence>,                \
                                std::span<const TokenSequence>, bool, Rng*);   \
  template double logprob_of<T>(const ModelParameters<T>&, const ModelConfig&, \
                                std::span<const TokenId>,                      \
                                const std::optional<SwitchSetting>&,           \
                                std::span<const TokenId>);

SWITCHCONV_INSTANTIATE(float)
SWITCHCONV_INSTANTIATE(double)

#undef SWITCHCONV_INSTANTIATE

}  // namespace switchconv
