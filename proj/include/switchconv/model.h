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

#ifndef SWITCHCONV_MODEL_H_
#define SWITCHCONV_MODEL_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "switchconv/autograd.h"
#include "switchconv/corpus.h"
#include "switchconv/vocab.h"

namespace switchconv {

// Post-norm Transformer encoder-decoder with sinusoidal positions.
struct ModelConfig {
  int d_model = 128;
  int n_heads = 4;
  int enc_layers = 2;
  int dec_layers = 2;
  int ffn_dim = 512;
  double dropout = 0.1;
  int max_len = 160;
  int vocab_size = 0;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;

  // 4 x 512 encoder, 2 x 512 decoder, 8 heads, 2048-wide feed-forward.
  static ModelConfig paper_scale(int vocab_size);
  static ModelConfig desk(int vocab_size);
};

struct SwitchSetting {
  bool disf = false;
  bool punc = false;
  bool operator==(const SwitchSetting&) const = default;
};

// disf -> (on, off), punc -> (off, on), same -> (off, off), joint -> (on, on).
SwitchSetting switch_for_task(Task task);
std::string switch_name(const SwitchSetting& s);  // e.g. "on/off"

template <typename T>
struct NamedTensor {
  std::string name;
  Matrix<T> value;
};

template <typename T>
class ModelParameters {
 public:
  ModelParameters() = default;

  // Glorot-uniform weights (gain 1), zero biases, unit norm gains.
  static ModelParameters init(const ModelConfig& cfg, uint64_t seed);
  // Same names and shapes, all zeros.
  static ModelParameters zeros_like(const ModelParameters& other);

  void add(std::string name, Matrix<T> value);
  const Matrix<T>& get(std::string_view name) const;
  Matrix<T>& get(std::string_view name);
  bool contains(std::string_view name) const;

  std::vector<NamedTensor<T>>& tensors() { return tensors_; }
  const std::vector<NamedTensor<T>>& tensors() const { return tensors_; }
  size_t parameter_count() const;

  // Throws ShapeError unless names and shapes match `cfg`.
  void check_shapes(const ModelConfig& cfg) const;
  // Throws NumericError naming the first tensor with a non-finite entry.
  void check_finite() const;

  template <typename U>
  ModelParameters<U> cast() const {
    ModelParameters<U> out;
    for (const auto& t : tensors_) out.add(t.name, t.value.template cast<U>());
    return out;
  }

 private:
  std::vector<NamedTensor<T>> tensors_;
  std::map<std::string, size_t, std::less<>> index_;
};

// Expected (name, rows, cols) for every tensor, in storage order.
struct TensorShape {
  std::string name;
  int rows;
  int cols;
};
std::vector<TensorShape> parameter_shapes(const ModelConfig& cfg);

// [switch_disf, switch_punc, BOS, prefix...]; without a switch setting the
// result is [BOS, prefix...]. A leading BOS in `prefix` is not duplicated.
// Throws LengthError when the result would exceed `max_len`, Error when the
// prefix contains other reserved ids.
TokenSequence build_decoder_input(const std::optional<SwitchSetting>& s,
                                  std::span<const TokenId> prefix,
                                  int max_len);
inline int prefix_length(const std::optional<SwitchSetting>& s) {
  return s ? 2 : 0;
}

// One batch with sequences already stripped of padding.
struct PackedBatch {
  std::vector<int> source_ids;
  PackedLayout source;
  std::vector<int> decoder_ids;
  PackedLayout decoder;

  // Trailing PAD is treated as padding and removed. Throws ShapeError on a
  // batch size mismatch, LengthError on empty or over-long sequences and on
  // ids outside [0, vocab_size).
  static PackedBatch pack(std::span<const TokenSequence> sources,
                          std::span<const TokenSequence> decoder_inputs,
                          const ModelConfig& cfg);
};

// Parameter leaves registered on a tape. Gradients accumulate into `grads`
// when it is given.
template <typename T>
class ParameterVars {
 public:
  ParameterVars(Tape<T>& tape, const ModelParameters<T>& params,
                ModelParameters<T>* grads);
  typename Tape<T>::Var operator[](std::string_view name) const;

 private:
  std::map<std::string, typename Tape<T>::Var, std::less<>> vars_;
};

// Packed logits [decoder rows, vocab]. Row r scores the token following
// decoder row r. Throws NumericError naming the block whose activations
// became non-finite.
template <typename T>
typename Tape<T>::Var forward_packed(Tape<T>& tape, const ParameterVars<T>& p,
                                    const ModelConfig& cfg,
                                    const PackedBatch& batch, bool train,
                                    Rng* rng);

// Dense logits [batch, dec_len, vocab]; positions beyond a sequence's
// unpadded length are zero.
template <typename T>
struct Logits {
  int batch = 0;
  int length = 0;
  int vocab = 0;
  std::vector<T> data;

  T at(int b, int t, int v) const {
    return data[(static_cast<size_t>(b) * length + t) * vocab + v];
  }
};

// Dropout is active only when `train` is set, in which case `rng` is
// required.
template <typename T>
Logits<T> forward(const ModelParameters<T>& params, const ModelConfig& cfg,
                  std::span<const TokenSequence> sources,
                  std::span<const TokenSequence> decoder_inputs, bool train,
                  Rng* rng = nullptr);

// log P(target | source, switches). `target` must end with EOS; switch and
// BOS positions are conditioning context and are not scored.
template <typename T>
double logprob_of(const ModelParameters<T>& params, const ModelConfig& cfg,
                  std::span<const TokenId> source,
                  const std::optional<SwitchSetting>& s,
                  std::span<const TokenId> target);

// Sinusoidal encoding for positions [0, n).
template <typename T>
Matrix<T> positional_encoding(int n, int d_model);

}  // namespace switchconv

#endif  // SWITCHCONV_MODEL_H_
