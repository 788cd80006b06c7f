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

#ifndef SWITCHCONV_INFERENCE_H_
#define SWITCHCONV_INFERENCE_H_

#include <span>
#include <vector>

#include "switchconv/model.h"

namespace switchconv {

// Step-by-step decoder with key/value caches. Shares the parameters of the
// training graph but computes the forward pass independently of the tape.
template <typename T>
class IncrementalDecoder {
 public:
  // Per decoder layer cross-attention keys and values of one source.
  struct Memory {
    std::vector<Matrix<T>> keys;
    std::vector<Matrix<T>> values;
  };

  // Self-attention cache of one hypothesis; each buffer holds `position`
  // rows of d_model values.
  struct State {
    std::vector<std::vector<T>> keys;
    std::vector<std::vector<T>> values;
    int position = 0;
  };

  // `params` must outlive the decoder.
  IncrementalDecoder(const ModelParameters<T>& params, const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  // Throws LengthError for empty or over-long sources.
  Memory encode(std::span<const TokenId> source) const;
  State initial_state() const;

  // Feeds tokens[i] to states[i] and returns log-probabilities of the next
  // token, one row per state.
  Matrix<T> step(const Memory& memory, std::span<State* const> states,
                 std::span<const TokenId> tokens) const;

 private:
  const ModelParameters<T>& params_;
  ModelConfig cfg_;
  Matrix<T> positions_;
};

extern template class IncrementalDecoder<float>;
extern template class IncrementalDecoder<double>;

}  // namespace switchconv

#endif  // SWITCHCONV_INFERENCE_H_
