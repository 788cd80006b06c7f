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

#include "switchconv/inference.h"

#include <cmath>
#include <limits>

#include "switchconv/errors.h"

namespace switchconv {
namespace {

template <typename T>
Matrix<T> affine(const Matrix<T>& x, const ModelParameters<T>& p,
                 const std::string& prefix) {
  Matrix<T> y(x.rows(), p.get(prefix + ".w").cols());
  y.noalias() = x * p.get(prefix + ".w");
  y.rowwise() += p.get(prefix + ".b").row(0);
  return y;
}

template <typename T>
void add_and_norm(Matrix<T>& x, const Matrix<T>& sub,
                  const ModelParameters<T>& p, const std::string& prefix) {
  x += sub;
  const auto& g = p.get(prefix + ".g");
  const auto& b = p.get(prefix + ".b");
  const T cols = static_cast<T>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T mean = x.row(r).sum() / cols;
    x.row(r).array() -= mean;
    const T inv_std = T(1) / std::sqrt(x.row(r).squaredNorm() / cols + T(1e-5));
    x.row(r).array() = x.row(r).array() * inv_std * g.row(0).array() +
                       b.row(0).array();
  }
}

// Attention of the query rows over `keys`/`values`; query row t sees key
// rows [0, visible(t)).
template <typename T, typename K, typename V, typename Visible>
void attend(const Eigen::Ref<const Matrix<T>>& q, const K& keys,
            const V& values, int heads, Visible visible,
            Eigen::Ref<Matrix<T>> out) {
  const Eigen::Index d = q.cols();
  const Eigen::Index dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  for (Eigen::Index t = 0; t < q.rows(); ++t) {
    const Eigen::Index n = visible(t);
    for (int h = 0; h < heads; ++h) {
      Eigen::Matrix<T, 1, Eigen::Dynamic> s =
          (q.row(t).segment(h * dh, dh) *
           keys.block(0, h * dh, n, dh).transpose()) * scale;
      const T mx = s.maxCoeff();
      s = (s.array() - mx).exp();
      s /= s.sum();
      out.row(t).segment(h * dh, dh).noalias() = s * values.block(0, h * dh, n, dh);
    }
  }
}

template <typename T>
Matrix<T> feed_forward(const Matrix<T>& x, const ModelParameters<T>& p,
                       const std::string& prefix) {
  Matrix<T> h = affine(x, p, prefix + "in").cwiseMax(T(0));
  return affine(h, p, prefix + "out");
}

}  // namespace

template <typename T>
IncrementalDecoder<T>::IncrementalDecoder(const ModelParameters<T>& params,
                                          const ModelConfig& cfg)
    : params_(params),
      cfg_(cfg),
      positions_(positional_encoding<T>(cfg.max_len, cfg.d_model)) {
  cfg_.validate();
  params_.check_shapes(cfg_);
}

template <typename T>
typename IncrementalDecoder<T>::Memory IncrementalDecoder<T>::encode(
    std::span<const TokenId> source) const {
  const int len = static_cast<int>(source.size());
  if (len == 0 || len > cfg_.max_len) {
    throw LengthError("source length " + std::to_string(len) +
                      " outside [1, " + std::to_string(cfg_.max_len) + "]");
  }
  const auto& table = params_.get("embed.token");
  const T emb_scale = std::sqrt(static_cast<T>(cfg_.d_model));
  Matrix<T> x(len, cfg_.d_model);
  for (int t = 0; t < len; ++t) {
    if (source[t] < 0 || source[t] >= cfg_.vocab_size) {
      throw LengthError("source id outside vocabulary");
    }
    x.row(t) = table.row(source[t]) * emb_scale + positions_.row(t);
  }
  for (int i = 0; i < cfg_.enc_layers; ++i) {
    const std::string pre = "enc." + std::to_string(i) + ".";
    const Matrix<T> q = affine(x, params_, pre + "self.q");
    const Matrix<T> k = affine(x, params_, pre + "self.k");
    const Matrix<T> v = affine(x, params_, pre + "self.v");
    Matrix<T> att(len, cfg_.d_model);
    attend<T>(q, k, v, cfg_.n_heads, [len](Eigen::Index) { return len; }, att);
    add_and_norm(x, affine(att, params_, pre + "self.o"), params_, pre + "ln1");
    add_and_norm(x, feed_forward(x, params_, pre + "ffn."), params_, pre + "ln2");
  }
  Memory mem;
  for (int i = 0; i < cfg_.dec_layers; ++i) {
    const std::string pre = "dec." + std::to_string(i) + ".cross.";
    mem.keys.push_back(affine(x, params_, pre + "k"));
    mem.values.push_back(affine(x, params_, pre + "v"));
  }
  return mem;
}

template <typename T>
typename IncrementalDecoder<T>::State IncrementalDecoder<T>::initial_state() const {
  State s;
  s.keys.resize(cfg_.dec_layers);
  s.values.resize(cfg_.dec_layers);
  return s;
}

template <typename T>
Matrix<T> IncrementalDecoder<T>::step(const Memory& memory,
                                      std::span<State* const> states,
                                      std::span<const TokenId> tokens) const {
  const int n = static_cast<int>(states.size());
  const int d = cfg_.d_model;
  if (static_cast<int>(tokens.size()) != n) {
    throw ShapeError("step: one token per state is required");
  }
  const auto& table = params_.get("embed.token");
  const T emb_scale = std::sqrt(static_cast<T>(d));
  Matrix<T> x(n, d);
  for (int i = 0; i < n; ++i) {
    if (states[i]->position >= cfg_.max_len) {
      throw LengthError("decoder input exceeds max_len");
    }
    if (tokens[i] < 0 || tokens[i] >= cfg_.vocab_size) {
      throw LengthError("decoder id outside vocabulary");
    }
    x.row(i) = table.row(tokens[i]) * emb_scale + positions_.row(states[i]->position);
  }
  Matrix<T> att(n, d);
  for (int l = 0; l < cfg_.dec_layers; ++l) {
    const std::string pre = "dec." + std::to_string(l) + ".";
    const Matrix<T> q = affine(x, params_, pre + "self.q");
    const Matrix<T> k = affine(x, params_, pre + "self.k");
    const Matrix<T> v = affine(x, params_, pre + "self.v");
    for (int i = 0; i < n; ++i) {
      State& s = *states[i];
      s.keys[l].insert(s.keys[l].end(), k.row(i).data(), k.row(i).data() + d);
      s.values[l].insert(s.values[l].end(), v.row(i).data(), v.row(i).data() + d);
      const Eigen::Index rows = s.position + 1;
      Eigen::Map<const Matrix<T>> keys(s.keys[l].data(), rows, d);
      Eigen::Map<const Matrix<T>> values(s.values[l].data(), rows, d);
      attend<T>(q.row(i), keys, values, cfg_.n_heads,
                [rows](Eigen::Index) { return rows; }, att.row(i));
    }
    add_and_norm(x, affine(att, params_, pre + "self.o"), params_, pre + "ln1");
    const Matrix<T> cq = affine(x, params_, pre + "cross.q");
    const Eigen::Index src_len = memory.keys[l].rows();
    attend<T>(cq, memory.keys[l], memory.values[l], cfg_.n_heads,
              [src_len](Eigen::Index) { return src_len; }, att);
    add_and_norm(x, affine(att, params_, pre + "cross.o"), params_, pre + "ln2");
    add_and_norm(x, feed_forward(x, params_, pre + "ffn."), params_, pre + "ln3");
  }
  for (int i = 0; i < n; ++i) ++states[i]->position;
  Matrix<T> logits = affine(x, params_, "out");
  for (int i = 0; i < n; ++i) {
    const T mx = logits.row(i).maxCoeff();
    const T lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    logits.row(i).array() -= lse;
  }
  if (!logits.allFinite()) throw NumericError("non-finite decoder output");
  return logits;
}

template class IncrementalDecoder<float>;
template class IncrementalDecoder<double>;

}  // namespace switchconv
