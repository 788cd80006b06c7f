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

#ifndef SWITCHCONV_AUTOGRAD_H_
#define SWITCHCONV_AUTOGRAD_H_

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "switchconv/rng.h"

namespace switchconv {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Variable-length sequences stored back to back: sequence b occupies rows
// [offsets[b], offsets[b] + lengths[b]) of a packed matrix. Packing means no
// padding rows ever enter the computation.
struct PackedLayout {
  std::vector<int> offsets;
  std::vector<int> lengths;

  static PackedLayout from_lengths(std::span<const int> lengths);
  int batch() const { return static_cast<int>(lengths.size()); }
  int rows() const {
    return lengths.empty() ? 0 : offsets.back() + lengths.back();
  }
};

// Reverse-mode differentiation over row-major matrices. Operations append
// nodes; backward() replays them in reverse. Parameter leaves accumulate
// gradients into caller-owned matrices.
template <typename T>
class Tape {
 public:
  struct Var {
    int id = -1;
  };

  Var constant(Matrix<T> value);
  // `value` must outlive the tape. A null `grad` makes the leaf constant.
  Var parameter(const Matrix<T>& value, Matrix<T>* grad);

  const Matrix<T>& value(Var v) const;

  // Rows of `table` selected by `ids`.
  Var gather_rows(Var table, std::span<const int> ids);
  Var linear(Var x, Var weight, Var bias);
  Var add(Var a, Var b);
  Var scale(Var a, T factor);
  Var relu(Var x);
  // Inverted dropout; identity when p == 0.
  Var dropout(Var x, T p, Rng& rng);
  // Per-row normalization with learned gain and bias, each [1, cols].
  Var layer_norm(Var x, Var gain, Var bias, T eps = T(1e-5));
  // Scaled dot-product attention over packed sequences. Query sequence b
  // attends to key sequence b only; with `causal`, query position t sees key
  // positions <= t.
  Var attention(Var q, Var k, Var v, const PackedLayout& q_layout,
                const PackedLayout& k_layout, int heads, bool causal);
  // Sum over rows whose target != pad_id of the cross-entropy against
  // (1 - eps) * one_hot + eps / V. Result is [1, 1].
  Var smoothed_xent_sum(Var logits, std::span<const int> targets, T eps,
                        int pad_id);

  // Seeds d(root)/d(root) = 1; root must be [1, 1].
  void backward(Var root);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<T> value;
    const Matrix<T>* external = nullptr;
    Matrix<T> grad;
    Matrix<T>* external_grad = nullptr;
    bool needs_grad = false;
    std::function<void()> backward;
  };

  const Matrix<T>& val(int id) const;
  bool needs(int id) const { return nodes_[id].needs_grad; }
  // Lazily zero-initialized gradient buffer for node id.
  Matrix<T>& grad(int id);
  Var push(Matrix<T> value, bool needs_grad);

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace switchconv

#endif  // SWITCHCONV_AUTOGRAD_H_
