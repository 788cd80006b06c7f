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

#include "switchconv/autograd.h"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "switchconv/errors.h"

namespace switchconv {

PackedLayout PackedLayout::from_lengths(std::span<const int> lengths) {
  PackedLayout layout;
  int offset = 0;
  for (int len : lengths) {
    layout.offsets.push_back(offset);
    layout.lengths.push_back(len);
    offset += len;
  }
  return layout;
}

template <typename T>
const Matrix<T>& Tape<T>::val(int id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

template <typename T>
const Matrix<T>& Tape<T>::value(Var v) const {
  return val(v.id);
}

template <typename T>
Matrix<T>& Tape<T>::grad(int id) {
  Node& n = nodes_[id];
  Matrix<T>& g = n.external_grad ? *n.external_grad : n.grad;
  const Matrix<T>& v = val(id);
  if (g.rows() != v.rows() || g.cols() != v.cols()) {
    g = Matrix<T>::Zero(v.rows(), v.cols());
  }
  return g;
}

template <typename T>
typename Tape<T>::Var Tape<T>::push(Matrix<T> value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
typename Tape<T>::Var Tape<T>::constant(Matrix<T> value) {
  return push(std::move(value), false);
}

template <typename T>
typename Tape<T>::Var Tape<T>::parameter(const Matrix<T>& value,
                                         Matrix<T>* grad) {
  Node n;
  n.external = &value;
  n.external_grad = grad;
  n.needs_grad = grad != nullptr;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
typename Tape<T>::Var Tape<T>::gather_rows(Var table, std::span<const int> ids) {
  const Matrix<T>& tab = val(table.id);
  Matrix<T> out(static_cast<Eigen::Index>(ids.size()), tab.cols());
  for (size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= tab.rows()) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[r]) +
                       " outside table of " + std::to_string(tab.rows()));
    }
    out.row(r) = tab.row(ids[r]);
  }
  Var y = push(std::move(out), needs(table.id));
  if (needs(table.id)) {
    std::vector<int> saved(ids.begin(), ids.end());
    nodes_[y.id].backward = [this, y, table, saved = std::move(saved)] {
      Matrix<T>& gt = grad(table.id);
      const Matrix<T>& gy = nodes_[y.id].grad;
      for (size_t r = 0; r < saved.size(); ++r) gt.row(saved[r]) += gy.row(r);
    };
  }
  return y;
}

template <typename T>
typename Tape<T>::Var Tape<T>::linear(Var x, Var weight, Var bias) {
  const Matrix<T>& xv = val(x.id);
  const Matrix<T>& w = val(weight.id);
  const Matrix<T>& b = val(bias.id);
  if (xv.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols()) {
    throw ShapeError("linear: shape mismatch");
  }
  Matrix<T> out(xv.rows(), w.cols());
  out.noalias() = xv * w;
  out.rowwise() += b.row(0);
  const bool ng = needs(x.id) || needs(weight.id) || needs(bias.id);
  Var y = push(std::move(out), ng);
  if (ng) {
    nodes_[y.id].backward = [this, y, x, weight, bias] {
      const Matrix<T>& gy = nodes_[y.id].grad;
      if (needs(x.id)) grad(x.id).noalias() += gy * val(weight.id).transpose();
      if (needs(weight.id)) {
        grad(weight.id).noalias() += val(x.id).transpose() * gy;
      }
      if (needs(bias.id)) grad(bias.id) += gy.colwise().sum();
    };
  }
  return y;
}

template <typename T>
typename Tape<T>::Var Tape<T>::add(Var a, Var b) {
  const Matrix<T>& av = val(a.id);
  const Matrix<T>& bv = val(b.id);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw ShapeError("add: shape mismatch");
  }
  const bool ng = needs(a.id) || needs(b.id);
  Var y = push(av + bv, ng);
  if (ng) {
    nodes_[y.id].backward = [this, y, a, b] {
      const Matrix<T>& gy = nodes_[y.id].grad;
      if (needs(a.id)) grad(a.id) += gy;
      if (needs(b.id)) grad(b.id) += gy;
    };
  }
  return y;
}

template <typename T>
typename Tape<T>::Var Tape<T>::scale(Var a, T factor) {
  Var y = push(val(a.id) * factor, needs(a.id));
  if (needs(a.id)) {
    nodes_[y.id].backward = [this, y, a, factor] {
      grad(a.id) += nodes_[y.id].grad * factor;
    };
  }
  return y;
}

template <typename T>
typename Tape<T>::Var Tape<T>::relu(Var x) {
  Var y = push(val(x.id).cwiseMax(T(0)), needs(x.id));
  if (needs(x.id)) {
    nodes_[y.id].backward = [this, y, x] {
      grad(x.id) += (val(x.id).array() > T(0))
                        .select(nodes_[y.id].grad, T(0))
                        .matrix();
    };
  }
  return y;
}

template <typename T>
typename Tape<T>::Var Tape<T>::dropout(Var x, T p, Rng& rng) {
  if (p <= T(0)) return x;
  const Matrix<T>& xv = val(x.id);
  Matrix<T> mask(xv.rows(), xv.cols());
  const T keep_scale = T(1) / (T(1) - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = uniform01(rng) < static_cast<double>(p) ? T(0) : keep_scale;
  }
  Var y = push(xv.cwiseProduct(mask), needs(x.id));
  if (needs(x.id)) {
    nodes_[y.id].backward = [this, y, x, mask = std::move(mask)] {
      grad(x.id) += nodes_[y.id].grad.cwiseProduct(mask);
    };
  }
  return y;
}

template <typename T>
typename Tape<T>::Var Tape<T>::layer_norm(Var x, Var gain, Var bias, T eps) {
  const Matrix<T>& xv = val(x.id);
  const Matrix<T>& g = val(gain.id);
  const Matrix<T>& b = val(bias.id);
  if (g.cols() != xv.cols() || b.cols() != xv.cols()) {
    throw ShapeError("layer_norm: shape mismatch");
  }
  const Eigen::Index n = xv.rows();
  const T cols = static_cast<T>(xv.cols());
  Matrix<T> xhat(n, xv.cols());
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const T mean = xv.row(r).sum() / cols;
    auto centered = xv.row(r).array() - mean;
    const T var = centered.square().sum() / cols;
    inv_std(r) = T(1) / std::sqrt(var + eps);
    xhat.row(r) = centered * inv_std(r);
  }
  Matrix<T> out = xhat.array().rowwise() * g.row(0).array();
  out.rowwise() += b.row(0);
  const bool ng = needs(x.id) || needs(gain.id) || needs(bias.id);
  Var y = push(std::move(out), ng);
  if (ng) {
    nodes_[y.id].backward = [this, y, x, gain, bias, xhat = std::move(xhat),
                             inv_std = std::move(inv_std), cols] {
      const Matrix<T>& gy = nodes_[y.id].grad;
      if (needs(gain.id)) grad(gain.id) += gy.cwiseProduct(xhat).colwise().sum();
      if (needs(bias.id)) grad(bias.id) += gy.colwise().sum();
      if (needs(x.id)) {
        Matrix<T> dxhat = gy.array().rowwise() * val(gain.id).row(0).array();
        Matrix<T>& gx = grad(x.id);
        for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
          const T mean_d = dxhat.row(r).sum() / cols;
          const T mean_dx = dxhat.row(r).dot(xhat.row(r)) / cols;
          gx.row(r).array() += inv_std(r) * (dxhat.row(r).array() - mean_d -
                                             xhat.row(r).array() * mean_dx);
        }
      }
    };
  }
  return y;
}

template <typename T>
typename Tape<T>::Var Tape<T>::attention(Var q, Var k, Var v,
                                         const PackedLayout& q_layout,
                                         const PackedLayout& k_layout,
                                         int heads, bool causal) {
  const Matrix<T>& qv = val(q.id);
  const Matrix<T>& kv = val(k.id);
  const Matrix<T>& vv = val(v.id);
  const Eigen::Index d = qv.cols();
  if (heads <= 0 || d % heads != 0 || kv.cols() != d || vv.cols() != d ||
      kv.rows() != vv.rows() || q_layout.batch() != k_layout.batch() ||
      q_layout.rows() != qv.rows() || k_layout.rows() != kv.rows()) {
    throw ShapeError("attention: shape mismatch");
  }
  const Eigen::Index dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const int batch = q_layout.batch();
  auto probs = std::make_shared<std::vector<Matrix<T>>>(
      static_cast<size_t>(batch) * heads);
  Matrix<T> out = Matrix<T>::Zero(qv.rows(), d);
  for (int b = 0; b < batch; ++b) {
    const int qo = q_layout.offsets[b], ql = q_layout.lengths[b];
    const int ko = k_layout.offsets[b], kl = k_layout.lengths[b];
    if (kl <= 0 || (causal && ql != kl)) {
      throw ShapeError("attention: empty key sequence or causal length mismatch");
    }
    for (int h = 0; h < heads; ++h) {
      Matrix<T> s(ql, kl);
      s.noalias() = qv.block(qo, h * dh, ql, dh) *
                    kv.block(ko, h * dh, kl, dh).transpose();
      s *= scale;
      for (int t = 0; t < ql; ++t) {
        const int visible = causal ? t + 1 : kl;
        for (int j = visible; j < kl; ++j) s(t, j) = -std::numeric_limits<T>::infinity();
        const T mx = s.row(t).head(visible).maxCoeff();
        s.row(t).head(visible).array() = (s.row(t).head(visible).array() - mx).exp();
        s.row(t).head(visible) /= s.row(t).head(visible).sum();
        s.row(t).tail(kl - visible).setZero();
      }
      out.block(qo, h * dh, ql, dh).noalias() = s * vv.block(ko, h * dh, kl, dh);
      (*probs)[static_cast<size_t>(b) * heads + h] = std::move(s);
    }
  }
  const bool ng = needs(q.id) || needs(k.id) || needs(v.id);
  Var y = push(std::move(out), ng);
  if (ng) {
    nodes_[y.id].backward = [this, y, q, k, v, q_layout, k_layout, heads, dh,
                             scale, probs] {
      const Matrix<T>& gy = nodes_[y.id].grad;
      const Matrix<T>& qv = val(q.id);
      const Matrix<T>& kv = val(k.id);
      const Matrix<T>& vv = val(v.id);
      Matrix<T>* gq = needs(q.id) ? &grad(q.id) : nullptr;
      Matrix<T>* gk = needs(k.id) ? &grad(k.id) : nullptr;
      Matrix<T>* gv = needs(v.id) ? &grad(v.id) : nullptr;
      for (int b = 0; b < q_layout.batch(); ++b) {
        const int qo = q_layout.offsets[b], ql = q_layout.lengths[b];
        const int ko = k_layout.offsets[b], kl = k_layout.lengths[b];
        for (int h = 0; h < heads; ++h) {
          const Matrix<T>& p = (*probs)[static_cast<size_t>(b) * heads + h];
          auto dout = gy.block(qo, h * dh, ql, dh);
          if (gv) gv->block(ko, h * dh, kl, dh).noalias() += p.transpose() * dout;
          Matrix<T> dp(ql, kl);
          dp.noalias() = dout * vv.block(ko, h * dh, kl, dh).transpose();
          Matrix<T> ds = p.cwiseProduct(dp);
          const auto row_dot = ds.rowwise().sum();
          ds -= (p.array().colwise() * row_dot.array()).matrix();
          ds *= scale;
          if (gq) gq->block(qo, h * dh, ql, dh).noalias() += ds * kv.block(ko, h * dh, kl, dh);
          if (gk) gk->block(ko, h * dh, kl, dh).noalias() += ds.transpose() * qv.block(qo, h * dh, ql, dh);
        }
      }
    };
  }
  return y;
}

template <typename T>
typename Tape<T>::Var Tape<T>::smoothed_xent_sum(Var logits,
                                                 std::span<const int> targets,
                                                 T eps, int pad_id) {
  const Matrix<T>& lv = val(logits.id);
  if (static_cast<size_t>(lv.rows()) != targets.size()) {
    throw ShapeError("smoothed_xent_sum: target count differs from logit rows");
  }
  const Eigen::Index vocab = lv.cols();
  const T uniform = eps / static_cast<T>(vocab);
  Matrix<T> probs = Matrix<T>::Zero(lv.rows(), vocab);
  T total = 0;
  for (Eigen::Index r = 0; r < lv.rows(); ++r) {
    const int y = targets[r];
    if (y == pad_id) continue;
    if (y < 0 || y >= vocab) throw ShapeError("smoothed_xent_sum: target out of range");
    const T mx = lv.row(r).maxCoeff();
    const T lse = mx + std::log((lv.row(r).array() - mx).exp().sum());
    const auto logp = lv.row(r).array() - lse;
    total += -(T(1) - eps) * logp(y) - uniform * logp.sum();
    probs.row(r) = logp.exp().matrix();
  }
  Matrix<T> out(1, 1);
  out(0, 0) = total;
  Var y = push(std::move(out), needs(logits.id));
  if (needs(logits.id)) {
    std::vector<int> saved(targets.begin(), targets.end());
    nodes_[y.id].backward = [this, y, logits, eps, uniform, pad_id,
                             probs = std::move(probs),
                             saved = std::move(saved)] {
      const T up = nodes_[y.id].grad(0, 0);
      Matrix<T>& g = grad(logits.id);
      for (size_t r = 0; r < saved.size(); ++r) {
        if (saved[r] == pad_id) continue;
        g.row(r).array() += up * (probs.row(r).array() - uniform);
        g(r, saved[r]) -= up * (T(1) - eps);
      }
    };
  }
  return y;
}

template <typename T>
void Tape<T>::backward(Var root) {
  const Matrix<T>& rv = val(root.id);
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw ShapeError("backward: root must be a scalar");
  }
  if (!needs(root.id)) return;
  grad(root.id)(0, 0) += T(1);
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward();
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace switchconv
