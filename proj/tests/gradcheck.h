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

#ifndef SWITCHCONV_TESTS_GRADCHECK_H_
#define SWITCHCONV_TESTS_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "switchconv/training.h"
#include "test_util.h"

namespace switchconv::testing {

struct TensorCheck {
  std::string name;
  double max_rel_error = 0.0;
};

// Mixed-task batch of two examples over a vocabulary of cfg.vocab_size.
inline Batch gradcheck_batch(const ModelConfig& cfg) {
  Rng rng(11);
  std::vector<TrainingExample> ex(2);
  ex[0].source = random_chars(rng, cfg.vocab_size, 4, 4);
  ex[0].target = random_chars(rng, cfg.vocab_size, 3, 3);
  ex[0].switches = SwitchSetting{true, false};
  ex[0].task = Task::kDisf;
  ex[1].source = random_chars(rng, cfg.vocab_size, 6, 6);
  ex[1].target = random_chars(rng, cfg.vocab_size, 5, 5);
  ex[1].switches = SwitchSetting{false, true};
  ex[1].task = Task::kPunc;
  return make_batch(ex, cfg.max_len);
}

// Compares analytic gradients of the summed joint loss with a four-point
// central difference in double precision. The relative error of one entry
// is |a - n| / max(|a|, |n|, floor); the floor keeps structurally zero
// gradients (key biases, for instance) from dividing noise by noise.
template <typename T>
std::vector<TensorCheck> check_gradients(const ModelConfig& cfg, double label_smoothing,
                                         double step = 1e-4, double floor = 1e-4) {
  const Batch batch = gradcheck_batch(cfg);
  auto params = random_params<double>(cfg, 21);
  auto analytic_params = params.template cast<T>();
  auto grads = ModelParameters<T>::zeros_like(analytic_params);
  joint_loss<T>(analytic_params, cfg, batch, label_smoothing, &grads, Reduction::kSum);

  auto loss_at = [&](double& w, double value) {
    w = value;
    return joint_loss<double>(params, cfg, batch, label_smoothing).sum;
  };
  std::vector<TensorCheck> out;
  for (auto& t : params.tensors()) {
    TensorCheck c{t.name, 0.0};
    const auto& g = grads.get(t.name);
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      double& w = t.value.data()[i];
      const double x = w;
      const double numeric = (-loss_at(w, x + 2 * step) + 8 * loss_at(w, x + step) -
                              8 * loss_at(w, x - step) + loss_at(w, x - 2 * step)) /
                             (12.0 * step);
      w = x;
      const double analytic = static_cast<double>(g.data()[i]);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      c.max_rel_error = std::max(c.max_rel_error, std::abs(analytic - numeric) / denom);
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace switchconv::testing

#endif  // SWITCHCONV_TESTS_GRADCHECK_H_
