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

#include "switchconv/training.h"

#include <cmath>
#include <numeric>

namespace switchconv {

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    throw ConfigError("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(eps > 0)) throw ConfigError("eps must be positive");
  if (!(label_smoothing >= 0 && label_smoothing < 1)) {
    throw ConfigError("label_smoothing must lie in [0, 1)");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (grad_clip_norm && !(*grad_clip_norm > 0)) {
    throw ConfigError("grad_clip_norm must be positive");
  }
}

template <typename T>
OptimizerState<T> OptimizerState<T>::zeros_like(const ModelParameters<T>& params) {
  return {ModelParameters<T>::zeros_like(params),
          ModelParameters<T>::zeros_like(params), 0};
}

Batch make_batch(std::span<const TrainingExample> examples, int max_len) {
  Batch batch;
  for (const auto& ex : examples) {
    TokenSequence dec = build_decoder_input(ex.switches, ex.target, max_len);
    TokenSequence tgt(static_cast<size_t>(prefix_length(ex.switches)), kPad);
    tgt.insert(tgt.end(), ex.target.begin(), ex.target.end());
    tgt.push_back(kEos);
    batch.sources.push_back(ex.source);
    batch.decoder_inputs.push_back(std::move(dec));
    batch.targets.push_back(std::move(tgt));
    batch.switches.push_back(ex.switches);
    batch.tasks.push_back(ex.task);
  }
  return batch;
}

void check_switch_consistency(const Batch& batch) {
  for (size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch.switches[i];
    if (s && *s != switch_for_task(batch.tasks[i])) {
      throw Error("example " + std::to_string(i) + " has task " +
                  std::string(task_name(batch.tasks[i])) +
                  " but switch setting " + switch_name(*s));
    }
  }
}

std::vector<TrainingExample> make_examples(std::span<const Dataset> datasets,
                                           const Vocabulary& vocab,
                                           TrainMode mode) {
  std::vector<TrainingExample> out;
  for (const auto& ds : datasets) {
    for (const auto& p : ds.pairs) {
      if (mode == TrainMode::kJointSwitching && p.task == Task::kJoint) {
        throw Error("joint-task pairs are test-only and cannot be trained on");
      }
      TrainingExample ex;
      ex.source = vocab.encode(p.source);
      ex.target = vocab.encode(p.target);
      ex.task = p.task;
      if (mode == TrainMode::kJointSwitching) ex.switches = switch_for_task(p.task);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

template <typename T>
T label_smoothed_loss(const Matrix<T>& logits, std::span<const int> targets,
                      T eps, int pad_id) {
  size_t count = 0;
  for (int t : targets) count += t != pad_id;
  if (count == 0) throw Error("label_smoothed_loss: every target is padding");
  Tape<T> tape;
  auto x = tape.constant(logits);
  const T sum = tape.value(tape.smoothed_xent_sum(x, targets, eps, pad_id))(0, 0);
  return sum / static_cast<T>(count);
}

template <typename T>
LossValue joint_loss(const ModelParameters<T>& params, const ModelConfig& cfg,
                     const Batch& batch, double label_smoothing,
                     ModelParameters<T>* grads, Reduction reduction, bool train,
                     Rng* rng) {
  check_switch_consistency(batch);
  const auto packed = PackedBatch::pack(batch.sources, batch.decoder_inputs, cfg);
  std::vector<int> targets;
  targets.reserve(packed.decoder_ids.size());
  for (size_t b = 0; b < batch.size(); ++b) {
    const auto& t = batch.targets[b];
    if (static_cast<int>(t.size()) != packed.decoder.lengths[b]) {
      throw ShapeError("targets are not aligned with decoder inputs");
    }
    targets.insert(targets.end(), t.begin(), t.end());
  }
  LossValue out;
  for (int t : targets) out.tokens += t != kPad;
  Tape<T> tape;
  ParameterVars<T> vars(tape, params, grads);
  auto logits = forward_packed(tape, vars, cfg, packed, train, rng);
  auto loss = tape.smoothed_xent_sum(logits, targets,
                                     static_cast<T>(label_smoothing), kPad);
  out.sum = static_cast<double>(tape.value(loss)(0, 0));
  if (grads) {
    if (reduction == Reduction::kMean && out.tokens > 0) {
      loss = tape.scale(loss, T(1) / static_cast<T>(out.tokens));
    }
    tape.backward(loss);
  }
  return out;
}

template <typename T>
double clip_global_norm(ModelParameters<T>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& t : grads.tensors()) {
    sq += t.value.template cast<double>().squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& t : grads.tensors()) t.value *= factor;
  }
  return norm;
}

template <typename T>
void radam_step(ModelParameters<T>& params, const ModelParameters<T>& grads,
                OptimizerState<T>& state, const TrainConfig& cfg) {
  for (const auto& g : grads.tensors()) {
    if (!g.value.allFinite()) {
      throw NumericError("non-finite gradient for " + g.name);
    }
  }
  const int64_t t = ++state.step;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double b1t = std::pow(b1, static_cast<double>(t));
  const double b2t = std::pow(b2, static_cast<double>(t));
  const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
  const double rho_t = rho_inf - 2.0 * static_cast<double>(t) * b2t / (1.0 - b2t);
  const bool rectified = rho_t > 4.0;
  double r_t = 0.0;
  if (rectified) {
    r_t = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                    ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
  }
  auto& ps = params.tensors();
  const auto& gs = grads.tensors();
  auto& ms = state.first_moment.tensors();
  auto& vs = state.second_moment.tensors();
  for (size_t i = 0; i < ps.size(); ++i) {
    auto& m = ms[i].value;
    auto& v = vs[i].value;
    const auto& g = gs[i].value;
    m = static_cast<T>(b1) * m + static_cast<T>(1.0 - b1) * g;
    v = static_cast<T>(b2) * v + static_cast<T>(1.0 - b2) * g.cwiseProduct(g);
    const T step_size = static_cast<T>(cfg.learning_rate / (1.0 - b1t));
    if (rectified) {
      const T v_corr = static_cast<T>(1.0 / (1.0 - b2t));
      const T eps = static_cast<T>(cfg.eps);
      ps[i].value.array() -= static_cast<T>(r_t) * step_size * m.array() /
                             ((v.array() * v_corr).sqrt() + eps);
    } else {
      ps[i].value -= step_size * m;
    }
  }
}

double evaluate_loss(const ModelParameters<float>& params,
                     const ModelConfig& cfg,
                     std::span<const TrainingExample> examples,
                     double label_smoothing, int batch_size) {
  LossValue total;
  for (size_t i = 0; i < examples.size(); i += batch_size) {
    const size_t n = std::min(examples.size() - i, static_cast<size_t>(batch_size));
    const Batch batch = make_batch(examples.subspan(i, n), cfg.max_len);
    const auto lv = joint_loss<float>(params, cfg, batch, label_smoothing);
    total.sum += lv.sum;
    total.tokens += lv.tokens;
  }
  return total.mean();
}

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const Vocabulary& vocab, std::span<const Dataset> train_sets,
                  std::span<const Dataset> valid_sets, TrainMode mode,
                  const EpochCallback& on_epoch) {
  model_cfg.validate();
  train_cfg.validate();
  if (model_cfg.vocab_size != vocab.size()) {
    throw ConfigError("model vocab_size differs from the vocabulary size");
  }
  const auto examples = make_examples(train_sets, vocab, mode);
  if (examples.empty()) throw Error("train: no training examples");
  const auto valid = make_examples(valid_sets, vocab, mode);

  auto params = ModelParameters<float>::init(model_cfg, train_cfg.seed);
  auto state = OptimizerState<float>::zeros_like(params);
  auto grads = ModelParameters<float>::zeros_like(params);
  Rng order_rng(train_cfg.seed ^ 0x5bd1e995ULL);
  Rng dropout_rng(train_cfg.seed ^ 0x27d4eb2fULL);

  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<TrainingExample> chunk;

  TrainResult result;
  result.best_valid_loss = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
    if (train_cfg.shuffle) shuffle(std::span(order), order_rng);
    LossValue epoch_loss;
    for (size_t i = 0; i < order.size(); i += train_cfg.batch_size) {
      const size_t end = std::min(order.size(), i + train_cfg.batch_size);
      chunk.clear();
      for (size_t k = i; k < end; ++k) chunk.push_back(examples[order[k]]);
      const Batch batch = make_batch(chunk, model_cfg.max_len);
      for (auto& g : grads.tensors()) g.value.setZero();
      const auto lv = joint_loss<float>(params, model_cfg, batch,
                                        train_cfg.label_smoothing, &grads,
                                        Reduction::kMean, true, &dropout_rng);
      if (!std::isfinite(lv.sum)) {
        result.trace.push_back({epoch, lv.sum, 0.0});
        throw TrainingDiverged(
            "training loss became non-finite in epoch " + std::to_string(epoch),
            result.trace);
      }
      epoch_loss.sum += lv.sum;
      epoch_loss.tokens += lv.tokens;
      if (train_cfg.grad_clip_norm) clip_global_norm(grads, *train_cfg.grad_clip_norm);
      radam_step(params, grads, state, train_cfg);
    }
    EpochRecord rec{epoch, epoch_loss.mean(), epoch_loss.mean()};
    if (!valid.empty()) {
      rec.valid_loss = evaluate_loss(params, model_cfg, valid,
                                     train_cfg.label_smoothing, train_cfg.batch_size);
    }
    if (!std::isfinite(rec.valid_loss)) {
      result.trace.push_back(rec);
      throw TrainingDiverged(
          "validation loss became non-finite in epoch " + std::to_string(epoch),
          result.trace);
    }
    result.trace.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.valid_loss < result.best_valid_loss) {
      result.best_valid_loss = rec.valid_loss;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

#define SWITCHCONV_INSTANTIATE(T)                                              \
  template struct OptimizerState<T>;                                           \
  template T label_smoothed_loss<T>(const Matrix<T>&, std::span<const int>, T, \
                                    int);                                      \
  template LossValue joint_loss<T>(const ModelParameters<T>&,                  \
                                   const ModelConfig&, const Batch&, double,   \
                                   ModelParameters<T>*, Reduction, bool, Rng*); \
  template void radam_step<T>(ModelParameters<T>&, const ModelParameters<T>&,  \
                              OptimizerState<T>&, const TrainConfig&);         \
  template double clip_global_norm<T>(ModelParameters<T>&, double);

SWITCHCONV_INSTANTIATE(float)
SWITCHCONV_INSTANTIATE(double)

#undef SWITCHCONV_INSTANTIATE

}  // namespace switchconv
