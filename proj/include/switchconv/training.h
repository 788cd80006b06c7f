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

#ifndef SWITCHCONV_TRAINING_H_
#define SWITCHCONV_TRAINING_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "switchconv/corpus.h"
#include "switchconv/errors.h"
#include "switchconv/model.h"
#include "switchconv/vocab.h"

namespace switchconv {

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double label_smoothing = 0.1;
  int batch_size = 64;
  int max_epochs = 20;
  std::optional<double> grad_clip_norm = 5.0;
  uint64_t seed = 1;
  bool shuffle = true;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

template <typename T>
struct OptimizerState {
  ModelParameters<T> first_moment;
  ModelParameters<T> second_moment;
  int64_t step = 0;

  static OptimizerState zeros_like(const ModelParameters<T>& params);
};

// One supervised example. `target` excludes EOS; a missing switch setting
// means the example is fed without a switch prefix.
struct TrainingExample {
  TokenSequence source;
  TokenSequence target;
  std::optional<SwitchSetting> switches;
  Task task = Task::kSame;
};

// Decoder rows and loss targets are aligned: row t of `decoder_inputs[b]`
// predicts `targets[b][t]`, with PAD on the switch and BOS-predicting rows.
struct Batch {
  std::vector<TokenSequence> sources;
  std::vector<TokenSequence> decoder_inputs;
  std::vector<TokenSequence> targets;
  std::vector<std::optional<SwitchSetting>> switches;
  std::vector<Task> tasks;

  size_t size() const { return sources.size(); }
};

Batch make_batch(std::span<const TrainingExample> examples, int max_len);

// Throws Error when an example's switch prefix disagrees with its task.
void check_switch_consistency(const Batch& batch);

enum class TrainMode {
  // Switch prefixes per task, over the union of the given datasets.
  kJointSwitching,
  // No switch prefixes; a dedicated single-task model.
  kSingleTask,
};

std::vector<TrainingExample> make_examples(std::span<const Dataset> datasets,
                                           const Vocabulary& vocab,
                                           TrainMode mode);

// Mean over non-PAD rows of the cross-entropy against the smoothed target
// distribution. Throws Error when every target is PAD.
template <typename T>
T label_smoothed_loss(const Matrix<T>& logits, std::span<const int> targets,
                      T eps, int pad_id = kPad);

struct LossValue {
  double sum = 0.0;
  size_t tokens = 0;
  double mean() const { return tokens ? sum / static_cast<double>(tokens) : 0.0; }
};

enum class Reduction { kSum, kMean };

// Summed smoothed loss of a mixed-task batch, i.e. L_disf + L_punc + L_same
// restricted to the batch. When `grads` is given, the gradient of the
// reduced loss is accumulated into it.
template <typename T>
LossValue joint_loss(const ModelParameters<T>& params, const ModelConfig& cfg,
                     const Batch& batch, double label_smoothing,
                     ModelParameters<T>* grads = nullptr,
                     Reduction reduction = Reduction::kSum, bool train = false,
                     Rng* rng = nullptr);

// One rectified-Adam update. Increments state.step before use. Throws
// NumericError naming the first tensor with a non-finite gradient.
template <typename T>
void radam_step(ModelParameters<T>& params, const ModelParameters<T>& grads,
                OptimizerState<T>& state, const TrainConfig& cfg);

// Scales grads so their global L2 norm is at most max_norm; returns the
// norm before clipping.
template <typename T>
double clip_global_norm(ModelParameters<T>& grads, double max_norm);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct TrainResult {
  ModelParameters<float> params;
  std::vector<EpochRecord> trace;
  int best_epoch = 0;
  double best_valid_loss = 0.0;
};

class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, std::vector<EpochRecord> trace)
      : NumericError(what), trace_(std::move(trace)) {}
  const std::vector<EpochRecord>& trace() const { return trace_; }

 private:
  std::vector<EpochRecord> trace_;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains from a seeded initialization and returns the parameters with the
// lowest validation loss. Each epoch visits a fresh shuffle of the union of
// `train_sets`. An empty `valid_sets` selects on training loss.
TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const Vocabulary& vocab, std::span<const Dataset> train_sets,
                  std::span<const Dataset> valid_sets, TrainMode mode,
                  const EpochCallback& on_epoch = {});

// Mean smoothed loss over `examples` in eval mode.
double evaluate_loss(const ModelParameters<float>& params,
                     const ModelConfig& cfg,
                     std::span<const TrainingExample> examples,
                     double label_smoothing, int batch_size);

}  // namespace switchconv

#endif  // SWITCHCONV_TRAINING_H_
