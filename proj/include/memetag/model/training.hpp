// Copyright 2026 The memetag Authors
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

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memetag/eval_ensemble.hpp"
#include "memetag/model/config.hpp"
#include "memetag/model/parameters.hpp"
#include "memetag/model/transformer.hpp"

namespace memetag {

/// One model input with its visual feature table and binary target.
struct Example {
  MemeId id = 0;
  InputSequence seq;
  Mat features;
  int label = 0;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::uint64_t seed, std::size_t step, double loss);
  std::uint64_t seed() const { return seed_; }
  std::size_t step() const { return step_; }

 private:
  std::uint64_t seed_;
  std::size_t step_;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> dev_auroc;  // empty when dev has a single class
  std::optional<double> dev_accuracy;
};

struct FitResult {
  VLModel model;  // best-dev-AUROC snapshot (last epoch when dev is unusable)
  std::vector<EpochMetrics> history;
  std::size_t best_epoch = 0;
};

/// Mean cross-entropy over `batch`, accumulating the mean gradient into `grads`.
double batch_loss(const VLModel& model, const std::vector<const Example*>& batch, VLModel* grads,
                  Dropout dropout = {});

/// Runs `steps` Adam updates on mini-batches drawn from reshuffled passes
/// over `data`. Throws DivergenceError on a non-finite loss.
void train_steps(VLModel& model, const std::vector<Example>& data, const TrainConfig& config,
                 std::size_t steps, std::vector<double>* losses = nullptr);

FitResult fit(VLModel model, const std::vector<Example>& train, const std::vector<Example>& dev,
              const TrainConfig& config);

/// Softmax probability of class 1 ("hateful" after transfer), evaluation mode.
PredictionSet predict_proba(const VLModel& model, const std::vector<Example>& data,
                            std::string name = "model");

LabelMap labels_of(const std::vector<Example>& data);

/// ITM head training. Target 1 = caption belongs to the image. The returned
/// head carries kItmSemantics.
VLModel pretrain_itm(VLModel model, const std::vector<Example>& pairs, const TrainConfig& config,
                     std::size_t steps);

/// Reuses a pretrained ITM head for hateful-meme fine-tuning: classes are
/// swapped so "match" initialises "benign" and "not match" initialises
/// "hateful". The backbone is untouched.
VLModel transfer_itm_head(VLModel pretrained);

/// Same backbone, freshly initialised head: the baseline arm.
VLModel with_random_head(VLModel model, std::uint64_t seed);

}  // namespace memetag
