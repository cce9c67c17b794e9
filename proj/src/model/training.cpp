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

#include "memetag/model/training.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "memetag/model/optimizer.hpp"

namespace memetag {

namespace {

constexpr std::uint64_t kShuffleKey = 0x73687566666c65ULL;
constexpr std::uint64_t kDropoutKey = 0x64726f706f7574ULL;

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed, std::uint64_t round) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SeededStream stream(seed, kShuffleKey, round);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[stream.below(i)]);
  return order;
}

std::string divergence_message(std::uint64_t seed, std::size_t step, double loss) {
  std::ostringstream os;
  os << "training diverged: loss " << loss << " at step " << step << " (seed " << seed << ")";
  return os.str();
}

// One optimizer update; returns the batch loss.
double update(VLModel& model, Adam& adam, const std::vector<const Example*>& batch,
              const TrainConfig& config, std::size_t step) {
  VLModel grads = model.zeros_like();
  SeededStream dropout_stream(config.seed, kDropoutKey, step);
  const double loss = batch_loss(model, batch, &grads, {model.config.dropout, &dropout_stream});
  if (!std::isfinite(loss)) throw DivergenceError(config.seed, step, loss);
  adam.step(model, grads);
  return loss;
}

}  // namespace

DivergenceError::DivergenceError(std::uint64_t seed, std::size_t step, double loss)
    : std::runtime_error(divergence_message(seed, step, loss)), seed_(seed), step_(step) {}

double batch_loss(const VLModel& model, const std::vector<const Example*>& batch, VLModel* grads,
                  Dropout dropout) {
  if (batch.empty()) return 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  ForwardCache cache;
  for (const Example* ex : batch) {
    const Eigen::Vector2d logits = forward(model, ex->seq, ex->features, &cache, dropout);
    Eigen::Vector2d dlogits;
    total += cross_entropy(logits, ex->label, &dlogits);
    if (grads) backward(model, cache, dlogits * inv, *grads);
  }
  return total * inv;
}

void train_steps(VLModel& model, const std::vector<Example>& data, const TrainConfig& config,
                 std::size_t steps, std::vector<double>* losses) {
  if (steps == 0 || data.empty()) return;
  Adam adam(model, config);
  std::size_t round = 0;
  std::vector<std::size_t> order = shuffled(data.size(), config.seed, round);
  std::size_t cursor = 0;
  for (std::size_t step = 1; step <= steps; ++step) {
    std::vector<const Example*> batch;
    while (batch.size() < config.batch_size) {
      if (cursor == order.size()) {
        order = shuffled(data.size(), config.seed, ++round);
        cursor = 0;
      }
      batch.push_back(&data[order[cursor++]]);
    }
    const double loss = update(model, adam, batch, config, step);
    if (losses) losses->push_back(loss);
  }
}

LabelMap labels_of(const std::vector<Example>& data) {
  LabelMap labels;
  for (const auto& ex : data) labels[ex.id] = ex.label;
  return labels;
}

PredictionSet predict_proba(const VLModel& model, const std::vector<Example>& data,
                            std::string name) {
  PredictionSet out{std::move(name), {}};
  for (const auto& ex : data) {
    const Eigen::Vector2d p = softmax2(forward(model, ex.seq, ex.features));
    if (!out.scores.emplace(ex.id, p(1)).second) {
      throw EnsembleError("duplicate id " + std::to_string(ex.id) + " in prediction input");
    }
  }
  return out;
}

FitResult fit(VLModel model, const std::vector<Example>& train, const std::vector<Example>& dev,
              const TrainConfig& config) {
  FitResult result;
  result.model = model;
  Adam adam(model, config);
  const LabelMap dev_labels = labels_of(dev);
  std::optional<double> best_auroc;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = shuffled(train.size(), config.seed, epoch);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::vector<const Example*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(&train[order[i]]);
      }
      loss_sum += update(model, adam, batch, config, ++step);
      ++batches;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    if (!dev.empty()) {
      const PredictionSet preds = predict_proba(model, dev);
      m.dev_accuracy = accuracy(preds, dev_labels);
      try {
        m.dev_auroc = auroc(preds, dev_labels);
      } catch (const MetricError&) {
      }
    }
    result.history.push_back(m);

    const bool improved = m.dev_auroc && (!best_auroc || *m.dev_auroc > *best_auroc);
    // until some epoch yields a defined AUROC, keep the latest weights
    if (improved || !best_auroc) {
      if (improved) best_auroc = m.dev_auroc;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

VLModel pretrain_itm(VLModel model, const std::vector<Example>& pairs, const TrainConfig& config,
                     std::size_t steps) {
  model.head.class_semantics = kItmSemantics;
  train_steps(model, pairs, config, steps);
  return model;
}

VLModel transfer_itm_head(VLModel pretrained) {
  if (pretrained.head.class_semantics != kItmSemantics) {
    throw ConfigError("cannot transfer head with semantics (" + pretrained.head.class_semantics[0] +
                      ", " + pretrained.head.class_semantics[1] + "); expected an ITM head");
  }
  pretrained.head = swap_head_classes(pretrained.head);
  // (match, not match) now sits where (benign, hateful) is read
  pretrained.head.class_semantics = kHatefulSemantics;
  return pretrained;
}

VLModel with_random_head(VLModel model, std::uint64_t seed) {
  model.head = random_head(model.config.d_h, seed, kHatefulSemantics);
  return model;
}

}  // namespace memetag
