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

#include <vector>

#include <Eigen/Dense>

#include "memetag/feature_provider.hpp"
#include "memetag/input_builder.hpp"
#include "memetag/model/parameters.hpp"

namespace memetag {

/// Visual feature table of one image: row 0 whole image, row k region k.
Mat feature_table(const ImageRegions& regions);

/// Inverted dropout driven by a seeded stream. A null stream or zero rate
/// disables it (evaluation mode).
struct Dropout {
  double rate = 0.0;
  SeededStream* stream = nullptr;
  bool active() const { return stream != nullptr && rate > 0.0; }
};

struct LayerNormCache {
  Mat xhat;
  Eigen::VectorXd rstd;
};

struct EncoderLayerCache {
  Mat input;
  Mat q, k, v;
  std::vector<Mat> probs;  // one n x n matrix per head
  Mat attn;                // concatenated head outputs
  Mat attn_mask;
  LayerNormCache ln1;
  Mat h1;
  Mat f1;  // pre-activation
  Mat g;   // GELU output
  Mat ffn_mask;
  LayerNormCache ln2;
};

/// Activations kept for the backward pass. Only the unpadded prefix of the
/// sequence is ever computed.
struct ForwardCache {
  std::size_t n = 0;
  std::vector<std::int32_t> tokens, segments, positions;
  Mat visual_rows;  // n x d_v, features[visual_index[i]]
  LayerNormCache emb_ln;
  Mat emb_mask;
  std::vector<EncoderLayerCache> layers;
  Eigen::RowVectorXd cls;
  Eigen::VectorXd pooled;  // after tanh and dropout
  Eigen::VectorXd pooled_mask;
  Eigen::Vector2d logits;
};

/// Pooled [CLS] representation fed to the classifier head.
Eigen::VectorXd encode(const VLModel& model, const InputSequence& seq, const Mat& features,
                       ForwardCache* cache = nullptr, Dropout dropout = {});

/// Two-way logits. Padding positions are never attended to: attention runs
/// over the unpadded prefix only.
Eigen::Vector2d forward(const VLModel& model, const InputSequence& seq, const Mat& features,
                        ForwardCache* cache = nullptr, Dropout dropout = {});

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(logits).
void backward(const VLModel& model, const ForwardCache& cache, const Eigen::Vector2d& dlogits,
              VLModel& grads);

Eigen::Vector2d softmax2(const Eigen::Vector2d& logits);

/// Cross-entropy of a 2-way softmax against `label`; optionally returns the
/// logit gradient.
double cross_entropy(const Eigen::Vector2d& logits, int label, Eigen::Vector2d* dlogits = nullptr);

}  // namespace memetag
