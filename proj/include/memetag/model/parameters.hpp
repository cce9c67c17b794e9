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

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "memetag/model/config.hpp"

namespace memetag {

using Mat = Eigen::MatrixXd;

/// Two-way classifier on the pooled [CLS] vector: logits = weight * h + bias.
struct ClassifierHead {
  Mat weight;  // 2 x d_h
  Mat bias;    // 1 x 2
  std::array<std::string, 2> class_semantics;

  /// Row-by-row sequential dot products, so swapping rows swaps logits exactly.
  Eigen::Vector2d apply(const Eigen::VectorXd& pooled) const;
  void validate() const;
};

inline const std::array<std::string, 2> kItmSemantics = {"image-text-not-match", "image-text-match"};
inline const std::array<std::string, 2> kHatefulSemantics = {"benign", "hateful"};

/// Exchanges weight rows, bias entries and class names.
ClassifierHead swap_head_classes(const ClassifierHead& head);

struct EncoderLayer {
  Mat wq, bq, wk, bk, wv, bv, wo, bo;  // d_h x d_h, 1 x d_h
  Mat ln1_gamma, ln1_beta;
  Mat w1, b1;                          // d_h x d_ff, 1 x d_ff
  Mat w2, b2;                          // d_ff x d_h, 1 x d_h
  Mat ln2_gamma, ln2_beta;
};

/// Embeddings, encoder stack and [CLS] pooler. Linear maps act on row
/// vectors: y = x * W + b.
struct Backbone {
  Mat token_emb;     // vocab x d_h
  Mat segment_emb;   // 4 x d_h
  Mat position_emb;  // max_len x d_h
  Mat visual_w;      // d_v x d_h
  Mat visual_b;      // 1 x d_h
  Mat emb_ln_gamma, emb_ln_beta;
  std::vector<EncoderLayer> layers;
  Mat pool_w, pool_b;
};

struct VLModel {
  ModelConfig config;
  Backbone backbone;
  ClassifierHead head;

  /// Visits every parameter tensor with a stable dotted name.
  template <typename Fn>
  void visit(Fn&& fn);
  template <typename Fn>
  void visit(Fn&& fn) const;

  /// Same shapes, all zeros; used as a gradient accumulator.
  VLModel zeros_like() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
};

/// Normal(0, 0.02) weights, unit layer-norm gains, zero biases. Driven by a
/// counter-based stream so initialisation depends only on config.seed.
VLModel init_model(const ModelConfig& config,
                   const std::array<std::string, 2>& semantics = kHatefulSemantics);
ClassifierHead random_head(std::size_t d_h, std::uint64_t seed,
                           const std::array<std::string, 2>& semantics = kHatefulSemantics);

template <typename Model, typename Fn>
void visit_parameters(Model& m, Fn&& fn) {
  auto& b = m.backbone;
  fn("embeddings.token", b.token_emb);
  fn("embeddings.segment", b.segment_emb);
  fn("embeddings.position", b.position_emb);
  fn("embeddings.visual_w", b.visual_w);
  fn("embeddings.visual_b", b.visual_b);
  fn("embeddings.ln_gamma", b.emb_ln_gamma);
  fn("embeddings.ln_beta", b.emb_ln_beta);
  for (std::size_t i = 0; i < b.layers.size(); ++i) {
    auto& l = b.layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    fn(p + "wq", l.wq);
    fn(p + "bq", l.bq);
    fn(p + "wk", l.wk);
    fn(p + "bk", l.bk);
    fn(p + "wv", l.wv);
    fn(p + "bv", l.bv);
    fn(p + "wo", l.wo);
    fn(p + "bo", l.bo);
    fn(p + "ln1_gamma", l.ln1_gamma);
    fn(p + "ln1_beta", l.ln1_beta);
    fn(p + "w1", l.w1);
    fn(p + "b1", l.b1);
    fn(p + "w2", l.w2);
    fn(p + "b2", l.b2);
    fn(p + "ln2_gamma", l.ln2_gamma);
    fn(p + "ln2_beta", l.ln2_beta);
  }
  fn("pooler.w", b.pool_w);
  fn("pooler.b", b.pool_b);
  fn("head.weight", m.head.weight);
  fn("head.bias", m.head.bias);
}

template <typename Fn>
void VLModel::visit(Fn&& fn) {
  visit_parameters(*this, std::forward<Fn>(fn));
}

template <typename Fn>
void VLModel::visit(Fn&& fn) const {
  visit_parameters(*this, std::forward<Fn>(fn));
}

}  // namespace memetag
