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

#include "memetag/model/parameters.hpp"

#include <cmath>
#include <cstdlib>

#include "memetag/feature_provider.hpp"
#include "memetag/hashing.hpp"
#include "memetag/input_builder.hpp"

namespace memetag {

namespace {

constexpr double kInitStd = 0.02;

void fill_normal(Mat& m, std::uint64_t seed, const std::string& name) {
  SeededStream stream(seed, fnv1a64(name), 0);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = kInitStd * stream.normal();
  }
}

}  // namespace

Eigen::Vector2d ClassifierHead::apply(const Eigen::VectorXd& pooled) const {
  Eigen::Vector2d logits;
  for (int k = 0; k < 2; ++k) {
    double acc = bias(0, k);
    for (Eigen::Index j = 0; j < weight.cols(); ++j) acc += weight(k, j) * pooled(j);
    logits(k) = acc;
  }
  return logits;
}

void ClassifierHead::validate() const {
  if (weight.rows() != 2 || bias.rows() != 1 || bias.cols() != 2) {
    throw ConfigError("classifier head must be 2 x d_h with a length-2 bias");
  }
  if (!weight.allFinite() || !bias.allFinite()) throw ConfigError("classifier head has non-finite entries");
  if (class_semantics[0].empty() || class_semantics[0] == class_semantics[1]) {
    throw ConfigError("classifier head needs two distinct class names");
  }
}

ClassifierHead swap_head_classes(const ClassifierHead& head) {
  head.validate();
  ClassifierHead out = head;
  out.weight.row(0) = head.weight.row(1);
  out.weight.row(1) = head.weight.row(0);
  out.bias(0, 0) = head.bias(0, 1);
  out.bias(0, 1) = head.bias(0, 0);
  out.class_semantics = {head.class_semantics[1], head.class_semantics[0]};
  return out;
}

VLModel VLModel::zeros_like() const {
  VLModel z = *this;
  z.visit([](const std::string&, Mat& m) { m.setZero(); });
  return z;
}

std::size_t VLModel::parameter_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

bool VLModel::all_finite() const {
  bool ok = true;
  visit([&](const std::string&, const Mat& m) { ok = ok && m.allFinite(); });
  return ok;
}

ClassifierHead random_head(std::size_t d_h, std::uint64_t seed,
                           const std::array<std::string, 2>& semantics) {
  ClassifierHead head;
  head.weight.resize(2, static_cast<Eigen::Index>(d_h));
  fill_normal(head.weight, seed, "head.weight");
  head.bias = Mat::Zero(1, 2);
  head.class_semantics = semantics;
  return head;
}

VLModel init_model(const ModelConfig& config, const std::array<std::string, 2>& semantics) {
  config.validate();
  const auto d = static_cast<Eigen::Index>(config.d_h);
  const auto f = static_cast<Eigen::Index>(config.d_ff);
  VLModel m;
  m.config = config;
  auto& b = m.backbone;
  b.token_emb.resize(static_cast<Eigen::Index>(config.vocab_size), d);
  b.segment_emb.resize(kNumSegments, d);
  b.position_emb.resize(static_cast<Eigen::Index>(config.max_len), d);
  b.visual_w.resize(static_cast<Eigen::Index>(config.d_v), d);
  b.visual_b = Mat::Zero(1, d);
  b.emb_ln_gamma = Mat::Ones(1, d);
  b.emb_ln_beta = Mat::Zero(1, d);
  b.layers.resize(config.n_layers);
  for (auto& l : b.layers) {
    l.wq.resize(d, d);
    l.wk.resize(d, d);
    l.wv.resize(d, d);
    l.wo.resize(d, d);
    l.bq = l.bk = l.bv = l.bo = Mat::Zero(1, d);
    l.ln1_gamma = l.ln2_gamma = Mat::Ones(1, d);
    l.ln1_beta = l.ln2_beta = Mat::Zero(1, d);
    l.w1.resize(d, f);
    l.b1 = Mat::Zero(1, f);
    l.w2.resize(f, d);
    l.b2 = Mat::Zero(1, d);
  }
  b.pool_w.resize(d, d);
  b.pool_b = Mat::Zero(1, d);
  m.head = random_head(config.d_h, config.seed, semantics);

  m.visit([&](const std::string& name, Mat& p) {
    const bool is_bias = name.ends_with("_b") || name.ends_with(".b") || name.ends_with("beta") ||
                         name.ends_with("bias") || name.ends_with(".bq") || name.ends_with(".bk") ||
                         name.ends_with(".bv") || name.ends_with(".bo") || name.ends_with(".b1") ||
                         name.ends_with(".b2");
    if (is_bias || name.ends_with("gamma") || name == "head.weight") return;
    fill_normal(p, config.seed, name);
  });
  return m;
}

}  // namespace memetag
