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

#include "memetag/model/optimizer.hpp"

#include <cmath>
#include <vector>

namespace memetag {

namespace {

template <typename Model>
auto tensors(Model& model) {
  using Ptr = std::conditional_t<std::is_const_v<Model>, const Mat*, Mat*>;
  std::vector<Ptr> out;
  model.visit([&](const std::string&, auto& m) { out.push_back(&m); });
  return out;
}

}  // namespace

Adam::Adam(const VLModel& shape, const TrainConfig& config)
    : config_(config), m_(shape.zeros_like()), v_(shape.zeros_like()) {}

void Adam::step(VLModel& model, const VLModel& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  auto params = tensors(model);
  auto gs = tensors(grads);
  auto ms = tensors(m_);
  auto vs = tensors(v_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Mat& p = *params[i];
    const Mat& g = *gs[i];
    Mat& m = *ms[i];
    Mat& v = *vs[i];
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p.array() -= config_.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config_.adam_eps);
  }
}

}  // namespace memetag
