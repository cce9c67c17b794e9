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

#include "memetag/model/config.hpp"
#include "memetag/model/parameters.hpp"

namespace memetag {

/// Adaptive-moment gradient descent with bias correction.
class Adam {
 public:
  Adam(const VLModel& shape, const TrainConfig& config);

  void step(VLModel& model, const VLModel& grads);
  std::size_t steps() const { return t_; }

 private:
  TrainConfig config_;
  VLModel m_;
  VLModel v_;
  std::size_t t_ = 0;
};

}  // namespace memetag
