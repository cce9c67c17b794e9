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

#include "memetag/model/config.hpp"

#include "memetag/input_builder.hpp"

namespace memetag {

void ModelConfig::validate() const {
  if (d_h == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0 || vocab_size == 0 || d_v == 0 ||
      max_len == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (d_h % n_heads != 0) {
    throw ConfigError("d_h (" + std::to_string(d_h) + ") must be divisible by n_heads (" +
                      std::to_string(n_heads) + ")");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0,1)");
}

}  // namespace memetag
