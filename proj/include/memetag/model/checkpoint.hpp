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

#include <filesystem>
#include <stdexcept>
#include <string>

#include "memetag/input_builder.hpp"
#include "memetag/model/parameters.hpp"

namespace memetag {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VocabularyMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

/// JSON container: format tag, model config, vocabulary hash, head class
/// semantics and every parameter tensor (row-major, shortest round-trip
/// decimal form, so reloads are bit-exact).
void save_checkpoint(const VLModel& model, const std::string& vocab_hash,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
  VLModel model;
  std::string vocab_hash;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Refuses a checkpoint trained against a different vocabulary.
VLModel load_checkpoint(const std::filesystem::path& path, const Vocabulary& vocab);

}  // namespace memetag
