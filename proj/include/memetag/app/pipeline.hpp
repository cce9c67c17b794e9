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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memetag/app/manifest.hpp"
#include "memetag/app/run_config.hpp"

namespace memetag::app {

/// A stage's prerequisite file is absent (CLI exit status 2).
class MissingArtifactError : public std::runtime_error {
 public:
  explicit MissingArtifactError(const std::filesystem::path& path, const std::string& hint = "");
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Inputs exist but are unusable (CLI exit status 1).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StageOptions {
  std::string split = "test";
  std::optional<std::string> method;        // ensemble: overrides the config
  std::vector<std::filesystem::path> files;  // ensemble members / evaluate input
  std::size_t count = 200;                  // make-corpus: number of memes
};

struct StageResult {
  Manifest manifest;
  std::vector<std::string> report;  // human-readable summary lines
  std::size_t external_calls = 0;   // enrich only
};

/// File layout under the output directory. Stages talk only through these.
namespace layout {
std::filesystem::path enriched(const std::filesystem::path& out, const std::string& split);
std::filesystem::path vocabulary(const std::filesystem::path& out);
std::filesystem::path features(const std::filesystem::path& out);
std::filesystem::path inputs(const std::filesystem::path& out, const std::string& split);
std::filesystem::path itm_checkpoint(const std::filesystem::path& out);
std::filesystem::path checkpoint(const std::filesystem::path& out, const std::string& member);
std::filesystem::path training_log(const std::filesystem::path& out, const std::string& member);
std::filesystem::path predictions(const std::filesystem::path& out, const std::string& member,
                                  const std::string& split);
std::filesystem::path ensemble_predictions(const std::filesystem::path& out, const std::string& split);
std::filesystem::path metrics(const std::filesystem::path& out, const std::string& stem);
std::filesystem::path manifest(const std::filesystem::path& out, const std::string& stage);
}  // namespace layout

/// Pipeline order, followed by the corpus generator.
const std::vector<std::string>& stage_names();

StageResult run_enrich(const RunConfig& config);
StageResult run_build_inputs(const RunConfig& config);
StageResult run_pretrain_itm(const RunConfig& config);
StageResult run_train(const RunConfig& config);
StageResult run_predict(const RunConfig& config, const StageOptions& options);
StageResult run_ensemble(const RunConfig& config, const StageOptions& options);
StageResult run_evaluate(const RunConfig& config, const StageOptions& options);
/// Writes a synthetic corpus (splits and fixture file) to the configured paths.
StageResult run_make_corpus(const RunConfig& config, const StageOptions& options);

/// Dispatches by name and writes the stage manifest.
StageResult run_stage(const std::string& command, const RunConfig& config,
                      const StageOptions& options = {});

}  // namespace memetag::app
