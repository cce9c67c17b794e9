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
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "memetag/feature_provider.hpp"
#include "memetag/model/config.hpp"

namespace memetag::app {

class ConfigFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Paths as written in the config. Relative entries resolve against the
/// directory holding the config file.
struct PathSettings {
  std::string train = "train.jsonl";
  std::string dev = "dev.jsonl";
  std::string test = "test.jsonl";
  std::string fixtures = "fixtures.jsonl";
  std::string cache = "cache";
  std::string out = "out";
  std::string image_root = "";  // live entity client only

  friend bool operator==(const PathSettings&, const PathSettings&) = default;
};

struct ProviderSettings {
  std::string kind = "synthetic";  // synthetic | file
  std::uint64_t seed = 7;
  std::size_t d_v = 64;
  std::size_t max_regions = 10;
  std::string path = "";  // file provider input

  friend bool operator==(const ProviderSettings&, const ProviderSettings&) = default;
};

struct EnrichmentSettings {
  std::string client = "fixture";  // fixture | web
  std::size_t max_entities = 5;
  std::size_t retries = 2;
  std::size_t workers = 4;

  friend bool operator==(const EnrichmentSettings&, const EnrichmentSettings&) = default;
};

struct InputSettings {
  std::size_t max_len = 64;
  bool include_entities = true;
  bool include_person_tags = true;

  friend bool operator==(const InputSettings&, const InputSettings&) = default;
};

struct ModelSettings {
  std::size_t d_h = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
  double dropout = 0.1;

  friend bool operator==(const ModelSettings&, const ModelSettings&) = default;
};

struct TrainSettings {
  double lr = 1e-3;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;

  friend bool operator==(const TrainSettings&, const TrainSettings&) = default;
};

/// Image-text matching pretraining. Larger batches than fine-tuning help the
/// toy backbone leave its initial plateau.
struct ItmSettings {
  std::size_t steps = 1000;
  std::size_t batch_size = 32;
  double lr = 1e-3;

  friend bool operator==(const ItmSettings&, const ItmSettings&) = default;
};

/// One ensemble member: its own seed offset and head initialisation.
struct MemberSettings {
  std::string name;
  std::string head = "random";  // random | itm
  std::uint64_t seed_offset = 0;

  friend bool operator==(const MemberSettings&, const MemberSettings&) = default;
};

struct RunConfig {
  std::uint64_t seed = 1;
  PathSettings paths;
  ProviderSettings provider;
  EnrichmentSettings enrichment;
  InputSettings inputs;
  ModelSettings model;
  TrainSettings train;
  ItmSettings itm;
  std::string ensemble_method = "mean";
  std::vector<MemberSettings> members = default_members();

  /// Directory relative paths resolve against. Not serialized.
  std::filesystem::path base_dir = ".";

  static std::vector<MemberSettings> default_members();

  std::filesystem::path resolve(const std::string& path) const;
  std::filesystem::path out_dir() const { return resolve(paths.out); }
  std::filesystem::path split_path(const std::string& split) const;

  ProviderConfig provider_config() const;
  ModelConfig model_config(std::size_t vocab_size, std::uint64_t seed) const;
  TrainConfig train_config(std::uint64_t seed) const;
  TrainConfig itm_train_config(std::uint64_t seed) const;

  /// Throws ConfigFileError describing the first invalid setting.
  void validate() const;

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.seed == b.seed && a.paths == b.paths && a.provider == b.provider &&
           a.enrichment == b.enrichment && a.inputs == b.inputs && a.model == b.model &&
           a.train == b.train && a.itm == b.itm && a.ensemble_method == b.ensemble_method &&
           a.members == b.members;
  }
};

inline const std::vector<std::string> kSplits = {"train", "dev", "test"};

/// YAML text. Absent keys keep their defaults; unknown keys are rejected.
RunConfig parse_run_config(const std::string& yaml, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& config);
void save_run_config(const RunConfig& config, const std::filesystem::path& path);

/// Fingerprint of the serialized settings (base_dir excluded).
std::string config_hash(const RunConfig& config);

}  // namespace memetag::app
