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

#include "memetag/app/manifest.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "memetag/hashing.hpp"

namespace memetag::app {

using nlohmann::json;

void Manifest::add_input(const std::filesystem::path& path) {
  inputs[path.generic_string()] = hash_file(path);
}

void Manifest::add_output(const std::filesystem::path& path) {
  outputs[path.generic_string()] = hash_file(path);
}

std::string Manifest::to_json() const {
  json j;
  j["stage"] = stage;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["metrics"] = metrics;
  return j.dump(2) + "\n";
}

Manifest Manifest::from_json(const std::string& text) {
  const json j = json::parse(text);
  Manifest m;
  m.stage = j.at("stage").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
  m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  m.metrics = j.value("metrics", std::map<std::string, double>{});
  return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write manifest '" + path.string() + "'");
    f << manifest.to_json();
  }
  std::filesystem::rename(tmp, path);
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read manifest '" + path.string() + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return Manifest::from_json(s.str());
}

}  // namespace memetag::app
