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

#include "memetag/app/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "memetag/hashing.hpp"

namespace memetag::app {

namespace {

void check_keys(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigFileError("'" + section + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw ConfigFileError("unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& target, const std::string& section) {
  const YAML::Node value = node[key];
  if (!value) return;
  try {
    target = value.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigFileError("invalid value for '" + section + "." + key + "'");
  }
}

void emit_double(YAML::Emitter& out, const char* key, double value) {
  out << YAML::Key << key << YAML::Value << value;
}

}  // namespace

std::vector<MemberSettings> RunConfig::default_members() {
  // Four members stand in for the four architectures of the original
  // ensemble: two with transferred ITM heads, two with random heads.
  return {{"vl_tags", "random", 0}, {"itm_transfer", "itm", 1}, {"vl_tags_b", "random", 2},
          {"itm_transfer_b", "itm", 3}};
}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  return p.is_absolute() ? p : (base_dir / p).lexically_normal();
}

std::filesystem::path RunConfig::split_path(const std::string& split) const {
  if (split == "train") return resolve(paths.train);
  if (split == "dev") return resolve(paths.dev);
  if (split == "test") return resolve(paths.test);
  throw ConfigFileError("unknown split '" + split + "' (expected train, dev or test)");
}

ProviderConfig RunConfig::provider_config() const {
  ProviderConfig c;
  c.kind = provider.kind;
  c.seed = provider.seed;
  c.d_v = provider.d_v;
  c.max_regions = provider.max_regions;
  if (!provider.path.empty()) c.path = resolve(provider.path);
  return c;
}

ModelConfig RunConfig::model_config(std::size_t vocab_size, std::uint64_t model_seed) const {
  ModelConfig c;
  c.d_h = model.d_h;
  c.n_layers = model.n_layers;
  c.n_heads = model.n_heads;
  c.d_ff = model.d_ff;
  c.dropout = model.dropout;
  c.vocab_size = vocab_size;
  c.d_v = provider.d_v;
  c.max_len = inputs.max_len;
  c.seed = model_seed;
  return c;
}

TrainConfig RunConfig::train_config(std::uint64_t train_seed) const {
  TrainConfig c;
  c.lr = train.lr;
  c.batch_size = train.batch_size;
  c.epochs = train.epochs;
  c.seed = train_seed;
  return c;
}

TrainConfig RunConfig::itm_train_config(std::uint64_t train_seed) const {
  TrainConfig c;
  c.lr = itm.lr;
  c.batch_size = itm.batch_size;
  c.seed = train_seed;
  return c;
}

void RunConfig::validate() const {
  if (provider.kind != "synthetic" && provider.kind != "file")
    throw ConfigFileError("provider.kind must be 'synthetic' or 'file'");
  if (provider.kind == "file" && provider.path.empty())
    throw ConfigFileError("provider.path is required for the file provider");
  if (provider.d_v == 0 || provider.max_regions == 0)
    throw ConfigFileError("provider.d_v and provider.max_regions must be positive");
  if (enrichment.client != "fixture" && enrichment.client != "web")
    throw ConfigFileError("enrichment.client must be 'fixture' or 'web'");
  if (enrichment.workers == 0) throw ConfigFileError("enrichment.workers must be positive");
  if (inputs.max_len < 4) throw ConfigFileError("inputs.max_len must be at least 4");
  if (model.d_h == 0 || model.n_layers == 0 || model.n_heads == 0 || model.d_ff == 0)
    throw ConfigFileError("model dimensions must be positive");
  if (model.d_h % model.n_heads != 0) throw ConfigFileError("model.d_h must be divisible by model.n_heads");
  if (!(model.dropout >= 0.0 && model.dropout < 1.0)) throw ConfigFileError("model.dropout must be in [0,1)");
  if (!(train.lr >= 0.0) || train.batch_size == 0) throw ConfigFileError("train.lr must be >= 0 and train.batch_size > 0");
  if (!(itm.lr >= 0.0) || itm.batch_size == 0) throw ConfigFileError("itm.lr must be >= 0 and itm.batch_size > 0");
  if (ensemble_method != "mean" && ensemble_method != "rank_mean")
    throw ConfigFileError("ensemble.method must be 'mean' or 'rank_mean'");
  if (members.empty()) throw ConfigFileError("ensemble.members must not be empty");
  std::set<std::string> names;
  for (const auto& m : members) {
    if (m.name.empty() || m.name.find_first_of("/\\ ") != std::string::npos)
      throw ConfigFileError("ensemble member names must be non-empty and contain no spaces or slashes");
    if (!names.insert(m.name).second) throw ConfigFileError("duplicate ensemble member '" + m.name + "'");
    if (m.head != "random" && m.head != "itm")
      throw ConfigFileError("member '" + m.name + "': head must be 'random' or 'itm'");
  }
}

RunConfig parse_run_config(const std::string& yaml, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw ConfigFileError(std::string("config is not valid YAML: ") + e.what());
  }
  RunConfig c;
  c.base_dir = base_dir;
  if (!root || root.IsNull()) return c;
  check_keys(root, "config", {"seed", "paths", "provider", "enrichment", "inputs", "model", "train", "itm", "ensemble"});
  read(root, "seed", c.seed, "config");

  if (auto n = root["paths"]) {
    check_keys(n, "paths", {"train", "dev", "test", "fixtures", "cache", "out", "image_root"});
    read(n, "train", c.paths.train, "paths");
    read(n, "dev", c.paths.dev, "paths");
    read(n, "test", c.paths.test, "paths");
    read(n, "fixtures", c.paths.fixtures, "paths");
    read(n, "cache", c.paths.cache, "paths");
    read(n, "out", c.paths.out, "paths");
    read(n, "image_root", c.paths.image_root, "paths");
  }
  if (auto n = root["provider"]) {
    check_keys(n, "provider", {"kind", "seed", "d_v", "max_regions", "path"});
    read(n, "kind", c.provider.kind, "provider");
    read(n, "seed", c.provider.seed, "provider");
    read(n, "d_v", c.provider.d_v, "provider");
    read(n, "max_regions", c.provider.max_regions, "provider");
    read(n, "path", c.provider.path, "provider");
  }
  if (auto n = root["enrichment"]) {
    check_keys(n, "enrichment", {"client", "max_entities", "retries", "workers"});
    read(n, "client", c.enrichment.client, "enrichment");
    read(n, "max_entities", c.enrichment.max_entities, "enrichment");
    read(n, "retries", c.enrichment.retries, "enrichment");
    read(n, "workers", c.enrichment.workers, "enrichment");
  }
  if (auto n = root["inputs"]) {
    check_keys(n, "inputs", {"max_len", "include_entities", "include_person_tags"});
    read(n, "max_len", c.inputs.max_len, "inputs");
    read(n, "include_entities", c.inputs.include_entities, "inputs");
    read(n, "include_person_tags", c.inputs.include_person_tags, "inputs");
  }
  if (auto n = root["model"]) {
    check_keys(n, "model", {"d_h", "n_layers", "n_heads", "d_ff", "dropout"});
    read(n, "d_h", c.model.d_h, "model");
    read(n, "n_layers", c.model.n_layers, "model");
    read(n, "n_heads", c.model.n_heads, "model");
    read(n, "d_ff", c.model.d_ff, "model");
    read(n, "dropout", c.model.dropout, "model");
  }
  if (auto n = root["train"]) {
    check_keys(n, "train", {"lr", "batch_size", "epochs"});
    read(n, "lr", c.train.lr, "train");
    read(n, "batch_size", c.train.batch_size, "train");
    read(n, "epochs", c.train.epochs, "train");
  }
  if (auto n = root["itm"]) {
    check_keys(n, "itm", {"steps", "batch_size", "lr"});
    read(n, "steps", c.itm.steps, "itm");
    read(n, "batch_size", c.itm.batch_size, "itm");
    read(n, "lr", c.itm.lr, "itm");
  }
  if (auto n = root["ensemble"]) {
    check_keys(n, "ensemble", {"method", "members"});
    read(n, "method", c.ensemble_method, "ensemble");
    if (auto ms = n["members"]) {
      if (!ms.IsSequence()) throw ConfigFileError("'ensemble.members' must be a list");
      c.members.clear();
      for (const auto& m : ms) {
        check_keys(m, "ensemble.members[]", {"name", "head", "seed_offset"});
        MemberSettings member;
        read(m, "name", member.name, "ensemble.members[]");
        read(m, "head", member.head, "ensemble.members[]");
        read(m, "seed_offset", member.seed_offset, "ensemble.members[]");
        c.members.push_back(std::move(member));
      }
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigFileError("cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  auto dir = path.parent_path();
  if (dir.empty()) dir = ".";
  return parse_run_config(text.str(), dir);
}

std::string dump_run_config(const RunConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed;

  out << YAML::Key << "paths" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "train" << YAML::Value << c.paths.train;
  out << YAML::Key << "dev" << YAML::Value << c.paths.dev;
  out << YAML::Key << "test" << YAML::Value << c.paths.test;
  out << YAML::Key << "fixtures" << YAML::Value << c.paths.fixtures;
  out << YAML::Key << "cache" << YAML::Value << c.paths.cache;
  out << YAML::Key << "out" << YAML::Value << c.paths.out;
  out << YAML::Key << "image_root" << YAML::Value << c.paths.image_root;
  out << YAML::EndMap;

  out << YAML::Key << "provider" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << c.provider.kind;
  out << YAML::Key << "seed" << YAML::Value << c.provider.seed;
  out << YAML::Key << "d_v" << YAML::Value << c.provider.d_v;
  out << YAML::Key << "max_regions" << YAML::Value << c.provider.max_regions;
  out << YAML::Key << "path" << YAML::Value << c.provider.path;
  out << YAML::EndMap;

  out << YAML::Key << "enrichment" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "client" << YAML::Value << c.enrichment.client;
  out << YAML::Key << "max_entities" << YAML::Value << c.enrichment.max_entities;
  out << YAML::Key << "retries" << YAML::Value << c.enrichment.retries;
  out << YAML::Key << "workers" << YAML::Value << c.enrichment.workers;
  out << YAML::EndMap;

  out << YAML::Key << "inputs" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "max_len" << YAML::Value << c.inputs.max_len;
  out << YAML::Key << "include_entities" << YAML::Value << c.inputs.include_entities;
  out << YAML::Key << "include_person_tags" << YAML::Value << c.inputs.include_person_tags;
  out << YAML::EndMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "d_h" << YAML::Value << c.model.d_h;
  out << YAML::Key << "n_layers" << YAML::Value << c.model.n_layers;
  out << YAML::Key << "n_heads" << YAML::Value << c.model.n_heads;
  out << YAML::Key << "d_ff" << YAML::Value << c.model.d_ff;
  emit_double(out, "dropout", c.model.dropout);
  out << YAML::EndMap;

  out << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  emit_double(out, "lr", c.train.lr);
  out << YAML::Key << "batch_size" << YAML::Value << c.train.batch_size;
  out << YAML::Key << "epochs" << YAML::Value << c.train.epochs;
  out << YAML::EndMap;

  out << YAML::Key << "itm" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "steps" << YAML::Value << c.itm.steps;
  out << YAML::Key << "batch_size" << YAML::Value << c.itm.batch_size;
  emit_double(out, "lr", c.itm.lr);
  out << YAML::EndMap;

  out << YAML::Key << "ensemble" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "method" << YAML::Value << c.ensemble_method;
  out << YAML::Key << "members" << YAML::Value << YAML::BeginSeq;
  for (const auto& m : c.members) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << m.name;
    out << YAML::Key << "head" << YAML::Value << m.head;
    out << YAML::Key << "seed_offset" << YAML::Value << m.seed_offset;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void save_run_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigFileError("cannot write config '" + path.string() + "'");
  f << dump_run_config(config);
}

std::string config_hash(const RunConfig& config) { return hash_string(dump_run_config(config)); }

}  // namespace memetag::app
