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

#include "memetag/model/checkpoint.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

namespace memetag {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "memetag-checkpoint";
constexpr int kVersion = 1;

json config_to_json(const ModelConfig& c) {
  return {{"d_h", c.d_h},         {"n_layers", c.n_layers}, {"n_heads", c.n_heads},
          {"d_ff", c.d_ff},       {"vocab_size", c.vocab_size}, {"d_v", c.d_v},
          {"max_len", c.max_len}, {"dropout", c.dropout},   {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.d_h = j.at("d_h").get<std::size_t>();
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.d_v = j.at("d_v").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const VLModel& model, const std::string& vocab_hash,
                     const std::filesystem::path& path) {
  json params = json::object();
  model.visit([&](const std::string& name, const Mat& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    }
    params[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
  });
  const json doc = {{"format", kFormat},
                    {"version", kVersion},
                    {"config", config_to_json(model.config)},
                    {"vocab_hash", vocab_hash},
                    {"head_semantics", model.head.class_semantics},
                    {"params", params}};
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
    out << doc.dump();
    if (!out.flush()) throw CheckpointError("cannot write checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
    if (doc.at("format") != kFormat) throw CheckpointError(path.string() + " is not a memetag checkpoint");
    if (doc.at("version").get<int>() != kVersion) {
      throw CheckpointError(path.string() + ": unsupported checkpoint version");
    }
    LoadedCheckpoint out;
    out.vocab_hash = doc.at("vocab_hash").get<std::string>();
    out.model = init_model(config_from_json(doc.at("config")));
    const auto& params = doc.at("params");
    out.model.visit([&](const std::string& name, Mat& m) {
      if (!params.contains(name)) throw CheckpointError(path.string() + ": missing tensor " + name);
      const auto& t = params[name];
      if (t.at("rows").get<Eigen::Index>() != m.rows() || t.at("cols").get<Eigen::Index>() != m.cols()) {
        throw CheckpointError(path.string() + ": tensor " + name + " has the wrong shape");
      }
      const auto& data = t.at("data");
      if (static_cast<Eigen::Index>(data.size()) != m.size()) {
        throw CheckpointError(path.string() + ": tensor " + name + " has the wrong size");
      }
      std::size_t k = 0;
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = data[k++].get<double>();
      }
    });
    const auto sem = doc.at("head_semantics").get<std::vector<std::string>>();
    if (sem.size() != 2) throw CheckpointError(path.string() + ": head needs two class names");
    out.model.head.class_semantics = {sem[0], sem[1]};
    out.model.head.validate();
    return out;
  } catch (const json::exception& e) {
    throw CheckpointError(path.string() + ": malformed checkpoint: " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

VLModel load_checkpoint(const std::filesystem::path& path, const Vocabulary& vocab) {
  LoadedCheckpoint ckpt = load_checkpoint(path);
  if (ckpt.vocab_hash != vocab.hash()) {
    throw VocabularyMismatchError("checkpoint " + path.string() + " was trained with vocabulary " +
                                  ckpt.vocab_hash + " but the loaded vocabulary is " + vocab.hash());
  }
  if (ckpt.model.config.vocab_size != vocab.size()) {
    throw VocabularyMismatchError("checkpoint vocabulary size differs from the loaded vocabulary");
  }
  return std::move(ckpt.model);
}

}  // namespace memetag
