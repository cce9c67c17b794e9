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

#include "memetag/app/pipeline.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "memetag/disk_cache.hpp"
#include "memetag/enrichment.hpp"
#include "memetag/entity_clients.hpp"
#include "memetag/eval_ensemble.hpp"
#include "memetag/feature_provider.hpp"
#include "memetag/hashing.hpp"
#include "memetag/input_builder.hpp"
#include "memetag/model/checkpoint.hpp"
#include "memetag/model/dataset.hpp"
#include "memetag/model/training.hpp"
#include "memetag/synthetic_corpus.hpp"

namespace memetag::app {

namespace fs = std::filesystem;
using nlohmann::json;

MissingArtifactError::MissingArtifactError(const fs::path& path, const std::string& hint)
    : std::runtime_error("missing artifact: " + path.string() + (hint.empty() ? "" : " (" + hint + ")")),
      path_(path) {}

namespace layout {
fs::path enriched(const fs::path& out, const std::string& split) { return out / "enriched" / (split + ".jsonl"); }
fs::path vocabulary(const fs::path& out) { return out / "inputs" / "vocab.txt"; }
fs::path features(const fs::path& out) { return out / "inputs" / "features.jsonl"; }
fs::path inputs(const fs::path& out, const std::string& split) { return out / "inputs" / (split + ".jsonl"); }
fs::path itm_checkpoint(const fs::path& out) { return out / "pretrain" / "itm.ckpt.json"; }
fs::path checkpoint(const fs::path& out, const std::string& member) {
  return out / "models" / (member + ".ckpt.json");
}
fs::path training_log(const fs::path& out, const std::string& member) {
  return out / "models" / (member + ".log.json");
}
fs::path predictions(const fs::path& out, const std::string& member, const std::string& split) {
  return out / "predictions" / (member + "." + split + ".csv");
}
fs::path ensemble_predictions(const fs::path& out, const std::string& split) {
  return predictions(out, "ensemble", split);
}
fs::path metrics(const fs::path& out, const std::string& stem) { return out / "metrics" / (stem + ".json"); }
fs::path manifest(const fs::path& out, const std::string& stage) { return out / "manifests" / (stage + ".json"); }
}  // namespace layout

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"enrich", "build-inputs", "pretrain-itm", "train",
                                                 "predict", "ensemble", "evaluate", "make-corpus"};
  return names;
}

namespace {

constexpr const char* kApiKeyEnv = "MEMETAG_API_KEY";

void require(const fs::path& path, const std::string& hint) {
  if (!fs::exists(path)) throw MissingArtifactError(path, hint);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << text;
  }
  fs::rename(tmp, path);
}

Manifest new_manifest(const std::string& stage, const RunConfig& config) {
  Manifest m;
  m.stage = stage;
  m.config_hash = config_hash(config);
  m.seed = config.seed;
  return m;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << std::fixed << v;
  return s.str();
}

// --- enrichment helpers ---------------------------------------------------

class CountingEntityClient final : public EntityClient {
 public:
  explicit CountingEntityClient(EntityClient& inner) : inner_(inner) {}
  std::vector<EntityTag> detect_entities(MemeId id) override {
    ++calls;
    return inner_.detect_entities(id);
  }
  std::string name() const override { return inner_.name(); }
  std::atomic<std::size_t> calls{0};

 private:
  EntityClient& inner_;
};

class CountingFaceClient final : public FaceClient {
 public:
  explicit CountingFaceClient(FaceClient& inner) : inner_(inner) {}
  std::vector<FaceAttribute> detect_faces(MemeId id) override {
    ++calls;
    return inner_.detect_faces(id);
  }
  std::string name() const override { return inner_.name(); }
  std::atomic<std::size_t> calls{0};

 private:
  FaceClient& inner_;
};

// Used with the live entity client when no face fixture is available.
class NoFaceClient final : public FaceClient {
 public:
  std::vector<FaceAttribute> detect_faces(MemeId) override { return {}; }
  std::string name() const override { return "no-faces"; }
};

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  if (!fs::exists(root)) return files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[e.path().generic_string()] = hash_file(e.path());
  }
  return files;
}

std::vector<MemeRecord> load_split(const RunConfig& config, const std::string& split) {
  const fs::path path = config.split_path(split);
  require(path, split + " split");
  // test labels are optional; the other splits feed training and selection
  return load_records(path, split == "test" ? LabelPolicy::kOptional : LabelPolicy::kRequired);
}

// --- model input helpers --------------------------------------------------

struct InputRow {
  MemeId id = 0;
  std::optional<int> label;
  InputSequence seq;
};

std::string input_row_to_json(const InputRow& row) {
  json j;
  j["id"] = row.id;
  if (row.label) j["label"] = *row.label;
  j["sequence"] = json::parse(sequence_to_json(row.seq));
  return j.dump();
}

std::vector<InputRow> load_input_rows(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError(path, "run build-inputs first");
  std::vector<InputRow> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      InputRow row;
      row.id = j.at("id").get<MemeId>();
      if (j.contains("label")) row.label = j.at("label").get<int>();
      row.seq = sequence_from_json(j.at("sequence").dump());
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

struct ModelInputs {
  Vocabulary vocab;
  std::unique_ptr<FileRegionProvider> features;
};

ModelInputs load_model_inputs(const fs::path& out, const RunConfig& config) {
  require(layout::vocabulary(out), "run build-inputs first");
  require(layout::features(out), "run build-inputs first");
  ModelInputs m;
  m.vocab = Vocabulary::load(layout::vocabulary(out));
  m.features = std::make_unique<FileRegionProvider>(layout::features(out), config.provider.max_regions);
  return m;
}

std::vector<Example> load_examples(const fs::path& path, const ModelInputs& inputs) {
  std::vector<Example> out;
  for (auto& row : load_input_rows(path)) {
    const ImageRegions regions = inputs.features->get_regions(row.id);
    row.seq.validate(regions.table_size());
    Example ex;
    ex.id = row.id;
    ex.seq = std::move(row.seq);
    ex.features = feature_table(regions);
    ex.label = row.label.value_or(0);
    out.push_back(std::move(ex));
  }
  return out;
}

bool all_labeled(const fs::path& path) {
  for (const auto& row : load_input_rows(path)) {
    if (!row.label) return false;
  }
  return true;
}

json history_to_json(const FitResult& fit) {
  json h = json::array();
  for (const auto& e : fit.history) {
    json r;
    r["epoch"] = e.epoch;
    r["train_loss"] = e.train_loss;
    r["dev_auroc"] = e.dev_auroc ? json(*e.dev_auroc) : json(nullptr);
    r["dev_accuracy"] = e.dev_accuracy ? json(*e.dev_accuracy) : json(nullptr);
    h.push_back(r);
  }
  return h;
}

}  // namespace

StageResult run_enrich(const RunConfig& config) {
  StageResult result;
  result.manifest = new_manifest("enrich", config);
  const fs::path out = config.out_dir();

  std::map<std::string, std::vector<MemeRecord>> splits;
  for (const auto& split : kSplits) {
    splits[split] = load_split(config, split);
    result.manifest.add_input(config.split_path(split));
  }

  const auto provider = make_provider(config.provider_config());
  const fs::path fixtures = config.resolve(config.paths.fixtures);
  std::unique_ptr<FixtureClient> fixture;
  std::unique_ptr<WebDetectionClient> web;
  NoFaceClient no_faces;
  EntityClient* entity = nullptr;
  FaceClient* face = nullptr;

  if (config.enrichment.client == "fixture") {
    require(fixtures, "fixture file for the offline client");
    fixture = std::make_unique<FixtureClient>(fixtures);
    result.manifest.add_input(fixtures);
    entity = fixture.get();
    face = fixture.get();
  } else {
    const char* key = std::getenv(kApiKeyEnv);
    if (key == nullptr || *key == '\0')
      throw ValidationError(std::string("the web client needs an API key in $") + kApiKeyEnv);
    std::map<MemeId, std::string> images;
    for (const auto& [_, records] : splits) {
      for (const auto& r : records) images[r.id] = r.img;
    }
    web = std::make_unique<WebDetectionClient>(key, config.resolve(config.paths.image_root), std::move(images));
    entity = web.get();
    if (fs::exists(fixtures)) {
      // faces still come from precomputed attributes
      fixture = std::make_unique<FixtureClient>(fixtures);
      result.manifest.add_input(fixtures);
      face = fixture.get();
    } else {
      face = &no_faces;
    }
  }

  CountingEntityClient counted_entity(*entity);
  CountingFaceClient counted_face(*face);
  DiskCache cache(config.resolve(config.paths.cache));
  const auto before = snapshot(cache.root());

  EnrichmentOptions options;
  options.max_entities = config.enrichment.max_entities;
  options.retries = config.enrichment.retries;
  const EnrichmentClients clients{&counted_entity, &counted_face, &cache};

  for (const auto& split : kSplits) {
    const auto enriched = enrich_split(splits[split], *provider, clients, options, config.enrichment.workers);
    const fs::path path = layout::enriched(out, split);
    fs::create_directories(path.parent_path());
    write_enriched(enriched, path);
    result.manifest.add_output(path);
    std::size_t tagged = 0;
    for (const auto& m : enriched) tagged += m.person_tags.empty() ? 0 : 1;
    result.report.push_back(split + ": " + std::to_string(enriched.size()) + " memes, " + std::to_string(tagged) +
                            " with person tags");
  }
  for (const auto& [path, hash] : snapshot(cache.root())) {
    auto it = before.find(path);
    if (it == before.end() || it->second != hash) result.manifest.outputs[path] = hash;
  }

  result.external_calls = counted_entity.calls + counted_face.calls;
  result.manifest.metrics["external_calls"] = static_cast<double>(result.external_calls);
  result.report.push_back("external calls: " + std::to_string(result.external_calls));
  return result;
}

StageResult run_build_inputs(const RunConfig& config) {
  StageResult result;
  result.manifest = new_manifest("build-inputs", config);
  const fs::path out = config.out_dir();

  std::map<std::string, std::vector<EnrichedMeme>> splits;
  for (const auto& split : kSplits) {
    const fs::path path = layout::enriched(out, split);
    require(path, "run enrich first");
    splits[split] = load_enriched(path);
    result.manifest.add_input(path);
  }

  const Vocabulary vocab = build_vocabulary(splits["train"]);
  const fs::path vocab_path = layout::vocabulary(out);
  fs::create_directories(vocab_path.parent_path());
  vocab.save(vocab_path);
  result.manifest.add_output(vocab_path);

  const auto provider = make_provider(config.provider_config());
  if (provider->feature_dim() != config.provider.d_v)
    throw ValidationError("feature provider yields d_v=" + std::to_string(provider->feature_dim()) +
                          " but the config says " + std::to_string(config.provider.d_v));

  BuildOptions options;
  options.max_len = config.inputs.max_len;
  options.include_entities = config.inputs.include_entities;
  options.include_person_tags = config.inputs.include_person_tags;

  std::string feature_lines;
  std::set<MemeId> seen;
  for (const auto& split : kSplits) {
    std::string lines;
    for (const auto& meme : splits[split]) {
      const ImageRegions regions = provider->get_regions(meme.record.id);
      if (seen.insert(meme.record.id).second) feature_lines += regions_to_json_line(regions) + "\n";
      InputRow row{meme.record.id, meme.record.label, build_sequence(meme, regions, vocab, options)};
      lines += input_row_to_json(row) + "\n";
    }
    const fs::path path = layout::inputs(out, split);
    write_text(path, lines);
    result.manifest.add_output(path);
    result.report.push_back(split + ": " + std::to_string(splits[split].size()) + " sequences");
  }
  write_text(layout::features(out), feature_lines);
  result.manifest.add_output(layout::features(out));
  result.report.push_back("vocabulary: " + std::to_string(vocab.size()) + " tokens");
  return result;
}

StageResult run_pretrain_itm(const RunConfig& config) {
  StageResult result;
  result.manifest = new_manifest("pretrain-itm", config);
  const fs::path out = config.out_dir();
  const ModelInputs inputs = load_model_inputs(out, config);
  result.manifest.add_input(layout::vocabulary(out));
  result.manifest.add_input(layout::features(out));

  // captions and regions only; labels are never read here
  auto images = [&](const std::string& split) {
    const fs::path path = layout::enriched(out, split);
    require(path, "run enrich first");
    result.manifest.add_input(path);
    std::vector<CaptionedImage> v;
    for (const auto& m : load_enriched(path)) {
      v.push_back({m.record.id, m.record.text, inputs.features->get_regions(m.record.id)});
    }
    return v;
  };
  const auto train_pairs = make_itm_pairs(images("train"), inputs.vocab, config.inputs.max_len, config.seed);
  const auto dev_pairs = make_itm_pairs(images("dev"), inputs.vocab, config.inputs.max_len, config.seed + 1);

  VLModel model = init_model(config.model_config(inputs.vocab.size(), config.seed), kItmSemantics);
  model = pretrain_itm(std::move(model), train_pairs, config.itm_train_config(config.seed), config.itm.steps);

  const fs::path ckpt = layout::itm_checkpoint(out);
  fs::create_directories(ckpt.parent_path());
  save_checkpoint(model, inputs.vocab.hash(), ckpt);
  result.manifest.add_output(ckpt);

  result.report.push_back("pairs: " + std::to_string(train_pairs.size()) + " train, " +
                          std::to_string(dev_pairs.size()) + " dev; steps: " + std::to_string(config.itm.steps));
  if (!dev_pairs.empty()) {
    const auto p = predict_proba(model, dev_pairs, "itm");
    const auto labels = labels_of(dev_pairs);
    const double acc = accuracy(p, labels);
    result.manifest.metrics["itm_dev_accuracy"] = acc;
    result.report.push_back("ITM dev accuracy: " + fmt(acc));
  }
  return result;
}

StageResult run_train(const RunConfig& config) {
  StageResult result;
  result.manifest = new_manifest("train", config);
  const fs::path out = config.out_dir();
  const ModelInputs inputs = load_model_inputs(out, config);
  result.manifest.add_input(layout::vocabulary(out));
  result.manifest.add_input(layout::features(out));
  const fs::path train_path = layout::inputs(out, "train");
  const fs::path dev_path = layout::inputs(out, "dev");
  require(train_path, "run build-inputs first");
  require(dev_path, "run build-inputs first");
  result.manifest.add_input(train_path);
  result.manifest.add_input(dev_path);
  if (!all_labeled(train_path) || !all_labeled(dev_path))
    throw ValidationError("train and dev inputs must be labeled");
  const auto train = load_examples(train_path, inputs);
  const auto dev = load_examples(dev_path, inputs);

  const fs::path itm = layout::itm_checkpoint(out);
  for (const auto& member : config.members) {
    if (member.head == "itm") {
      require(itm, "member '" + member.name + "' needs pretrain-itm");
      result.manifest.add_input(itm);
      break;
    }
  }

  for (const auto& member : config.members) {
    const std::uint64_t seed = config.seed + member.seed_offset;
    VLModel model = member.head == "itm" ? transfer_itm_head(load_checkpoint(itm, inputs.vocab))
                                         : init_model(config.model_config(inputs.vocab.size(), seed));
    const FitResult fit_result = fit(std::move(model), train, dev, config.train_config(seed));

    const fs::path ckpt = layout::checkpoint(out, member.name);
    fs::create_directories(ckpt.parent_path());
    save_checkpoint(fit_result.model, inputs.vocab.hash(), ckpt);
    result.manifest.add_output(ckpt);

    json log;
    log["member"] = member.name;
    log["head"] = member.head;
    log["seed"] = seed;
    log["best_epoch"] = fit_result.best_epoch;
    log["history"] = history_to_json(fit_result);
    write_text(layout::training_log(out, member.name), log.dump(2) + "\n");
    result.manifest.add_output(layout::training_log(out, member.name));

    std::string line = member.name + ": best epoch " + std::to_string(fit_result.best_epoch);
    if (fit_result.best_epoch > 0) {
      const auto& best = fit_result.history[fit_result.best_epoch - 1];
      if (best.dev_auroc) {
        line += ", dev AUROC " + fmt(*best.dev_auroc);
        result.manifest.metrics[member.name + ".dev_auroc"] = *best.dev_auroc;
      }
    }
    result.report.push_back(line);
  }
  return result;
}

StageResult run_predict(const RunConfig& config, const StageOptions& options) {
  StageResult result;
  result.manifest = new_manifest("predict." + options.split, config);
  const fs::path out = config.out_dir();
  config.split_path(options.split);  // validates the split name
  const ModelInputs inputs = load_model_inputs(out, config);
  const fs::path input_path = layout::inputs(out, options.split);
  require(input_path, "run build-inputs first");
  result.manifest.add_input(layout::vocabulary(out));
  result.manifest.add_input(layout::features(out));
  result.manifest.add_input(input_path);
  const auto data = load_examples(input_path, inputs);

  for (const auto& member : config.members) {
    const fs::path ckpt = layout::checkpoint(out, member.name);
    require(ckpt, "run train first");
    result.manifest.add_input(ckpt);
    VLModel model;
    try {
      model = load_checkpoint(ckpt, inputs.vocab);
    } catch (const CheckpointError& e) {
      throw ValidationError(e.what());
    }
    const PredictionSet set = predict_proba(model, data, member.name);
    const fs::path path = layout::predictions(out, member.name, options.split);
    fs::create_directories(path.parent_path());
    write_predictions(set.to_rows(), path);
    result.manifest.add_output(path);
    result.report.push_back(member.name + ": " + std::to_string(set.scores.size()) + " predictions -> " +
                            path.string());
  }
  return result;
}

StageResult run_ensemble(const RunConfig& config, const StageOptions& options) {
  StageResult result;
  result.manifest = new_manifest("ensemble." + options.split, config);
  const fs::path out = config.out_dir();
  const EnsembleMethod method = parse_ensemble_method(options.method.value_or(config.ensemble_method));

  std::vector<fs::path> files = options.files;
  if (files.empty()) {
    for (const auto& member : config.members) files.push_back(layout::predictions(out, member.name, options.split));
  }
  std::vector<PredictionSet> sets;
  for (const auto& f : files) {
    require(f, "member predictions");
    result.manifest.add_input(f);
    sets.push_back(PredictionSet::from_rows(f.stem().string(), read_predictions(f)));
  }
  const PredictionSet combined = ensemble(sets, method);
  const fs::path path = layout::ensemble_predictions(out, options.split);
  fs::create_directories(path.parent_path());
  write_predictions(combined.to_rows(), path);
  result.manifest.add_output(path);
  result.report.push_back(to_string(method) + " of " + std::to_string(sets.size()) + " sets -> " + path.string());
  return result;
}

StageResult run_evaluate(const RunConfig& config, const StageOptions& options) {
  StageResult result;
  result.manifest = new_manifest("evaluate." + options.split, config);
  const fs::path out = config.out_dir();
  const fs::path preds = options.files.empty() ? layout::ensemble_predictions(out, options.split) : options.files.front();
  require(preds, "predictions CSV");
  const fs::path split_path = config.split_path(options.split);
  require(split_path, options.split + " split");
  result.manifest.add_input(preds);
  result.manifest.add_input(split_path);

  const PredictionSet set = PredictionSet::from_rows(preds.stem().string(), read_predictions(preds));
  LabelMap labels;
  for (const auto& r : load_records(split_path, LabelPolicy::kRequired)) labels[r.id] = *r.label;
  std::vector<std::string> missing;
  for (const auto& [id, _] : set.scores) {
    if (!labels.contains(id)) missing.push_back(std::to_string(id));
  }
  if (!missing.empty()) {
    std::string ids;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) ids += (i ? ", " : "") + missing[i];
    throw ValidationError(std::to_string(missing.size()) + " predicted ids have no label in " +
                          split_path.string() + ": " + ids);
  }

  const double auc = auroc(set, labels);
  const double acc = accuracy(set, labels);
  json metrics;
  metrics["predictions"] = preds.generic_string();
  metrics["split"] = options.split;
  metrics["n"] = set.scores.size();
  metrics["auroc"] = auc;
  metrics["accuracy"] = acc;
  const fs::path path = layout::metrics(out, preds.stem().string());
  write_text(path, metrics.dump(2) + "\n");
  result.manifest.add_output(path);
  result.manifest.metrics["auroc"] = auc;
  result.manifest.metrics["accuracy"] = acc;
  result.report.push_back("AUROC " + fmt(auc) + "  accuracy " + fmt(acc) + "  (n=" +
                          std::to_string(set.scores.size()) + ")");
  return result;
}

StageResult run_make_corpus(const RunConfig& config, const StageOptions& options) {
  if (config.provider.kind != "synthetic")
    throw ValidationError("make-corpus needs the synthetic feature provider");
  StageResult result;
  result.manifest = new_manifest("make-corpus", config);

  SyntheticProviderOptions provider_options;
  provider_options.seed = config.provider.seed;
  provider_options.d_v = config.provider.d_v;
  provider_options.max_regions = config.provider.max_regions;
  const SyntheticRegionProvider provider(provider_options);

  SyntheticCorpusOptions corpus_options;
  corpus_options.n_memes = options.count;
  corpus_options.seed = config.seed;
  const SyntheticCorpus corpus = make_synthetic_corpus(provider, corpus_options);

  const std::vector<std::pair<std::string, const std::vector<MemeRecord>*>> splits = {
      {"train", &corpus.train}, {"dev", &corpus.dev}, {"test", &corpus.test}};
  for (const auto& [split, records] : splits) {
    const fs::path path = config.split_path(split);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_records(*records, path);
    result.manifest.add_output(path);
    result.report.push_back(split + ": " + std::to_string(records->size()) + " memes -> " + path.string());
  }
  const fs::path fixtures = config.resolve(config.paths.fixtures);
  write_fixture_file(corpus.fixtures, fixtures);
  result.manifest.add_output(fixtures);
  result.report.push_back("fixtures: " + std::to_string(corpus.fixtures.size()) + " entries -> " + fixtures.string());
  return result;
}

StageResult run_stage(const std::string& command, const RunConfig& config, const StageOptions& options) {
  StageResult result;
  if (command == "enrich") {
    result = run_enrich(config);
  } else if (command == "build-inputs") {
    result = run_build_inputs(config);
  } else if (command == "pretrain-itm") {
    result = run_pretrain_itm(config);
  } else if (command == "train") {
    result = run_train(config);
  } else if (command == "predict") {
    result = run_predict(config, options);
  } else if (command == "ensemble") {
    result = run_ensemble(config, options);
  } else if (command == "evaluate") {
    result = run_evaluate(config, options);
  } else if (command == "make-corpus") {
    result = run_make_corpus(config, options);
  } else {
    throw ValidationError("unknown command '" + command + "'");
  }
  write_manifest(result.manifest, layout::manifest(config.out_dir(), result.manifest.stage));
  return result;
}

}  // namespace memetag::app
