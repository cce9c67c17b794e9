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

#include "memetag/entity_clients.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "memetag/hashing.hpp"

namespace memetag {

using nlohmann::json;

bool AttributeVocabulary::has_race(const std::string& r) const {
  return std::find(races.begin(), races.end(), r) != races.end();
}

bool AttributeVocabulary::has_gender(const std::string& g) const {
  return std::find(genders.begin(), genders.end(), g) != genders.end();
}

namespace {

FixtureEntry parse_fixture_entry(const json& obj, const AttributeVocabulary& vocab) {
  FixtureEntry entry;
  if (obj.contains("entities")) {
    for (const auto& e : obj["entities"]) {
      EntityTag tag{e.at("description").get<std::string>(), e.at("score").get<double>()};
      if (tag.description.empty()) throw std::runtime_error("entity description is empty");
      if (!(tag.score >= 0.0 && tag.score <= 1.0)) throw std::runtime_error("entity score outside [0,1]");
      entry.entities.push_back(std::move(tag));
    }
  }
  if (obj.contains("faces")) {
    for (const auto& f : obj["faces"]) {
      const auto& b = f.at("box");
      FaceAttribute face;
      face.face_box = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                       b.at(3).get<double>()};
      face.face_box.validate();
      face.race = f.at("race").get<std::string>();
      face.gender = f.at("gender").get<std::string>();
      face.confidence = f.value("confidence", 1.0);
      if (!vocab.has_race(face.race)) throw std::runtime_error("race '" + face.race + "' not in vocabulary");
      if (!vocab.has_gender(face.gender)) {
        throw std::runtime_error("gender '" + face.gender + "' not in vocabulary");
      }
      entry.faces.push_back(std::move(face));
    }
  }
  return entry;
}

std::string fixture_name(const std::map<MemeId, FixtureEntry>& entries) {
  std::string all;
  for (const auto& [id, e] : entries) all += fixture_entry_to_json_line(id, e) + "\n";
  return "fixture-" + hash_string(all);
}

}  // namespace

FixtureClient::FixtureClient(const std::filesystem::path& path, AttributeVocabulary vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixture file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json obj = json::parse(line);
      const MemeId id = obj.at("id").get<MemeId>();
      if (!entries_.emplace(id, parse_fixture_entry(obj, vocab)).second) {
        throw std::runtime_error("duplicate id " + std::to_string(id));
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  name_ = fixture_name(entries_);
}

FixtureClient::FixtureClient(std::map<MemeId, FixtureEntry> entries, AttributeVocabulary vocab)
    : entries_(std::move(entries)) {
  for (const auto& [id, e] : entries_) {
    for (const auto& f : e.faces) {
      if (!vocab.has_race(f.race) || !vocab.has_gender(f.gender)) {
        throw std::runtime_error("fixture id " + std::to_string(id) + " uses an unknown face label");
      }
    }
  }
  name_ = fixture_name(entries_);
}

void FixtureClient::reset_counters() {
  entity_calls_ = 0;
  face_calls_ = 0;
}

void FixtureClient::maybe_fail() {
  std::size_t left = failures_left_.load();
  while (left > 0) {
    if (failures_left_.compare_exchange_weak(left, left - 1)) {
      throw ClientError("injected fixture failure");
    }
  }
}

std::vector<EntityTag> FixtureClient::detect_entities(MemeId image_id) {
  ++entity_calls_;
  maybe_fail();
  auto it = entries_.find(image_id);
  return it == entries_.end() ? std::vector<EntityTag>{} : it->second.entities;
}

std::vector<FaceAttribute> FixtureClient::detect_faces(MemeId image_id) {
  ++face_calls_;
  maybe_fail();
  auto it = entries_.find(image_id);
  return it == entries_.end() ? std::vector<FaceAttribute>{} : it->second.faces;
}

std::string fixture_entry_to_json_line(MemeId id, const FixtureEntry& entry) {
  json ents = json::array();
  for (const auto& e : entry.entities) ents.push_back({{"description", e.description}, {"score", e.score}});
  json faces = json::array();
  for (const auto& f : entry.faces) {
    faces.push_back({{"box", {f.face_box.x1, f.face_box.y1, f.face_box.x2, f.face_box.y2}},
                     {"race", f.race},
                     {"gender", f.gender},
                     {"confidence", f.confidence}});
  }
  return json{{"id", id}, {"entities", ents}, {"faces", faces}}.dump();
}

void write_fixture_file(const std::map<MemeId, FixtureEntry>& entries,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [id, e] : entries) out << fixture_entry_to_json_line(id, e) << '\n';
}

std::string base64_encode(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string build_web_detection_request(const std::string& image_base64, int max_results) {
  json req = {{"requests",
               {{{"image", {{"content", image_base64}}},
                 {"features", {{{"type", "WEB_DETECTION"}, {"maxResults", max_results}}}}}}}};
  return req.dump();
}

std::vector<EntityTag> parse_web_detection_response(const std::string& body) {
  json resp;
  try {
    resp = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ClientError(std::string("unparseable web detection response: ") + e.what());
  }
  if (resp.contains("error")) throw ClientError("web detection error: " + resp["error"].dump());
  std::vector<EntityTag> tags;
  if (!resp.contains("responses") || resp["responses"].empty()) return tags;
  const auto& first = resp["responses"][0];
  if (first.contains("error")) throw ClientError("web detection error: " + first["error"].dump());
  if (!first.contains("webDetection")) return tags;
  const auto& web = first["webDetection"];
  if (!web.contains("webEntities")) return tags;
  for (const auto& e : web["webEntities"]) {
    if (!e.contains("description") || !e["description"].is_string()) continue;
    std::string desc = e["description"].get<std::string>();
    if (desc.empty()) continue;
    const double score = std::clamp(e.value("score", 0.0), 0.0, 1.0);
    tags.push_back({std::move(desc), score});
  }
  return tags;
}

WebDetectionClient::WebDetectionClient(std::string api_key, std::filesystem::path image_root,
                                       std::map<MemeId, std::string> image_paths, int max_results,
                                       std::string host)
    : api_key_(std::move(api_key)),
      image_root_(std::move(image_root)),
      image_paths_(std::move(image_paths)),
      max_results_(max_results),
      host_(std::move(host)) {
  if (api_key_.empty()) throw std::invalid_argument("web detection client needs an API key");
}

std::vector<EntityTag> WebDetectionClient::detect_entities(MemeId image_id) {
  auto it = image_paths_.find(image_id);
  if (it == image_paths_.end()) return {};
  std::ifstream in(image_root_ / it->second, std::ios::binary);
  if (!in) throw ClientError("cannot read image " + (image_root_ / it->second).string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  httplib::SSLClient client(host_);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);
  const std::string path = "/v1/images:annotate?key=" + api_key_;
  auto res = client.Post(path, build_web_detection_request(base64_encode(bytes), max_results_),
                         "application/json");
  if (!res) throw ClientError("web detection request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw ClientError("web detection returned HTTP " + std::to_string(res->status));
  }
  return parse_web_detection_response(res->body);
}

}  // namespace memetag
