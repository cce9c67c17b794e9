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

#include <atomic>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "memetag/dataset_io.hpp"
#include "memetag/geometry.hpp"

namespace memetag {

/// Web-entity label with its detection score in [0,1].
struct EntityTag {
  std::string description;
  double score = 0.0;

  friend bool operator==(const EntityTag&, const EntityTag&) = default;
};

/// Race/gender prediction for one detected face.
struct FaceAttribute {
  BoundingBox face_box;
  std::string race;
  std::string gender;
  double confidence = 0.0;

  friend bool operator==(const FaceAttribute&, const FaceAttribute&) = default;
};

/// Closed label sets for face attributes. Defaults follow the 7-way race and
/// binary gender taxonomy of the FairFace classifier, rendered as single tokens.
struct AttributeVocabulary {
  std::vector<std::string> races = {"white", "black", "latino_hispanic", "east_asian",
                                    "southeast_asian", "indian", "middle_eastern"};
  std::vector<std::string> genders = {"male", "female"};

  bool has_race(const std::string& r) const;
  bool has_gender(const std::string& g) const;
};

/// Transient failure talking to a label source. Callers may retry.
class ClientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EntityClient {
 public:
  virtual ~EntityClient() = default;
  virtual std::vector<EntityTag> detect_entities(MemeId image_id) = 0;
  /// Stable identifier used to namespace cache entries.
  virtual std::string name() const = 0;
};

class FaceClient {
 public:
  virtual ~FaceClient() = default;
  virtual std::vector<FaceAttribute> detect_faces(MemeId image_id) = 0;
  virtual std::string name() const = 0;
};

struct FixtureEntry {
  std::vector<EntityTag> entities;
  std::vector<FaceAttribute> faces;
};

/// Offline client backed by a fixture file, one object per line:
///   {"id": 42, "entities": [{"description": "toast", "score": 0.9}],
///    "faces": [{"box": [x1,y1,x2,y2], "race": "...", "gender": "...", "confidence": 0.8}]}
/// Unknown ids yield empty results. Counts every call so tests can observe
/// cache behaviour.
class FixtureClient final : public EntityClient, public FaceClient {
 public:
  explicit FixtureClient(const std::filesystem::path& path, AttributeVocabulary vocab = {});
  FixtureClient(std::map<MemeId, FixtureEntry> entries, AttributeVocabulary vocab = {});

  std::vector<EntityTag> detect_entities(MemeId image_id) override;
  std::vector<FaceAttribute> detect_faces(MemeId image_id) override;
  std::string name() const override { return name_; }

  std::size_t entity_calls() const { return entity_calls_.load(); }
  std::size_t face_calls() const { return face_calls_.load(); }
  std::size_t total_calls() const { return entity_calls() + face_calls(); }
  void reset_counters();

  /// Makes the next `n` calls throw ClientError.
  void fail_next(std::size_t n) { failures_left_ = n; }

  const std::map<MemeId, FixtureEntry>& entries() const { return entries_; }

 private:
  void maybe_fail();

  std::map<MemeId, FixtureEntry> entries_;
  std::string name_;
  std::atomic<std::size_t> entity_calls_{0};
  std::atomic<std::size_t> face_calls_{0};
  std::atomic<std::size_t> failures_left_{0};
};

std::string fixture_entry_to_json_line(MemeId id, const FixtureEntry& entry);
void write_fixture_file(const std::map<MemeId, FixtureEntry>& entries,
                        const std::filesystem::path& path);

/// Live web-entity adapter for the Cloud Vision `images:annotate` endpoint
/// (WEB_DETECTION feature). Needs image files on disk and an API key.
class WebDetectionClient final : public EntityClient {
 public:
  WebDetectionClient(std::string api_key, std::filesystem::path image_root,
                     std::map<MemeId, std::string> image_paths, int max_results = 10,
                     std::string host = "vision.googleapis.com");

  std::vector<EntityTag> detect_entities(MemeId image_id) override;
  std::string name() const override { return "web-detection"; }

 private:
  std::string api_key_;
  std::filesystem::path image_root_;
  std::map<MemeId, std::string> image_paths_;
  int max_results_;
  std::string host_;
};

std::string base64_encode(const std::string& bytes);
std::string build_web_detection_request(const std::string& image_base64, int max_results);
/// Extracts `responses[0].webDetection.webEntities`; entries without a
/// description are skipped and scores are clamped to [0,1].
std::vector<EntityTag> parse_web_detection_response(const std::string& body);

}  // namespace memetag
