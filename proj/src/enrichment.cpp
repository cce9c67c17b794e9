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

#include "memetag/enrichment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "memetag/geometry.hpp"

namespace memetag {

using nlohmann::json;

namespace {

template <typename Fn>
auto with_retries(std::size_t retries, Fn&& fn) {
  for (std::size_t attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const ClientError& e) {
      if (attempt >= retries) throw;
      spdlog::warn("client call failed (attempt {}): {}", attempt + 1, e.what());
    }
  }
}

json entities_to_json(const std::vector<EntityTag>& tags) {
  json arr = json::array();
  for (const auto& t : tags) arr.push_back({{"description", t.description}, {"score", t.score}});
  return arr;
}

std::vector<EntityTag> entities_from_json(const json& arr) {
  std::vector<EntityTag> tags;
  for (const auto& e : arr) {
    EntityTag t{e.at("description").get<std::string>(), e.at("score").get<double>()};
    if (t.description.empty() || !(t.score >= 0.0 && t.score <= 1.0)) {
      throw std::runtime_error("invalid cached entity");
    }
    tags.push_back(std::move(t));
  }
  return tags;
}

json faces_to_json(const std::vector<FaceAttribute>& faces) {
  json arr = json::array();
  for (const auto& f : faces) {
    arr.push_back({{"box", {f.face_box.x1, f.face_box.y1, f.face_box.x2, f.face_box.y2}},
                   {"race", f.race},
                   {"gender", f.gender},
                   {"confidence", f.confidence}});
  }
  return arr;
}

std::vector<FaceAttribute> faces_from_json(const json& arr) {
  std::vector<FaceAttribute> faces;
  for (const auto& f : arr) {
    const auto& b = f.at("box");
    FaceAttribute a;
    a.face_box = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                  b.at(3).get<double>()};
    a.face_box.validate();
    a.race = f.at("race").get<std::string>();
    a.gender = f.at("gender").get<std::string>();
    a.confidence = f.at("confidence").get<double>();
    faces.push_back(std::move(a));
  }
  return faces;
}

// Shared read-through logic: a cached entry that fails to parse is discarded
// and refetched.
template <typename T, typename Fetch, typename Decode, typename Encode>
std::vector<T> cached_fetch(DiskCache* cache, const std::string& ns, MemeId image_id,
                            std::size_t retries, Fetch&& fetch, Decode&& decode, Encode&& encode) {
  const std::string key = std::to_string(image_id);
  if (cache) {
    if (auto hit = cache->get(ns, key)) {
      try {
        const json obj = json::parse(*hit);
        if (obj.at("image_id").get<MemeId>() != image_id) throw std::runtime_error("id mismatch");
        return decode(obj.at("items"));
      } catch (const std::exception& e) {
        spdlog::warn("rebuilding corrupt cache entry {}/{}: {}", ns, key, e.what());
        cache->erase(ns, key);
      }
    }
  }
  std::vector<T> items = with_retries(retries, fetch);
  if (cache) {
    const json obj = {{"image_id", image_id}, {"items", encode(items)}};
    cache->put(ns, key, obj.dump());
  }
  return items;
}

}  // namespace

std::vector<EntityTag> fetch_entities(MemeId image_id, EntityClient& client, DiskCache* cache,
                                      const EnrichmentOptions& options) {
  auto tags = cached_fetch<EntityTag>(
      cache, client.name() + "-entities", image_id, options.retries,
      [&] { return client.detect_entities(image_id); }, entities_from_json, entities_to_json);
  std::stable_sort(tags.begin(), tags.end(),
                   [](const EntityTag& a, const EntityTag& b) { return a.score > b.score; });
  if (tags.size() > options.max_entities) tags.resize(options.max_entities);
  return tags;
}

std::vector<FaceAttribute> fetch_face_attributes(MemeId image_id, FaceClient& client,
                                                 DiskCache* cache,
                                                 const EnrichmentOptions& options) {
  return cached_fetch<FaceAttribute>(
      cache, client.name() + "-faces", image_id, options.retries,
      [&] { return client.detect_faces(image_id); }, faces_from_json, faces_to_json);
}

std::vector<PersonTag> attach_attributes_to_persons(std::span<const FaceAttribute> faces,
                                                    std::span<const RegionFeature> regions) {
  std::vector<BoundingBox> person_boxes;
  std::vector<std::size_t> person_index;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].det_class == kPersonClass) {
      person_boxes.push_back(regions[i].box);
      person_index.push_back(i);
    }
  }
  std::vector<PersonTag> tags;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto hit = map_face_to_person(faces[f].face_box, person_boxes);
    if (!hit) {
      spdlog::warn("face {} at {} overlaps no person region; dropping its attributes", f,
                   faces[f].face_box.to_string());
      continue;
    }
    tags.push_back({person_index[*hit], faces[f].race, faces[f].gender});
  }
  return tags;
}

EnrichedMeme enrich(const MemeRecord& record, const ImageRegions& regions,
                    const EnrichmentClients& clients, const EnrichmentOptions& options) {
  EnrichedMeme out;
  out.record = record;
  if (clients.entity) out.entities = fetch_entities(record.id, *clients.entity, clients.cache, options);
  if (clients.face) {
    const auto faces = fetch_face_attributes(record.id, *clients.face, clients.cache, options);
    out.person_tags = attach_attributes_to_persons(faces, regions.regions);
  }
  return out;
}

std::vector<EnrichedMeme> enrich_split(const std::vector<MemeRecord>& records,
                                       const RegionProvider& provider,
                                       const EnrichmentClients& clients,
                                       const EnrichmentOptions& options, std::size_t workers) {
  std::vector<EnrichedMeme> out(records.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        out[i] = enrich(records[i], provider.get_regions(records[i].id), clients, options);
      } catch (...) {
        std::lock_guard guard(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = records.size();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(records.size(), 1));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string enriched_to_json_line(const EnrichedMeme& meme) {
  json obj = json::parse(serialize_record(meme.record));
  json names = json::array(), scores = json::array(), persons = json::array();
  for (const auto& e : meme.entities) {
    names.push_back(e.description);
    scores.push_back(e.score);
  }
  for (const auto& p : meme.person_tags) {
    persons.push_back({{"region_index", p.person_region_index}, {"race", p.race}, {"gender", p.gender}});
  }
  obj["entities"] = names;
  obj["entity_scores"] = scores;
  obj["person_tags"] = persons;
  return obj.dump();
}

EnrichedMeme enriched_from_json_line(const std::string& line) {
  EnrichedMeme meme;
  meme.record = parse_record(line);
  const json obj = json::parse(line);
  try {
    const auto names = obj.value("entities", json::array());
    const auto scores = obj.value("entity_scores", json::array());
    for (std::size_t i = 0; i < names.size(); ++i) {
      // without stored scores, fall back to a rank-derived score
      const double score = i < scores.size() ? scores[i].get<double>()
                                             : 1.0 - static_cast<double>(i) / (names.size() + 1.0);
      meme.entities.push_back({names[i].get<std::string>(), score});
    }
    for (const auto& p : obj.value("person_tags", json::array())) {
      meme.person_tags.push_back({p.at("region_index").get<std::size_t>(),
                                  p.at("race").get<std::string>(), p.at("gender").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw DatasetError(std::string("malformed enriched record: ") + e.what());
  }
  return meme;
}

std::vector<EnrichedMeme> load_enriched(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open enriched file " + path.string());
  std::vector<EnrichedMeme> memes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      memes.push_back(enriched_from_json_line(line));
    } catch (const std::exception& e) {
      throw DatasetError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return memes;
}

void append_enriched(const EnrichedMeme& meme, const std::filesystem::path& path) {
  const std::string line = enriched_to_json_line(meme) + '\n';
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw DatasetError("cannot append to " + path.string());
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  if (!out.flush()) throw DatasetError("cannot append to " + path.string());
}

void write_enriched(const std::vector<EnrichedMeme>& memes, const std::filesystem::path& path) {
  std::string content;
  for (const auto& m : memes) content += enriched_to_json_line(m) + '\n';
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw DatasetError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace memetag
