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
#include <span>
#include <string>
#include <vector>

#include "memetag/dataset_io.hpp"
#include "memetag/disk_cache.hpp"
#include "memetag/entity_clients.hpp"
#include "memetag/feature_provider.hpp"

namespace memetag {

/// Race/gender attached to one person region. `person_region_index` indexes
/// ImageRegions::regions (0-based), so its visual-table row is index + 1.
struct PersonTag {
  std::size_t person_region_index = 0;
  std::string race;
  std::string gender;

  friend bool operator==(const PersonTag&, const PersonTag&) = default;
};

struct EnrichedMeme {
  MemeRecord record;
  std::vector<EntityTag> entities;  // descending score
  std::vector<PersonTag> person_tags;

  friend bool operator==(const EnrichedMeme&, const EnrichedMeme&) = default;
};

struct EnrichmentOptions {
  std::size_t max_entities = 5;
  std::size_t retries = 2;  // extra attempts after a ClientError
};

struct EnrichmentClients {
  EntityClient* entity = nullptr;
  FaceClient* face = nullptr;
  DiskCache* cache = nullptr;  // optional
};

/// Descending score, stable for ties, truncated to `max_entities`. The cache
/// holds the untruncated client answer.
std::vector<EntityTag> fetch_entities(MemeId image_id, EntityClient& client, DiskCache* cache,
                                      const EnrichmentOptions& options = {});

std::vector<FaceAttribute> fetch_face_attributes(MemeId image_id, FaceClient& client,
                                                 DiskCache* cache,
                                                 const EnrichmentOptions& options = {});

/// Maps each face onto the person-class region it overlaps most. Faces with
/// no overlapping person region are dropped with a warning.
std::vector<PersonTag> attach_attributes_to_persons(std::span<const FaceAttribute> faces,
                                                    std::span<const RegionFeature> regions);

EnrichedMeme enrich(const MemeRecord& record, const ImageRegions& regions,
                    const EnrichmentClients& clients, const EnrichmentOptions& options = {});

/// Enriches a whole split on a bounded worker pool. Output order follows
/// `records` regardless of scheduling.
std::vector<EnrichedMeme> enrich_split(const std::vector<MemeRecord>& records,
                                       const RegionProvider& provider,
                                       const EnrichmentClients& clients,
                                       const EnrichmentOptions& options = {},
                                       std::size_t workers = 1);

/// The record object extended with `entities` (strings, best first),
/// `entity_scores` and `person_tags` ({region_index, race, gender}).
std::string enriched_to_json_line(const EnrichedMeme& meme);
EnrichedMeme enriched_from_json_line(const std::string& line);

std::vector<EnrichedMeme> load_enriched(const std::filesystem::path& path);
/// Appends one complete line with a single write.
void append_enriched(const EnrichedMeme& meme, const std::filesystem::path& path);
/// Writes via a temp file and rename so readers never see partial output.
void write_enriched(const std::vector<EnrichedMeme>& memes, const std::filesystem::path& path);

}  // namespace memetag
