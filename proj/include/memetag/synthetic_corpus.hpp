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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "memetag/dataset_io.hpp"
#include "memetag/entity_clients.hpp"
#include "memetag/feature_provider.hpp"

namespace memetag {

/// Desk-scale stand-in for the meme dataset. Captions name each image's
/// scene class; every image shows a person and faces sit inside person
/// regions; a meme is hateful exactly when one of its mapped person tags
/// carries a race from `hateful_races`. Entities are label-independent noise.
struct SyntheticCorpusOptions {
  std::size_t n_memes = 200;
  std::uint64_t seed = 11;
  MemeId first_id = 1000;
  double train_fraction = 0.6;
  double dev_fraction = 0.2;
  double face_probability = 1.0;
  std::size_t max_faces = 1;
  double stray_face_probability = 0.1;
  std::vector<std::string> hateful_races = {"black", "indian", "middle_eastern"};
  std::vector<std::string> entity_pool = {"toast",   "breakfast", "protest", "flag",    "election",
                                          "stadium", "concert",   "desert",  "beach",   "church",
                                          "market",  "parade",    "soldier", "kitchen", "wedding"};
  AttributeVocabulary attributes;
};

struct SyntheticCorpus {
  std::vector<MemeRecord> train;
  std::vector<MemeRecord> dev;
  std::vector<MemeRecord> test;
  std::map<MemeId, FixtureEntry> fixtures;

  std::vector<MemeRecord> all() const;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticRegionProvider& provider,
                                      const SyntheticCorpusOptions& options = {});

/// Writes train.jsonl, dev.jsonl, test.jsonl and fixtures.jsonl into `dir`.
void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

/// Caption naming the image's dominant non-person class, wrapped in filler
/// words.
std::string synthetic_caption(const ImageRegions& regions, SeededStream& stream);

/// Relabels memes by caption/image agreement: roughly half keep their own
/// caption (label 0), the rest borrow a caption from another meme whose
/// image has a different dominant class (label 1).
std::vector<MemeRecord> make_mismatch_split(const std::vector<MemeRecord>& records,
                                            const RegionProvider& provider, std::uint64_t seed);

}  // namespace memetag
