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

#include "memetag/synthetic_corpus.hpp"

#include <algorithm>
#include <cmath>

#include "memetag/geometry.hpp"

namespace memetag {

namespace {

constexpr std::uint64_t kCorpusKey = 0x636f72707573ULL;
constexpr std::uint64_t kMismatchKey = 0x6d69736d61746368ULL;

const std::vector<std::string> kFillers = {"look", "at",   "this", "when",  "you",  "see",
                                           "my",  "the",  "just", "funny", "meme", "really"};

}  // namespace

std::string synthetic_caption(const ImageRegions& regions, SeededStream& stream) {
  std::string caption;
  auto word = [&](const std::string& w) {
    if (!caption.empty()) caption += ' ';
    caption += w;
  };
  for (std::size_t i = 0, n = 1 + stream.below(3); i < n; ++i) word(kFillers[stream.below(kFillers.size())]);
  const std::string scene = dominant_class(regions);
  if (scene.empty()) {
    word("people");
  } else {
    word("a");
    word(scene);
  }
  for (std::size_t i = 0, n = stream.below(3); i < n; ++i) word(kFillers[stream.below(kFillers.size())]);
  return caption;
}

std::vector<MemeRecord> SyntheticCorpus::all() const {
  std::vector<MemeRecord> out = train;
  out.insert(out.end(), dev.begin(), dev.end());
  out.insert(out.end(), test.begin(), test.end());
  return out;
}

SyntheticCorpus make_synthetic_corpus(const SyntheticRegionProvider& provider,
                                      const SyntheticCorpusOptions& options) {
  SyntheticCorpus corpus;
  const auto& races = options.attributes.races;
  const auto& genders = options.attributes.genders;
  const std::size_t n_train = static_cast<std::size_t>(std::lround(options.train_fraction * options.n_memes));
  const std::size_t n_dev = static_cast<std::size_t>(std::lround(options.dev_fraction * options.n_memes));

  // ids whose image has no person region are skipped, so every meme can
  // carry a face and its presence says nothing about the label
  MemeId id = options.first_id - 1;
  for (std::size_t i = 0; i < options.n_memes; ++i) {
    ImageRegions regions;
    do {
      regions = provider.get_regions(++id);
    } while (std::none_of(regions.regions.begin(), regions.regions.end(),
                          [](const RegionFeature& r) { return r.det_class == kPersonClass; }));
    SeededStream s(options.seed, static_cast<std::uint64_t>(id), kCorpusKey);

    FixtureEntry fixture;
    for (std::size_t e = 0, n = s.below(8); e < n; ++e) {
      fixture.entities.push_back({options.entity_pool[s.below(options.entity_pool.size())],
                                  std::round(s.uniform(0.2, 1.0) * 1000.0) / 1000.0});
    }
    std::size_t faces = 0;
    for (const auto& r : regions.regions) {
      if (r.det_class != kPersonClass || faces == options.max_faces) continue;
      if (s.uniform() >= options.face_probability) continue;
      const double fw = std::max(2.0, std::floor(0.3 * r.box.width()));
      const double fh = std::max(2.0, std::floor(0.25 * r.box.height()));
      const double x1 = std::floor(r.box.x1 + s.uniform() * (r.box.width() - fw));
      const double y1 = std::floor(r.box.y1 + 0.02 * r.box.height());
      FaceAttribute face;
      face.face_box = {x1, y1, x1 + fw, y1 + fh};
      face.race = races[s.below(races.size())];
      face.gender = genders[s.below(genders.size())];
      face.confidence = std::round(s.uniform(0.6, 1.0) * 1000.0) / 1000.0;
      fixture.faces.push_back(std::move(face));
      ++faces;
    }
    if (s.uniform() < options.stray_face_probability) {
      const double w = regions.whole_image.box.x2, h = regions.whole_image.box.y2;
      const double x1 = std::floor(s.uniform(0.0, w - 20.0)), y1 = std::floor(s.uniform(0.0, h - 20.0));
      fixture.faces.push_back({{x1, y1, x1 + 16.0, y1 + 16.0}, races[s.below(races.size())],
                               genders[s.below(genders.size())], 0.5});
    }

    std::vector<BoundingBox> persons;
    for (const auto& r : regions.regions) {
      if (r.det_class == kPersonClass) persons.push_back(r.box);
    }
    const bool hateful = std::any_of(fixture.faces.begin(), fixture.faces.end(), [&](const FaceAttribute& f) {
      return map_face_to_person(f.face_box, persons).has_value() &&
             std::find(options.hateful_races.begin(), options.hateful_races.end(), f.race) !=
                 options.hateful_races.end();
    });

    MemeRecord rec;
    rec.id = id;
    rec.img = "img/" + std::to_string(id) + ".png";
    rec.text = synthetic_caption(regions, s);
    rec.label = hateful ? 1 : 0;
    if (i < n_train) {
      corpus.train.push_back(rec);
    } else if (i < n_train + n_dev) {
      corpus.dev.push_back(rec);
    } else {
      corpus.test.push_back(rec);
    }
    if (!fixture.entities.empty() || !fixture.faces.empty()) corpus.fixtures.emplace(id, std::move(fixture));
  }
  return corpus;
}

void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_records(corpus.train, dir / "train.jsonl");
  write_records(corpus.dev, dir / "dev.jsonl");
  write_records(corpus.test, dir / "test.jsonl");
  write_fixture_file(corpus.fixtures, dir / "fixtures.jsonl");
}

std::vector<MemeRecord> make_mismatch_split(const std::vector<MemeRecord>& records,
                                            const RegionProvider& provider, std::uint64_t seed) {
  std::vector<std::string> classes;
  for (const auto& r : records) classes.push_back(dominant_class(provider.get_regions(r.id)));
  std::vector<MemeRecord> out = records;
  for (std::size_t i = 0; i < records.size(); ++i) {
    SeededStream s(seed, static_cast<std::uint64_t>(records[i].id), kMismatchKey);
    out[i].label = 0;
    if (records.size() < 2 || s.uniform() < 0.5) continue;
    // first candidate after a random offset whose classes differ
    const std::size_t offset = 1 + s.below(records.size() - 1);
    for (std::size_t k = 0; k + 1 < records.size(); ++k) {
      const std::size_t j = (i + offset + k) % records.size();
      if (j == i || classes[j] == classes[i]) continue;
      out[i].text = records[j].text;
      out[i].label = 1;
      break;
    }
  }
  return out;
}

}  // namespace memetag
