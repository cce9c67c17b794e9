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

#include "memetag/model/dataset.hpp"

namespace memetag {

namespace {
constexpr std::uint64_t kItmKey = 0x69746d7061697273ULL;
}

Example make_example(const EnrichedMeme& meme, const ImageRegions& regions, const Vocabulary& vocab,
                     const BuildOptions& options) {
  Example ex;
  ex.id = meme.record.id;
  ex.seq = build_sequence(meme, regions, vocab, options);
  ex.features = feature_table(regions);
  ex.label = meme.record.label.value_or(0);
  return ex;
}

std::vector<Example> make_itm_pairs(const std::vector<CaptionedImage>& images, const Vocabulary& vocab,
                                    std::size_t max_len, std::uint64_t seed) {
  BuildOptions options;
  options.max_len = max_len;
  options.include_entities = false;
  options.include_person_tags = false;
  std::vector<Example> pairs;
  pairs.reserve(2 * images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    EnrichedMeme own;
    own.record = {images[i].id, "", images[i].caption, 1};
    pairs.push_back(make_example(own, images[i].regions, vocab, options));
    if (images.size() < 2) continue;

    SeededStream s(seed, static_cast<std::uint64_t>(images[i].id), kItmKey);
    std::size_t j = i;
    for (int attempt = 0; attempt < 16 && (j == i || images[j].caption == images[i].caption); ++attempt) {
      j = s.below(images.size());
    }
    if (j == i || images[j].caption == images[i].caption) continue;
    EnrichedMeme other;
    other.record = {images[i].id, "", images[j].caption, 0};
    Example ex = make_example(other, images[i].regions, vocab, options);
    // distinct id so predictions over pairs stay keyed uniquely
    ex.id = -(images[i].id + 1);
    pairs.push_back(std::move(ex));
  }
  return pairs;
}

}  // namespace memetag
