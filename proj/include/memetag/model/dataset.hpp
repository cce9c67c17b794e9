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
#include <string>
#include <vector>

#include "memetag/enrichment.hpp"
#include "memetag/feature_provider.hpp"
#include "memetag/input_builder.hpp"
#include "memetag/model/training.hpp"

namespace memetag {

/// Sequence + feature table for one enriched meme. The label defaults to 0
/// for unlabeled (test) records.
Example make_example(const EnrichedMeme& meme, const ImageRegions& regions, const Vocabulary& vocab,
                     const BuildOptions& options = {});

struct CaptionedImage {
  MemeId id = 0;
  std::string caption;
  ImageRegions regions;
};

/// Image-text matching corpus: every image appears once with its own caption
/// (target 1) and once with a caption drawn from a different image (target 0).
/// Tags are never included. Borrowed captions are re-drawn while they equal
/// the image's own caption.
std::vector<Example> make_itm_pairs(const std::vector<CaptionedImage>& images, const Vocabulary& vocab,
                                    std::size_t max_len, std::uint64_t seed);

}  // namespace memetag
