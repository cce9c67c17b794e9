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
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "memetag/dataset_io.hpp"
#include "memetag/geometry.hpp"

namespace memetag {

/// One detector region: box, feature vector, detector class and confidence.
struct RegionFeature {
  BoundingBox box;
  std::vector<double> feature;
  std::string det_class;
  double confidence = 0.0;

  friend bool operator==(const RegionFeature&, const RegionFeature&) = default;
};

/// Visual feature table for one image. `whole_image` spans (0,0,W,H);
/// `regions` are sorted by descending confidence.
struct ImageRegions {
  MemeId image_id = 0;
  RegionFeature whole_image;
  std::vector<RegionFeature> regions;

  /// Row 0 is the whole image, row k >= 1 is regions[k-1].
  const RegionFeature& row(std::size_t visual_index) const {
    return visual_index == 0 ? whole_image : regions.at(visual_index - 1);
  }
  std::size_t table_size() const { return regions.size() + 1; }

  friend bool operator==(const ImageRegions&, const ImageRegions&) = default;
};

class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kPersonClass = "person";

class RegionProvider {
 public:
  virtual ~RegionProvider() = default;
  virtual ImageRegions get_regions(MemeId image_id) const = 0;
  virtual std::size_t feature_dim() const = 0;
  virtual std::string name() const = 0;
};

/// Counter-based generator: every (seed, image id, region index) triple owns
/// an independent splitmix64 stream. Integer-only state and an Irwin-Hall
/// normal keep the output identical across platforms.
class SeededStream {
 public:
  SeededStream(std::uint64_t seed, std::uint64_t key_a, std::uint64_t key_b);
  std::uint64_t next_u64();
  double uniform();                    // [0, 1)
  double uniform(double lo, double hi);
  double normal();                     // approx N(0,1), sum of 12 uniforms - 6
  std::size_t below(std::size_t n);    // [0, n)

 private:
  std::uint64_t state_;
};

struct SyntheticProviderOptions {
  std::uint64_t seed = 7;
  std::size_t d_v = 64;
  std::size_t max_regions = 10;
  std::size_t min_regions = 2;
  double person_probability = 0.35;
  // share of non-person regions drawn from the image's scene class
  double scene_purity = 0.8;
  double feature_noise = 0.35;
  std::vector<std::string> classes = {"person", "dog", "cat", "car", "hat", "tree", "building", "food"};
};

/// Most frequent non-person class among the regions; ties go to the more
/// confident region. Empty when every region is a person.
std::string dominant_class(const ImageRegions& regions);

/// Deterministic stand-in for a region detector. Each image has a scene
/// class that most non-person regions share. Region features are the class
/// prototype plus noise, scaled to roughly unit norm.
class SyntheticRegionProvider final : public RegionProvider {
 public:
  explicit SyntheticRegionProvider(SyntheticProviderOptions options = {});

  ImageRegions get_regions(MemeId image_id) const override;
  std::size_t feature_dim() const override { return options_.d_v; }
  std::string name() const override { return "synthetic"; }

  const SyntheticProviderOptions& options() const { return options_; }
  const std::vector<double>& prototype(const std::string& det_class) const;

 private:
  SyntheticProviderOptions options_;
  std::map<std::string, std::vector<double>> prototypes_;
};

/// Reads precomputed detector output, one image object per line:
/// {"image_id", "width", "height", "boxes", "features", "classes",
///  "confidences", optional "whole_feature"}.
class FileRegionProvider final : public RegionProvider {
 public:
  FileRegionProvider(const std::filesystem::path& path, std::size_t max_regions = 10);

  ImageRegions get_regions(MemeId image_id) const override;
  std::size_t feature_dim() const override { return d_v_; }
  std::string name() const override { return "file"; }
  std::size_t size() const { return images_.size(); }

 private:
  std::map<MemeId, ImageRegions> images_;
  std::size_t d_v_ = 0;
};

std::string regions_to_json_line(const ImageRegions& regions);
ImageRegions regions_from_json_line(const std::string& line, std::size_t max_regions = SIZE_MAX);

struct ProviderConfig {
  std::string kind = "synthetic";  // synthetic | file
  std::uint64_t seed = 7;
  std::size_t d_v = 64;
  std::size_t max_regions = 10;
  std::filesystem::path path;      // file provider only
};

std::unique_ptr<RegionProvider> make_provider(const ProviderConfig& config);

/// Stable descending-confidence order, then truncation to `max_regions`.
void sort_and_truncate(std::vector<RegionFeature>& regions, std::size_t max_regions);

}  // namespace memetag
