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

#include "memetag/feature_provider.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "memetag/hashing.hpp"

namespace memetag {

using nlohmann::json;

SeededStream::SeededStream(std::uint64_t seed, std::uint64_t key_a, std::uint64_t key_b)
    : state_(mix64(mix64(seed) ^ mix64(key_a + 0x632be59bd9b4e019ULL) ^
                   mix64(key_b + 0x8cb92ba72f3d8dd7ULL))) {}

std::uint64_t SeededStream::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SeededStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double SeededStream::normal() {
  double s = 0.0;
  for (int i = 0; i < 12; ++i) s += uniform();
  return s - 6.0;
}

std::size_t SeededStream::below(std::size_t n) {
  return static_cast<std::size_t>(uniform() * static_cast<double>(n));
}

void sort_and_truncate(std::vector<RegionFeature>& regions, std::size_t max_regions) {
  std::stable_sort(regions.begin(), regions.end(),
                   [](const RegionFeature& a, const RegionFeature& b) {
                     return a.confidence > b.confidence;
                   });
  if (regions.size() > max_regions) regions.resize(max_regions);
}

namespace {

constexpr std::uint64_t kImageStream = ~0ULL;
constexpr std::uint64_t kPrototypeStream = ~0ULL - 1;

RegionFeature whole_image_region(double width, double height,
                                 const std::vector<RegionFeature>& regions, std::size_t d_v) {
  RegionFeature whole;
  whole.box = {0.0, 0.0, width, height};
  whole.det_class = "image";
  whole.confidence = 1.0;
  whole.feature.assign(d_v, 0.0);
  if (!regions.empty()) {
    for (const auto& r : regions) {
      for (std::size_t j = 0; j < d_v; ++j) whole.feature[j] += r.feature[j];
    }
    for (double& v : whole.feature) v /= static_cast<double>(regions.size());
  }
  return whole;
}

}  // namespace

SyntheticRegionProvider::SyntheticRegionProvider(SyntheticProviderOptions options)
    : options_(std::move(options)) {
  if (options_.d_v == 0) throw ProviderError("d_v must be positive");
  if (options_.classes.empty()) throw ProviderError("synthetic provider needs at least one class");
  for (const auto& cls : options_.classes) {
    SeededStream stream(options_.seed, kPrototypeStream, fnv1a64(cls));
    std::vector<double> proto(options_.d_v);
    for (double& v : proto) v = stream.normal();
    prototypes_.emplace(cls, std::move(proto));
  }
}

const std::vector<double>& SyntheticRegionProvider::prototype(const std::string& det_class) const {
  auto it = prototypes_.find(det_class);
  if (it == prototypes_.end()) throw ProviderError("no prototype for class '" + det_class + "'");
  return it->second;
}

ImageRegions SyntheticRegionProvider::get_regions(MemeId image_id) const {
  const auto key = static_cast<std::uint64_t>(image_id);
  SeededStream image_stream(options_.seed, key, kImageStream);
  const double width = 320.0 + 32.0 * static_cast<double>(image_stream.below(10));
  const double height = 320.0 + 32.0 * static_cast<double>(image_stream.below(10));
  const std::size_t lo = std::min(options_.min_regions, options_.max_regions);
  const std::size_t n = lo + image_stream.below(options_.max_regions - lo + 1);

  std::vector<const std::string*> others;
  for (const auto& c : options_.classes) {
    if (c != kPersonClass) others.push_back(&c);
  }
  const std::string* scene = others.empty() ? nullptr : others[image_stream.below(others.size())];

  std::vector<RegionFeature> regions;
  regions.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    SeededStream s(options_.seed, key, r);
    RegionFeature region;
    if (s.uniform() < options_.person_probability) {
      region.det_class = kPersonClass;
    } else if (others.empty()) {
      region.det_class = options_.classes.front();
    } else if (s.uniform() < options_.scene_purity) {
      region.det_class = *scene;
    } else {
      region.det_class = *others[s.below(others.size())];
    }
    const double w = width * s.uniform(0.15, 0.6);
    const double h = height * s.uniform(0.2, 0.7);
    const double x1 = std::floor(s.uniform(0.0, width - w));
    const double y1 = std::floor(s.uniform(0.0, height - h));
    region.box = {x1, y1, std::floor(x1 + w) + 1.0, std::floor(y1 + h) + 1.0};
    region.confidence = s.uniform(0.3, 1.0);
    const auto& proto = prototype(region.det_class);
    region.feature.resize(options_.d_v);
    // unit-scale vectors keep the visual projection comparable to token embeddings
    const double scale = 1.0 / std::sqrt(static_cast<double>(options_.d_v));
    for (std::size_t j = 0; j < options_.d_v; ++j) {
      region.feature[j] = scale * (proto[j] + options_.feature_noise * s.normal());
    }
    regions.push_back(std::move(region));
  }
  sort_and_truncate(regions, options_.max_regions);

  ImageRegions out;
  out.image_id = image_id;
  out.whole_image = whole_image_region(width, height, regions, options_.d_v);
  out.regions = std::move(regions);
  return out;
}

std::string dominant_class(const ImageRegions& regions) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : regions.regions) {
    if (r.det_class != kPersonClass) ++counts[r.det_class];
  }
  std::string best;
  std::size_t best_count = 0;
  for (const auto& r : regions.regions) {
    auto it = counts.find(r.det_class);
    if (it != counts.end() && it->second > best_count) {
      best = r.det_class;
      best_count = it->second;
    }
  }
  return best;
}

std::string regions_to_json_line(const ImageRegions& img) {
  json boxes = json::array(), features = json::array(), classes = json::array(),
       confidences = json::array();
  for (const auto& r : img.regions) {
    boxes.push_back({r.box.x1, r.box.y1, r.box.x2, r.box.y2});
    features.push_back(r.feature);
    classes.push_back(r.det_class);
    confidences.push_back(r.confidence);
  }
  json obj = {{"image_id", img.image_id},
              {"width", img.whole_image.box.x2},
              {"height", img.whole_image.box.y2},
              {"boxes", boxes},
              {"features", features},
              {"classes", classes},
              {"confidences", confidences},
              {"whole_feature", img.whole_image.feature}};
  return obj.dump();
}

ImageRegions regions_from_json_line(const std::string& line, std::size_t max_regions) {
  json obj;
  try {
    obj = json::parse(line);
    ImageRegions img;
    img.image_id = obj.at("image_id").get<MemeId>();
    const double width = obj.at("width").get<double>();
    const double height = obj.at("height").get<double>();
    const auto& boxes = obj.at("boxes");
    const auto& features = obj.at("features");
    const auto& classes = obj.at("classes");
    const auto& confidences = obj.at("confidences");
    const std::size_t n = boxes.size();
    if (features.size() != n || classes.size() != n || confidences.size() != n) {
      throw ProviderError("image " + std::to_string(img.image_id) +
                          ": box/feature/class/confidence arrays differ in length");
    }
    std::size_t d_v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      RegionFeature r;
      const auto& b = boxes[i];
      if (b.size() != 4) throw ProviderError("box must have 4 coordinates");
      r.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
      r.box.validate();
      r.feature = features[i].get<std::vector<double>>();
      r.det_class = classes[i].get<std::string>();
      r.confidence = confidences[i].get<double>();
      if (i == 0) d_v = r.feature.size();
      if (r.feature.size() != d_v || d_v == 0) {
        throw ProviderError("image " + std::to_string(img.image_id) + ": inconsistent feature dimension");
      }
      for (double v : r.feature) {
        if (!std::isfinite(v)) throw ProviderError("non-finite feature value");
      }
      img.regions.push_back(std::move(r));
    }
    sort_and_truncate(img.regions, max_regions);
    if (obj.contains("whole_feature")) {
      img.whole_image.box = {0.0, 0.0, width, height};
      img.whole_image.det_class = "image";
      img.whole_image.confidence = 1.0;
      img.whole_image.feature = obj["whole_feature"].get<std::vector<double>>();
    } else {
      if (img.regions.empty()) throw ProviderError("image without regions needs 'whole_feature'");
      img.whole_image = whole_image_region(width, height, img.regions, d_v);
    }
    img.whole_image.box.validate();
    return img;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed region record: ") + e.what());
  } catch (const InvalidBoxError& e) {
    throw ProviderError(std::string("malformed region record: ") + e.what());
  }
}

FileRegionProvider::FileRegionProvider(const std::filesystem::path& path, std::size_t max_regions) {
  std::ifstream in(path);
  if (!in) throw ProviderError("cannot open region file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ImageRegions img;
    try {
      img = regions_from_json_line(line, max_regions);
    } catch (const ProviderError& e) {
      throw ProviderError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const std::size_t d = img.whole_image.feature.size();
    if (d_v_ == 0) d_v_ = d;
    if (d != d_v_) throw ProviderError(path.string() + ": inconsistent feature dimension");
    if (!images_.emplace(img.image_id, std::move(img)).second) {
      throw ProviderError(path.string() + ": duplicate image id on line " + std::to_string(lineno));
    }
  }
}

ImageRegions FileRegionProvider::get_regions(MemeId image_id) const {
  auto it = images_.find(image_id);
  if (it == images_.end()) {
    throw ProviderError("no regions for image id " + std::to_string(image_id));
  }
  return it->second;
}

std::unique_ptr<RegionProvider> make_provider(const ProviderConfig& config) {
  if (config.kind == "synthetic") {
    SyntheticProviderOptions opts;
    opts.seed = config.seed;
    opts.d_v = config.d_v;
    opts.max_regions = config.max_regions;
    return std::make_unique<SyntheticRegionProvider>(opts);
  }
  if (config.kind == "file") return std::make_unique<FileRegionProvider>(config.path, config.max_regions);
  throw ProviderError("unknown feature provider '" + config.kind + "'");
}

}  // namespace memetag
