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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memetag/enrichment.hpp"
#include "memetag/feature_provider.hpp"

namespace memetag {

using TokenId = std::int32_t;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Token <-> id mapping. Ids 0..6 are reserved for the special tokens below
/// and never change; regular tokens follow in insertion order.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kCls = 2;
  static constexpr TokenId kSep = 3;
  static constexpr TokenId kImg = 4;
  static constexpr TokenId kEnd = 5;
  static constexpr TokenId kReg = 6;
  static constexpr std::array<std::string_view, 7> kReserved = {
      "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[IMG]", "[END]", "[REG]"};

  Vocabulary();

  /// Returns the existing id when `token` is already present.
  TokenId add(const std::string& token);
  std::optional<TokenId> find(std::string_view token) const;
  /// [UNK] for out-of-vocabulary tokens.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }

  /// One token per line; line i (0-based) holds id i, reserved block first.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);
  std::string serialize() const;
  /// Fingerprint of the serialized form; checkpoints record it.
  std::string hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Lowercase, strip ASCII punctuation, split on whitespace.
std::vector<std::string> normalize_words(std::string_view text);
std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab);

/// Training captions and entity descriptions (sorted, deduplicated) plus the
/// race and gender labels as whole tokens.
Vocabulary build_vocabulary(const std::vector<EnrichedMeme>& train,
                            const AttributeVocabulary& attributes = {});

enum Segment : std::int32_t {
  kCaptionSegment = 0,
  kEntitySegment = 1,
  kPersonSegment = 2,
  kImageSegment = 3,
};
inline constexpr std::int32_t kNumSegments = 4;

/// Model input. All vectors have length max_len; padding is a suffix with
/// attention_mask 0. visual_index selects a row of the image's feature table
/// (0 = whole image, k >= 1 = region k).
struct InputSequence {
  std::vector<TokenId> token_ids;
  std::vector<std::int32_t> segment_ids;
  std::vector<std::int32_t> position_ids;
  std::vector<std::int32_t> visual_index;
  std::vector<std::int32_t> attention_mask;

  std::size_t max_len() const { return token_ids.size(); }
  /// Number of real (unpadded) tokens.
  std::size_t length() const;
  /// Throws ConfigError when the structural invariants do not hold.
  void validate(std::size_t table_size) const;

  friend bool operator==(const InputSequence&, const InputSequence&) = default;
};

struct BuildOptions {
  std::size_t max_len = 64;
  bool include_entities = true;
  bool include_person_tags = true;
};

/// Smallest usable length: [CLS] [SEP] [IMG] [END].
inline constexpr std::size_t kMinSequenceLength = 4;

/// Lays out
///   [CLS] caption [SEP] (entity [SEP])* person ([SEP] person)* [IMG] [REG]* [END] [PAD]*
/// Each person tag is rendered as "<race> <gender>" linked to its region.
/// Over budget, whole entity tags go first (lowest score first), then
/// trailing regions, then the caption tail, then trailing person tags.
InputSequence build_sequence(const EnrichedMeme& meme, const ImageRegions& regions,
                             const Vocabulary& vocab, const BuildOptions& options = {});

std::string sequence_to_json(const InputSequence& seq);
InputSequence sequence_from_json(const std::string& text);

}  // namespace memetag
