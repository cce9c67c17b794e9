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

#include "memetag/input_builder.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "memetag/hashing.hpp"

namespace memetag {

using nlohmann::json;

Vocabulary::Vocabulary() {
  for (auto r : kReserved) add(std::string(r));
}

TokenId Vocabulary::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocabulary::token(TokenId id) const {
  return tokens_.at(static_cast<std::size_t>(id));
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : tokens_) out += t + '\n';
  return out;
}

std::string Vocabulary::hash() const { return hash_string(serialize()); }

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write vocabulary " + path.string());
  out << serialize();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vocabulary " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno < kReserved.size()) {
      if (line != kReserved[lineno]) {
        throw ConfigError(path.string() + ": reserved token " + std::string(kReserved[lineno]) +
                          " expected on line " + std::to_string(lineno + 1));
      }
    } else {
      if (line.empty()) throw ConfigError(path.string() + ": empty token on line " + std::to_string(lineno + 1));
      if (vocab.find(line)) throw ConfigError(path.string() + ": duplicate token '" + line + "'");
      vocab.add(line);
    }
    ++lineno;
  }
  if (lineno < kReserved.size()) throw ConfigError(path.string() + ": truncated reserved block");
  return vocab;
}

std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else if (c < 128 && std::ispunct(c)) {
      continue;
    } else {
      current.push_back(static_cast<char>(c < 128 ? std::tolower(c) : c));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const auto& w : normalize_words(text)) ids.push_back(vocab.id(w));
  return ids;
}

Vocabulary build_vocabulary(const std::vector<EnrichedMeme>& train,
                            const AttributeVocabulary& attributes) {
  std::set<std::string> words;
  for (const auto& m : train) {
    for (auto& w : normalize_words(m.record.text)) words.insert(std::move(w));
    for (const auto& e : m.entities) {
      for (auto& w : normalize_words(e.description)) words.insert(std::move(w));
    }
  }
  for (const auto& r : attributes.races) words.insert(r);
  for (const auto& g : attributes.genders) words.insert(g);
  Vocabulary vocab;
  for (const auto& w : words) vocab.add(w);
  return vocab;
}

std::size_t InputSequence::length() const {
  return static_cast<std::size_t>(std::count(attention_mask.begin(), attention_mask.end(), 1));
}

void InputSequence::validate(std::size_t table_size) const {
  const std::size_t n = token_ids.size();
  if (segment_ids.size() != n || position_ids.size() != n || visual_index.size() != n ||
      attention_mask.size() != n) {
    throw ConfigError("input sequence vectors differ in length");
  }
  bool padding = false;
  for (std::size_t i = 0; i < n; ++i) {
    const int m = attention_mask[i];
    if (m != 0 && m != 1) throw ConfigError("attention mask must be binary");
    if (m == 0) padding = true;
    if (m == 1 && padding) throw ConfigError("padding must be a suffix");
    if (visual_index[i] < 0 || static_cast<std::size_t>(visual_index[i]) >= table_size) {
      throw ConfigError("visual index " + std::to_string(visual_index[i]) + " outside feature table");
    }
    if (segment_ids[i] < 0 || segment_ids[i] >= kNumSegments) throw ConfigError("segment id out of range");
    if (token_ids[i] < 0) throw ConfigError("negative token id");
  }
  if (n == 0 || attention_mask[0] == 0) throw ConfigError("sequence has no real tokens");
}

namespace {

struct Span {
  std::vector<TokenId> tokens;
  std::int32_t visual = 0;
};

}  // namespace

InputSequence build_sequence(const EnrichedMeme& meme, const ImageRegions& regions,
                             const Vocabulary& vocab, const BuildOptions& options) {
  const std::size_t budget = options.max_len;
  if (budget < kMinSequenceLength) {
    throw ConfigError("max_len " + std::to_string(budget) + " cannot hold the [CLS] [SEP] [IMG] [END] skeleton");
  }

  std::vector<TokenId> caption = tokenize(meme.record.text, vocab);
  std::vector<Span> entities;
  if (options.include_entities) {
    for (const auto& e : meme.entities) {
      auto toks = tokenize(e.description, vocab);
      if (!toks.empty()) entities.push_back({std::move(toks), 0});
    }
  }
  std::vector<Span> persons;
  if (options.include_person_tags) {
    for (const auto& p : meme.person_tags) {
      if (p.person_region_index >= regions.regions.size()) {
        throw ConfigError("person tag links region " + std::to_string(p.person_region_index) +
                          " but image " + std::to_string(regions.image_id) + " has " +
                          std::to_string(regions.regions.size()) + " regions");
      }
      persons.push_back({{vocab.id(p.race), vocab.id(p.gender)},
                         static_cast<std::int32_t>(p.person_region_index + 1)});
    }
  }
  std::size_t n_regions = regions.regions.size();

  auto entity_len = [&] {
    std::size_t n = 0;
    for (const auto& s : entities) n += s.tokens.size() + 1;
    return n;
  };
  auto person_len = [&] {
    std::size_t n = 0;
    for (const auto& s : persons) n += s.tokens.size();
    return persons.empty() ? 0 : n + persons.size() - 1;
  };
  auto total = [&] { return 2 + caption.size() + entity_len() + person_len() + 2 + n_regions; };

  while (total() > budget) {
    if (!entities.empty()) {
      entities.pop_back();
    } else if (n_regions > 0) {
      --n_regions;
    } else if (!caption.empty()) {
      caption.pop_back();
    } else {
      persons.pop_back();
    }
  }

  InputSequence seq;
  auto push = [&](TokenId tok, std::int32_t seg, std::int32_t vis) {
    seq.token_ids.push_back(tok);
    seq.segment_ids.push_back(seg);
    seq.visual_index.push_back(vis);
    seq.attention_mask.push_back(1);
  };

  push(Vocabulary::kCls, kCaptionSegment, 0);
  for (TokenId t : caption) push(t, kCaptionSegment, 0);
  push(Vocabulary::kSep, kCaptionSegment, 0);
  for (const auto& s : entities) {
    for (TokenId t : s.tokens) push(t, kEntitySegment, 0);
    push(Vocabulary::kSep, kEntitySegment, 0);
  }
  for (std::size_t i = 0; i < persons.size(); ++i) {
    if (i > 0) push(Vocabulary::kSep, kPersonSegment, 0);
    for (TokenId t : persons[i].tokens) push(t, kPersonSegment, persons[i].visual);
  }
  push(Vocabulary::kImg, kImageSegment, 0);
  for (std::size_t r = 0; r < n_regions; ++r) {
    push(Vocabulary::kReg, kImageSegment, static_cast<std::int32_t>(r + 1));
  }
  push(Vocabulary::kEnd, kImageSegment, 0);

  while (seq.token_ids.size() < budget) {
    seq.token_ids.push_back(Vocabulary::kPad);
    seq.segment_ids.push_back(kCaptionSegment);
    seq.visual_index.push_back(0);
    seq.attention_mask.push_back(0);
  }
  seq.position_ids.resize(budget);
  std::iota(seq.position_ids.begin(), seq.position_ids.end(), 0);
  return seq;
}

std::string sequence_to_json(const InputSequence& seq) {
  return json{{"token_ids", seq.token_ids},
              {"segment_ids", seq.segment_ids},
              {"position_ids", seq.position_ids},
              {"visual_index", seq.visual_index},
              {"attention_mask", seq.attention_mask}}
      .dump();
}

InputSequence sequence_from_json(const std::string& text) {
  try {
    const json obj = json::parse(text);
    InputSequence seq;
    seq.token_ids = obj.at("token_ids").get<std::vector<TokenId>>();
    seq.segment_ids = obj.at("segment_ids").get<std::vector<std::int32_t>>();
    seq.position_ids = obj.at("position_ids").get<std::vector<std::int32_t>>();
    seq.visual_index = obj.at("visual_index").get<std::vector<std::int32_t>>();
    seq.attention_mask = obj.at("attention_mask").get<std::vector<std::int32_t>>();
    return seq;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed input sequence: ") + e.what());
  }
}

}  // namespace memetag
