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

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "memetag/input_builder.hpp"
#include "memetag/synthetic_corpus.hpp"
#include "temp_dir.hpp"

using namespace memetag;

namespace {

ImageRegions three_regions() {
  ImageRegions img;
  img.image_id = 1;
  img.whole_image = {{0, 0, 64, 64}, {0.0}, "image", 1.0};
  img.regions = {{{0, 0, 10, 10}, {0.1}, "dog", 0.9},
                 {{10, 10, 30, 40}, {0.2}, "person", 0.8},
                 {{5, 5, 9, 9}, {0.3}, "car", 0.7}};
  return img;
}

Vocabulary layout_vocab() {
  Vocabulary v;
  for (const char* t : {"a", "b", "toast", "r1", "male"}) v.add(t);
  return v;
}

std::vector<std::string> tokens_of(const InputSequence& s, const Vocabulary& v) {
  std::vector<std::string> out;
  for (auto id : s.token_ids) out.push_back(v.token(id));
  return out;
}

}  // namespace

TEST(Vocabulary, ReservedIdsAreFixed) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 7u);
  EXPECT_EQ(v.id("[PAD]"), 0);
  EXPECT_EQ(v.id("[UNK]"), 1);
  EXPECT_EQ(v.id("[CLS]"), 2);
  EXPECT_EQ(v.id("[SEP]"), 3);
  EXPECT_EQ(v.id("[IMG]"), 4);
  EXPECT_EQ(v.id("[END]"), 5);
  EXPECT_EQ(v.id("[REG]"), 6);
  EXPECT_EQ(v.add("cat"), 7);
  EXPECT_EQ(v.add("cat"), 7);
  EXPECT_EQ(v.id("zebra"), Vocabulary::kUnk);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  memetag::testing::TempDir dir;
  Vocabulary v = layout_vocab();
  v.save(dir / "vocab.txt");
  const Vocabulary back = Vocabulary::load(dir / "vocab.txt");
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.hash(), v.hash());
  v.add("extra");
  EXPECT_NE(back.hash(), v.hash());
}

TEST(Vocabulary, LoadRejectsBadFiles) {
  memetag::testing::TempDir dir;
  { std::ofstream(dir / "swapped.txt") << "[UNK]\n[PAD]\n[CLS]\n[SEP]\n[IMG]\n[END]\n[REG]\n"; }
  { std::ofstream(dir / "short.txt") << "[PAD]\n[UNK]\n"; }
  { std::ofstream(dir / "dup.txt") << "[PAD]\n[UNK]\n[CLS]\n[SEP]\n[IMG]\n[END]\n[REG]\nx\nx\n"; }
  EXPECT_THROW(Vocabulary::load(dir / "swapped.txt"), ConfigError);
  EXPECT_THROW(Vocabulary::load(dir / "short.txt"), ConfigError);
  EXPECT_THROW(Vocabulary::load(dir / "dup.txt"), ConfigError);
  EXPECT_THROW(Vocabulary::load(dir / "absent.txt"), ConfigError);
}

TEST(Tokenize, NormalizesCaseAndPunctuation) {
  EXPECT_EQ(normalize_words("  Hello, World!  it's\tFINE "),
            (std::vector<std::string>{"hello", "world", "its", "fine"}));
  EXPECT_TRUE(normalize_words("?!...").empty());
  Vocabulary v;
  const auto hello = v.add("hello");
  EXPECT_EQ(tokenize("HELLO there", v), (std::vector<TokenId>{hello, Vocabulary::kUnk}));
}

TEST(BuildVocabulary, CaptionsEntitiesAndAttributes) {
  std::vector<EnrichedMeme> train = {
      {{1, "a.png", "Zebra crossing", 0}, {{"Toast", 0.5}}, {}},
      {{2, "b.png", "apple", 1}, {}, {}}};
  AttributeVocabulary attrs;
  attrs.races = {"r1"};
  attrs.genders = {"male"};
  const Vocabulary v = build_vocabulary(train, attrs);
  EXPECT_EQ(v.size(), 7u + 6u);
  // Sorted after the reserved block.
  EXPECT_EQ(v.token(7), "apple");
  EXPECT_EQ(v.token(12), "zebra");
  for (const char* w : {"crossing", "toast", "r1", "male"}) EXPECT_TRUE(v.find(w)) << w;
}

TEST(BuildSequence, WorkedLayoutExample) {
  const Vocabulary v = layout_vocab();
  // Person tag on the second region (0-based index 1, table row 2).
  const EnrichedMeme meme{{1, "x.png", "a b", 0}, {{"toast", 0.9}}, {{1, "r1", "male"}}};
  const auto seq = build_sequence(meme, three_regions(), v, {.max_len = 20});
  std::vector<std::string> expected = {"[CLS]", "a", "b", "[SEP]", "toast", "[SEP]", "r1", "male",
                                       "[IMG]", "[REG]", "[REG]", "[REG]", "[END]"};
  expected.resize(20, "[PAD]");
  EXPECT_EQ(tokens_of(seq, v), expected);
  EXPECT_EQ(seq.visual_index,
            (std::vector<std::int32_t>{0, 0, 0, 0, 0, 0, 2, 2, 0, 1, 2, 3, 0, 0, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(seq.segment_ids,
            (std::vector<std::int32_t>{0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 3, 3, 3, 0, 0, 0, 0, 0, 0, 0}));
  std::vector<std::int32_t> mask(20, 0);
  std::fill(mask.begin(), mask.begin() + 13, 1);
  EXPECT_EQ(seq.attention_mask, mask);
  for (std::int32_t i = 0; i < 20; ++i) EXPECT_EQ(seq.position_ids[i], i);
  EXPECT_EQ(seq.length(), 13u);
  EXPECT_NO_THROW(seq.validate(4));
}

TEST(BuildSequence, NoTags) {
  const Vocabulary v = layout_vocab();
  const EnrichedMeme meme{{1, "x.png", "a b", std::nullopt}, {}, {}};
  const auto seq = build_sequence(meme, three_regions(), v, {.max_len = 10});
  std::vector<std::string> expected = {"[CLS]", "a", "b", "[SEP]", "[IMG]", "[REG]", "[REG]", "[REG]", "[END]", "[PAD]"};
  EXPECT_EQ(tokens_of(seq, v), expected);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(seq.visual_index[i], 0);
}

TEST(BuildSequence, AblationSwitchesDropTags) {
  const Vocabulary v = layout_vocab();
  const EnrichedMeme meme{{1, "x.png", "a b", 0}, {{"toast", 0.9}}, {{1, "r1", "male"}}};
  const auto plain = build_sequence(meme, three_regions(), v,
                                    {.max_len = 20, .include_entities = false, .include_person_tags = false});
  const auto untagged = build_sequence({meme.record, {}, {}}, three_regions(), v, {.max_len = 20});
  EXPECT_EQ(plain, untagged);
}

TEST(BuildSequence, MultiplePersonsAndEntities) {
  Vocabulary v = layout_vocab();
  v.add("female");
  v.add("r2");
  v.add("flag");
  const EnrichedMeme meme{{1, "x.png", "a", 0}, {{"toast", 0.9}, {"flag", 0.2}},
                          {{1, "r1", "male"}, {2, "r2", "female"}}};
  const auto seq = build_sequence(meme, three_regions(), v, {.max_len = 20});
  std::vector<std::string> expected = {"[CLS]", "a", "[SEP]", "toast", "[SEP]", "flag", "[SEP]",
                                       "r1", "male", "[SEP]", "r2", "female", "[IMG]",
                                       "[REG]", "[REG]", "[REG]", "[END]"};
  expected.resize(20, "[PAD]");
  EXPECT_EQ(tokens_of(seq, v), expected);
  EXPECT_EQ(seq.visual_index[7], 2);
  EXPECT_EQ(seq.visual_index[8], 2);
  EXPECT_EQ(seq.visual_index[9], 0);
  EXPECT_EQ(seq.visual_index[10], 3);
  EXPECT_EQ(seq.visual_index[11], 3);
}

TEST(BuildSequence, TruncationOrder) {
  Vocabulary v = layout_vocab();
  v.add("flag");
  const EnrichedMeme meme{{1, "x.png", "a b a b", 0}, {{"toast", 0.9}, {"flag", 0.2}}, {{1, "r1", "male"}}};
  // Full length: 1 + 4 + 1 + 4 + 2 + 1 + 3 + 1 = 17.
  const auto full = build_sequence(meme, three_regions(), v, {.max_len = 17});
  EXPECT_EQ(full.length(), 17u);

  // Lowest-scoring entity goes first.
  auto seq = build_sequence(meme, three_regions(), v, {.max_len = 15});
  EXPECT_EQ(seq.length(), 15u);
  EXPECT_EQ(v.token(seq.token_ids[6]), "toast");
  EXPECT_EQ(v.token(seq.token_ids[8]), "r1");

  // Then all entities, then trailing regions.
  seq = build_sequence(meme, three_regions(), v, {.max_len = 12});
  std::vector<std::string> expected = {"[CLS]", "a", "b", "a", "b", "[SEP]", "r1", "male", "[IMG]", "[REG]", "[REG]", "[END]"};
  EXPECT_EQ(tokens_of(seq, v), expected);

  // Then the caption tail.
  seq = build_sequence(meme, three_regions(), v, {.max_len = 7});
  expected = {"[CLS]", "a", "[SEP]", "r1", "male", "[IMG]", "[END]"};
  EXPECT_EQ(tokens_of(seq, v), expected);

  // Person tags last.
  seq = build_sequence(meme, three_regions(), v, {.max_len = 4});
  expected = {"[CLS]", "[SEP]", "[IMG]", "[END]"};
  EXPECT_EQ(tokens_of(seq, v), expected);

  EXPECT_THROW(build_sequence(meme, three_regions(), v, {.max_len = 3}), ConfigError);
}

TEST(BuildSequence, DanglingPersonTagIsRejected) {
  const EnrichedMeme meme{{1, "x.png", "a", 0}, {}, {{3, "r1", "male"}}};
  EXPECT_THROW(build_sequence(meme, three_regions(), layout_vocab()), ConfigError);
}

TEST(BuildSequence, InvariantsOnSyntheticCorpus) {
  SyntheticRegionProvider provider;
  const auto corpus = make_synthetic_corpus(provider, {.n_memes = 60});
  std::mt19937_64 rng(8);
  std::vector<EnrichedMeme> memes;
  for (const auto& r : corpus.all()) {
    EnrichedMeme m{r, corpus.fixtures.at(r.id).entities, {}};
    const auto img = provider.get_regions(r.id);
    for (std::size_t i = 0; i < img.regions.size(); ++i) {
      if (img.regions[i].det_class == "person") m.person_tags.push_back({i, "white", "female"});
    }
    memes.push_back(std::move(m));
  }
  const Vocabulary v = build_vocabulary(memes);
  for (const auto& m : memes) {
    const auto img = provider.get_regions(m.record.id);
    for (std::size_t L : {4u, 9u, 16u, 40u}) {
      const auto seq = build_sequence(m, img, v, {.max_len = L});
      ASSERT_EQ(seq.max_len(), L);
      ASSERT_NO_THROW(seq.validate(img.regions.size() + 1));
      EXPECT_EQ(seq.token_ids[0], Vocabulary::kCls);
      const auto n = seq.length();
      EXPECT_EQ(seq.token_ids[n - 1], Vocabulary::kEnd);
      std::size_t tag_pos = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (seq.segment_ids[i] == kCaptionSegment || seq.segment_ids[i] == kEntitySegment) {
          EXPECT_EQ(seq.visual_index[i], 0);
        }
        if (seq.segment_ids[i] == kPersonSegment && seq.token_ids[i] != Vocabulary::kSep) {
          const auto& tag = m.person_tags.at(tag_pos / 2);
          EXPECT_EQ(seq.visual_index[i], static_cast<std::int32_t>(tag.person_region_index + 1));
          ++tag_pos;
        }
        if (seq.token_ids[i] == Vocabulary::kReg) {
          EXPECT_EQ(v.token(seq.token_ids[i - seq.visual_index[i]]), "[IMG]");
        }
      }
    }
  }
}

TEST(InputSequence, JsonRoundTripAndValidation) {
  const auto seq = build_sequence({{1, "x.png", "a b", 0}, {}, {}}, three_regions(), layout_vocab(), {.max_len = 12});
  EXPECT_EQ(sequence_from_json(sequence_to_json(seq)), seq);
  EXPECT_THROW(sequence_from_json("{}"), ConfigError);
  EXPECT_THROW(seq.validate(3), ConfigError);  // [REG] row 3 needs a 4-row table

  auto broken = seq;
  broken.attention_mask[11] = 1;
  EXPECT_THROW(broken.validate(4), ConfigError);
  broken = seq;
  broken.segment_ids[0] = 4;
  EXPECT_THROW(broken.validate(4), ConfigError);
  broken = seq;
  broken.visual_index.pop_back();
  EXPECT_THROW(broken.validate(4), ConfigError);
}
