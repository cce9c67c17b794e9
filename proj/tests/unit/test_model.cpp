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

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "experiments.hpp"
#include "memetag/model/checkpoint.hpp"
#include "memetag/model/dataset.hpp"
#include "memetag/model/optimizer.hpp"
#include "memetag/model/training.hpp"
#include "memetag/model/transformer.hpp"
#include "model_helpers.hpp"
#include "temp_dir.hpp"

using namespace memetag;
using memetag::testing::micro_config;

namespace {

bool same_parameters(const VLModel& a, const VLModel& b) {
  std::vector<Mat> pa, pb;
  a.visit([&](const std::string&, const Mat& m) { pa.push_back(m); });
  b.visit([&](const std::string&, const Mat& m) { pb.push_back(m); });
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].rows() != pb[i].rows() || pa[i].cols() != pb[i].cols() || pa[i] != pb[i]) return false;
  }
  return true;
}

bool same_backbone(VLModel a, VLModel b) {
  a.head = b.head;
  return same_parameters(a, b);
}

std::vector<Example> random_examples(std::mt19937_64& rng, const ModelConfig& c, std::size_t n) {
  std::vector<Example> v;
  for (std::size_t i = 0; i < n; ++i) {
    Example ex;
    ex.id = static_cast<MemeId>(i);
    ex.features = memetag::testing::random_features(rng, 4, c.d_v);
    ex.seq = memetag::testing::random_sequence(rng, c.vocab_size, c.max_len, 4);
    ex.label = static_cast<int>(i % 2);
    v.push_back(std::move(ex));
  }
  return v;
}

// Tagged examples from the synthetic corpus: the label is a function of the
// person tags, so a small model can fit a fixed batch quickly.
struct SignalData {
  std::vector<Example> examples;
  std::size_t vocab_size = 0;
  std::size_t d_v = 0;
};

SignalData signal_data(std::size_t n) {
  SyntheticRegionProvider provider;
  const auto corpus = make_synthetic_corpus(provider, {.n_memes = n});
  FixtureClient client(corpus.fixtures);
  const auto memes = enrich_split(corpus.all(), provider, {&client, &client, nullptr});
  const Vocabulary vocab = build_vocabulary(memes);
  SignalData d;
  for (const auto& m : memes) d.examples.push_back(make_example(m, provider.get_regions(m.record.id), vocab, {.max_len = 32}));
  d.vocab_size = vocab.size();
  d.d_v = provider.feature_dim();
  return d;
}

}  // namespace

TEST(ModelConfig, Validation) {
  ModelConfig c = micro_config();
  EXPECT_NO_THROW(c.validate());
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = micro_config();
  c.vocab_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = micro_config();
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Init, DeterministicInSeed) {
  const auto c = micro_config();
  EXPECT_TRUE(same_parameters(init_model(c), init_model(c)));
  auto other = c;
  other.seed = c.seed + 1;
  EXPECT_FALSE(same_parameters(init_model(c), init_model(other)));
  const auto m = init_model(c);
  EXPECT_TRUE(m.all_finite());
  EXPECT_EQ(m.head.class_semantics, kHatefulSemantics);
  EXPECT_GT(m.parameter_count(), 0u);
}

TEST(Forward, ShapeFiniteAndDeterministic) {
  std::mt19937_64 rng(1);
  const auto c = micro_config();
  auto model = init_model(c);
  memetag::testing::scramble(model, rng);
  for (int t = 0; t < 50; ++t) {
    const auto seq = memetag::testing::random_sequence(rng, c.vocab_size, c.max_len, 4);
    const Mat f = memetag::testing::random_features(rng, 4, c.d_v);
    const auto logits = forward(model, seq, f);
    EXPECT_TRUE(logits.allFinite());
    EXPECT_EQ(forward(model, seq, f), logits);
    EXPECT_NEAR(softmax2(logits).sum(), 1.0, 1e-12);
  }
}

TEST(Forward, PaddingIsNeverAttended) {
  std::mt19937_64 rng(2);
  const auto c = micro_config();
  auto model = init_model(c);
  memetag::testing::scramble(model, rng);
  std::uniform_int_distribution<int> tok(0, static_cast<int>(c.vocab_size) - 1);
  std::uniform_int_distribution<int> seg(0, 3), vis(0, 3);
  for (int t = 0; t < 100; ++t) {
    const auto seq = memetag::testing::random_sequence(rng, c.vocab_size, c.max_len, 4);
    const Mat f = memetag::testing::random_features(rng, 4, c.d_v);
    auto mutated = seq;
    for (std::size_t i = seq.length(); i < seq.max_len(); ++i) {
      mutated.token_ids[i] = tok(rng);
      mutated.segment_ids[i] = seg(rng);
      mutated.visual_index[i] = vis(rng);
    }
    EXPECT_EQ(forward(model, seq, f), forward(model, mutated, f));
  }
}

TEST(Forward, DimensionMismatchIsFatal) {
  std::mt19937_64 rng(3);
  const auto c = micro_config();
  const auto model = init_model(c);
  const auto seq = memetag::testing::random_sequence(rng, c.vocab_size, c.max_len, 4);
  EXPECT_THROW(forward(model, seq, memetag::testing::random_features(rng, 4, c.d_v + 1)), ConfigError);
  auto bad = seq;
  bad.token_ids[0] = static_cast<TokenId>(c.vocab_size);
  EXPECT_THROW(forward(model, bad, memetag::testing::random_features(rng, 4, c.d_v)), ConfigError);
}

TEST(FeatureTable, WholeImageThenRegions) {
  ImageRegions img;
  img.whole_image.feature = {1, 2};
  img.regions = {{{0, 0, 1, 1}, {3, 4}, "person", 0.9}, {{0, 0, 1, 1}, {5, 6}, "dog", 0.5}};
  Mat expected(3, 2);
  expected << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(feature_table(img), expected);
}

TEST(CrossEntropy, ValueAndGradient) {
  const Eigen::Vector2d logits(0.3, -1.2);
  Eigen::Vector2d d;
  const double loss = cross_entropy(logits, 1, &d);
  const auto p = softmax2(logits);
  EXPECT_NEAR(loss, -std::log(p(1)), 1e-12);
  EXPECT_NEAR(d(0), p(0), 1e-12);
  EXPECT_NEAR(d(1), p(1) - 1.0, 1e-12);
  EXPECT_TRUE(softmax2(Eigen::Vector2d(800, -800)).allFinite());
}

TEST(SwapHead, ExchangesRowsBiasAndNames) {
  ClassifierHead h = random_head(4, 9, kItmSemantics);
  const auto s = swap_head_classes(h);
  EXPECT_EQ(s.weight.row(0), h.weight.row(1));
  EXPECT_EQ(s.weight.row(1), h.weight.row(0));
  EXPECT_EQ(s.bias(0, 0), h.bias(0, 1));
  EXPECT_EQ(s.bias(0, 1), h.bias(0, 0));
  EXPECT_EQ(s.class_semantics[0], kItmSemantics[1]);
  EXPECT_EQ(s.class_semantics[1], kItmSemantics[0]);
}

TEST(SwapHead, InvolutionAndLogitExchangeAreExact) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    ClassifierHead h = random_head(16, static_cast<std::uint64_t>(t), kItmSemantics);
    for (Eigen::Index i = 0; i < h.bias.size(); ++i) h.bias.data()[i] = n(rng);
    const auto s = swap_head_classes(h);
    const auto back = swap_head_classes(s);
    EXPECT_EQ(back.weight, h.weight);
    EXPECT_EQ(back.bias, h.bias);
    EXPECT_EQ(back.class_semantics, h.class_semantics);
    Eigen::VectorXd pooled(16);
    for (Eigen::Index i = 0; i < 16; ++i) pooled(i) = n(rng);
    const auto before = h.apply(pooled);
    const auto after = s.apply(pooled);
    EXPECT_EQ(after(0), before(1));
    EXPECT_EQ(after(1), before(0));
  }
}

TEST(SwapHead, RejectsInvalidHead) {
  ClassifierHead h = random_head(4, 1);
  h.weight(0, 0) = std::nan("");
  EXPECT_THROW(swap_head_classes(h), ConfigError);
  h = random_head(4, 1);
  h.class_semantics = {"x", "x"};
  EXPECT_THROW(swap_head_classes(h), ConfigError);
}

TEST(Backward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const auto c = micro_config();
  for (int t = 0; t < 3; ++t) {
    auto model = init_model(c);
    memetag::testing::scramble(model, rng);
    const auto seq = memetag::testing::random_sequence(rng, c.vocab_size, c.max_len, 4);
    const Mat f = memetag::testing::random_features(rng, 4, c.d_v);
    for (const auto& [name, err] : memetag::testing::gradient_check(model, seq, f, t % 2)) {
      EXPECT_LE(err, 1e-4) << name;
    }
  }
}

TEST(Backward, BatchLossAveragesGradients) {
  std::mt19937_64 rng(6);
  const auto c = micro_config();
  auto model = init_model(c);
  memetag::testing::scramble(model, rng);
  const auto data = random_examples(rng, c, 3);
  std::vector<const Example*> batch = {&data[0], &data[1], &data[2]};
  VLModel grads = model.zeros_like();
  const double loss = batch_loss(model, batch, &grads);
  double expected = 0.0;
  VLModel sum = model.zeros_like();
  for (const auto* ex : batch) {
    ForwardCache cache;
    Eigen::Vector2d d;
    expected += cross_entropy(forward(model, ex->seq, ex->features, &cache), ex->label, &d);
    backward(model, cache, d, sum);
  }
  EXPECT_NEAR(loss, expected / 3.0, 1e-12);
  std::vector<Mat> g, s;
  grads.visit([&](const std::string&, const Mat& m) { g.push_back(m); });
  sum.visit([&](const std::string&, const Mat& m) { s.push_back(m / 3.0); });
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LE((g[i] - s[i]).norm(), 1e-12 * (1.0 + s[i].norm()));
}

TEST(Dropout, OnlyActiveWithStreamAndRate) {
  std::mt19937_64 rng(7);
  auto c = micro_config();
  auto model = init_model(c);
  memetag::testing::scramble(model, rng);
  const auto seq = memetag::testing::random_sequence(rng, c.vocab_size, c.max_len, 4);
  const Mat f = memetag::testing::random_features(rng, 4, c.d_v);
  SeededStream s(1, 2, 3);
  EXPECT_EQ(forward(model, seq, f, nullptr, {0.0, &s}), forward(model, seq, f));
  EXPECT_EQ(forward(model, seq, f, nullptr, {0.5, nullptr}), forward(model, seq, f));
  EXPECT_NE(forward(model, seq, f, nullptr, {0.5, &s}), forward(model, seq, f));
}

TEST(Adam, FirstStepMovesBySignTimesLr) {
  const auto c = micro_config();
  VLModel model = init_model(c);
  VLModel grads = model.zeros_like();
  grads.head.bias(0, 0) = 0.25;
  grads.head.bias(0, 1) = -4.0;
  TrainConfig tc;
  tc.lr = 0.01;
  Adam adam(model, tc);
  const VLModel before = model;
  adam.step(model, grads);
  EXPECT_EQ(adam.steps(), 1u);
  EXPECT_NEAR(model.head.bias(0, 0) - before.head.bias(0, 0), -0.01, 1e-9);
  EXPECT_NEAR(model.head.bias(0, 1) - before.head.bias(0, 1), 0.01, 1e-9);
  EXPECT_EQ(model.head.weight, before.head.weight);
}

TEST(PretrainItm, ZeroStepsLeavesParametersUnchanged) {
  std::mt19937_64 rng(8);
  const auto c = micro_config();
  const auto model = init_model(c, kItmSemantics);
  const auto data = random_examples(rng, c, 8);
  const auto out = pretrain_itm(model, data, {}, 0);
  EXPECT_TRUE(same_parameters(out, model));
  EXPECT_EQ(out.head.class_semantics, kItmSemantics);
}

TEST(PretrainItm, FirstStepLossIsFinite) {
  std::mt19937_64 rng(9);
  const auto c = micro_config();
  auto model = init_model(c, kItmSemantics);
  std::vector<double> losses;
  train_steps(model, random_examples(rng, c, 8), {.batch_size = 4}, 1, &losses);
  ASSERT_EQ(losses.size(), 1u);
  EXPECT_TRUE(std::isfinite(losses[0]));
}

TEST(PretrainItm, LearnsMatchingFromShortSchedule) {
  // 250 images give 500 pairs; 200 steps at d_h = 64.
  memetag::testing::ItmTransferSetup setup;
  setup.steps = 200;
  setup.batch_size = TrainConfig{}.batch_size;
  const auto out = memetag::testing::run_itm_transfer(1, setup);
  EXPECT_GT(out.itm_dev_accuracy, 0.8);
}

TEST(Divergence, NonFiniteLossReportsSeedAndStep) {
  std::mt19937_64 rng(10);
  const auto c = micro_config();
  auto model = init_model(c);
  model.head.bias(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    train_steps(model, random_examples(rng, c, 4), {.batch_size = 2, .seed = 77}, 3);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.seed(), 77u);
    EXPECT_EQ(e.step(), 1u);
    EXPECT_NE(std::string(e.what()).find("77"), std::string::npos);
  }
}

TEST(Transfer, SemanticsAndBackbone) {
  const auto c = micro_config();
  const auto itm = init_model(c, kItmSemantics);
  const auto t = transfer_itm_head(itm);
  EXPECT_EQ(t.head.class_semantics, kHatefulSemantics);
  EXPECT_TRUE(same_backbone(t, itm));
  EXPECT_EQ(t.head.weight.row(0), itm.head.weight.row(1));
  EXPECT_EQ(t.head.bias(0, 1), itm.head.bias(0, 0));
  EXPECT_THROW(transfer_itm_head(init_model(c)), ConfigError);

  const auto r = with_random_head(itm, 3);
  EXPECT_TRUE(same_backbone(r, itm));
  EXPECT_EQ(r.head.class_semantics, kHatefulSemantics);
  EXPECT_NE(r.head.weight, itm.head.weight);
}

TEST(Transfer, StepZeroRanksMismatchedAsHateful) {
  double transfer = 0.0, random = 0.0;
  const int seeds = 5;
  for (int s = 1; s <= seeds; ++s) {
    const auto out = memetag::testing::run_itm_transfer(static_cast<std::uint64_t>(s));
    transfer += out.transfer_auroc / seeds;
    random += out.random_auroc / seeds;
  }
  EXPECT_GT(transfer, 0.5);
  EXPECT_GT(transfer, random);
}

TEST(Fit, ZeroLearningRateLeavesParametersUnchanged) {
  const auto d = signal_data(40);
  ModelConfig c = micro_config(d.vocab_size, d.d_v, 32);
  const auto model = init_model(c);
  TrainConfig tc;
  tc.lr = 0.0;
  tc.epochs = 1;
  const auto r = fit(model, d.examples, d.examples, tc);
  EXPECT_TRUE(same_parameters(r.model, model));
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_TRUE(std::isfinite(r.history[0].train_loss));
}

TEST(Fit, FixedBatchLossDecreases) {
  const auto d = signal_data(40);
  const std::vector<Example> batch(d.examples.begin(), d.examples.begin() + 16);
  ModelConfig c = memetag::testing::desk_config(d.vocab_size, d.d_v, 3);
  c.max_len = 32;
  auto model = init_model(c);
  std::vector<const Example*> ptrs;
  for (const auto& e : batch) ptrs.push_back(&e);
  const double before = batch_loss(model, ptrs, nullptr);
  std::vector<double> losses;
  train_steps(model, batch, {.batch_size = 16, .seed = 3}, 50, &losses);
  const double after = batch_loss(model, ptrs, nullptr);
  EXPECT_EQ(losses.size(), 50u);
  EXPECT_LT(after, before);
  EXPECT_LT(after, 0.5 * before);
}

TEST(Fit, DeterministicTracesAndBestSnapshot) {
  const auto d = signal_data(60);
  ModelConfig c = micro_config(d.vocab_size, d.d_v, 32);
  c.dropout = 0.1;
  const std::vector<Example> train(d.examples.begin(), d.examples.begin() + 40);
  const std::vector<Example> dev(d.examples.begin() + 40, d.examples.end());
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 8;
  const auto a = fit(init_model(c), train, dev, tc);
  const auto b = fit(init_model(c), train, dev, tc);
  ASSERT_EQ(a.history.size(), 4u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].epoch, i + 1);
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].dev_auroc, b.history[i].dev_auroc);
  }
  EXPECT_TRUE(same_parameters(a.model, b.model));
  ASSERT_GE(a.best_epoch, 1u);
  double best = 0.0;
  for (const auto& h : a.history) best = std::max(best, h.dev_auroc.value_or(0.0));
  EXPECT_EQ(a.history[a.best_epoch - 1].dev_auroc.value_or(0.0), best);
  EXPECT_EQ(auroc(predict_proba(a.model, dev), labels_of(dev)), best);
}

TEST(Predict, ProbabilitiesInRangeAndRepeatable) {
  std::mt19937_64 rng(11);
  const auto c = micro_config();
  auto model = init_model(c);
  memetag::testing::scramble(model, rng, 1.0);
  const auto data = random_examples(rng, c, 30);
  const auto p = predict_proba(model, data, "m");
  EXPECT_EQ(p.model_name, "m");
  ASSERT_EQ(p.scores.size(), 30u);
  for (const auto& [id, s] : p.scores) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
  EXPECT_EQ(predict_proba(model, data, "m").scores, p.scores);
  auto dup = data;
  dup.push_back(data[0]);
  EXPECT_THROW(predict_proba(model, dup), EnsembleError);
}

TEST(ItmPairs, OwnAndBorrowedCaptions) {
  SyntheticRegionProvider provider;
  const auto corpus = make_synthetic_corpus(provider, {.n_memes = 20});
  const auto records = corpus.all();
  const Vocabulary vocab = memetag::testing::caption_vocabulary(records);
  std::vector<CaptionedImage> imgs;
  for (const auto& r : records) imgs.push_back({r.id, r.text, provider.get_regions(r.id)});
  const auto pairs = make_itm_pairs(imgs, vocab, 32, 4);
  const auto again = make_itm_pairs(imgs, vocab, 32, 4);
  ASSERT_EQ(again.size(), pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(again[i].seq, pairs[i].seq);
    EXPECT_EQ(again[i].label, pairs[i].label);
  }
  std::size_t pos = 0, neg = 0;
  std::set<MemeId> ids;
  for (const auto& p : pairs) {
    EXPECT_TRUE(ids.insert(p.id).second);
    (p.label == 1 ? pos : neg) += 1;
    for (std::size_t i = 0; i < p.seq.length(); ++i) {
      EXPECT_NE(p.seq.segment_ids[i], kEntitySegment);
      EXPECT_NE(p.seq.segment_ids[i], kPersonSegment);
    }
  }
  EXPECT_EQ(pos, imgs.size());
  EXPECT_GE(neg, imgs.size() - 2);
}

TEST(Checkpoint, BitExactRoundTrip) {
  memetag::testing::TempDir dir;
  std::mt19937_64 rng(12);
  auto c = micro_config();
  auto model = init_model(c, kItmSemantics);
  memetag::testing::scramble(model, rng, 1.0);
  model.head.bias(0, 0) = 0.1 + 0.2;  // not representable as a short decimal
  save_checkpoint(model, "abc", dir / "m.json");
  const auto loaded = load_checkpoint(dir / "m.json");
  EXPECT_EQ(loaded.vocab_hash, "abc");
  EXPECT_EQ(loaded.model.config, model.config);
  EXPECT_EQ(loaded.model.head.class_semantics, kItmSemantics);
  EXPECT_TRUE(same_parameters(loaded.model, model));
}

TEST(Checkpoint, RefusesForeignVocabulary) {
  memetag::testing::TempDir dir;
  Vocabulary v;
  v.add("alpha");
  auto c = micro_config(v.size());
  save_checkpoint(init_model(c), v.hash(), dir / "m.json");
  EXPECT_NO_THROW(load_checkpoint(dir / "m.json", v));
  Vocabulary other = v;
  other.add("beta");
  EXPECT_THROW(load_checkpoint(dir / "m.json", other), VocabularyMismatchError);
}

TEST(Checkpoint, RejectsDamagedFiles) {
  memetag::testing::TempDir dir;
  EXPECT_THROW(load_checkpoint(dir / "none.json"), CheckpointError);
  { std::ofstream(dir / "junk.json") << "{\"format\": 3"; }
  EXPECT_THROW(load_checkpoint(dir / "junk.json"), CheckpointError);
  { std::ofstream(dir / "other.json") << R"({"format": "something-else"})"; }
  EXPECT_THROW(load_checkpoint(dir / "other.json"), CheckpointError);
}
