#include <gtest/gtest.h>

#include <algorithm>
#include <tuple>
#include <vector>

#include "embedrank/mining.hpp"
#include "embedrank/synth.hpp"
#include "test_util.hpp"

using namespace embedrank;
using testutil::random_vec;

TEST(ClassifyTriplet, PaperConditions) {
  EXPECT_EQ(classify_triplet(0.5, 0.3, 0.2), TripletClass::kHard);
  EXPECT_EQ(classify_triplet(0.5, 0.6, 0.2), TripletClass::kSemiHard);
  EXPECT_EQ(classify_triplet(0.5, 0.8, 0.2), TripletClass::kEasy);
}

TEST(ClassifyTriplet, BoundaryConventions) {
  // equal distances: loss is exactly gamma, still trains
  EXPECT_EQ(classify_triplet(0.5, 0.5, 0.2), TripletClass::kHard);
  // d_an == d_ap + gamma: loss is exactly zero, no gradient
  EXPECT_EQ(classify_triplet(0.5, 0.7, 0.2), TripletClass::kEasy);
}

TEST(ClassifyTriplet, NegativeInputsThrow) {
  EXPECT_THROW(classify_triplet(-0.1, 0.5, 0.2), DomainError);
  EXPECT_THROW(classify_triplet(0.1, -0.5, 0.2), DomainError);
  EXPECT_THROW(classify_triplet(0.1, 0.5, -0.2), DomainError);
}

TEST(ClassifyTriplet, ExhaustiveAndExclusive) {
  Rng rng(2025);
  for (int trial = 0; trial < 10000; ++trial) {
    const double d_ap = rng.uniform(0.0, 4.0);
    const double d_an = rng.uniform(0.0, 4.0);
    const double gamma = rng.uniform(1e-6, 1.0);
    const TripletClass cls = classify_triplet(d_ap, d_an, gamma);
    const bool hard = d_an <= d_ap;
    const bool semi = d_ap < d_an && d_an < d_ap + gamma;
    const bool easy = d_an >= d_ap + gamma;
    EXPECT_EQ(hard + semi + easy, 1);
    EXPECT_EQ(cls == TripletClass::kHard, hard);
    EXPECT_EQ(cls == TripletClass::kSemiHard, semi);
    EXPECT_EQ(cls == TripletClass::kEasy, easy);
  }
}

TEST(TripletLoss, HandValues) {
  // squared distances 0.5/0.3 with margin 0.2 -> 0.4; 0.5/0.8 -> clamped to 0
  const Vec a{0.0, 0.0};
  Vec p{std::sqrt(0.5), 0.0};
  Vec n{std::sqrt(0.3), 0.0};
  EXPECT_NEAR(triplet_loss(a, p, n, 0.2), 0.4, 1e-12);
  n = {std::sqrt(0.8), 0.0};
  EXPECT_NEAR(triplet_loss(a, p, n, 0.2), 0.0, 1e-12);
}

TEST(TripletLoss, AnchorEqualsPositiveZeroMargin) {
  Rng rng(8);
  const Vec a = random_vec(5, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec n = random_vec(5, rng);
    EXPECT_EQ(triplet_loss(a, a, n, 0.0), 0.0);
  }
}

TEST(TripletLoss, DimMismatchThrows) {
  EXPECT_THROW(triplet_loss({1.0, 2.0}, {1.0}, {0.0, 0.0}, 0.1), DimensionError);
}

TEST(TripletLoss, ZeroIffEasyAndClassBounds) {
  Rng rng(77);
  for (int trial = 0; trial < 5000; ++trial) {
    const Vec a = random_vec(4, rng);
    const Vec p = random_vec(4, rng);
    const Vec n = random_vec(4, rng);
    const double gamma = rng.uniform(1e-4, 0.8);
    const double loss = triplet_loss(a, p, n, gamma);
    const TripletClass cls =
        classify_triplet(squared_distance(a, p), squared_distance(a, n), gamma);
    EXPECT_GE(loss, 0.0);
    if (cls == TripletClass::kEasy) {
      EXPECT_EQ(loss, 0.0);
    } else if (cls == TripletClass::kHard) {
      EXPECT_GE(loss, gamma);
    } else {
      EXPECT_GT(loss, 0.0);
      EXPECT_LT(loss, gamma);
    }
  }
}

namespace {

std::vector<std::tuple<int, int, int, TripletClass>> brute_force_mine(
    const std::vector<WordSample>& samples, const EmbedNetParams& model, double gamma) {
  std::vector<std::tuple<int, int, int, TripletClass>> out;
  for (size_t i = 0; i < samples.size(); ++i) {
    const WordSample& s = samples[i];
    std::vector<int> positives;
    for (size_t j = 0; j < s.hyps.size(); ++j) {
      if (s.hyps[j].text == s.gt_text) positives.push_back(static_cast<int>(j));
    }
    if (positives.empty() && s.gt_psi) positives.push_back(-1);
    if (positives.empty()) continue;
    const Vec anchor = embednet_forward(model, s.phi);
    for (int pi : positives) {
      const Vec pos =
          embednet_forward(model, pi < 0 ? *s.gt_psi : s.hyps[pi].psi);
      const double d_ap = squared_distance(anchor, pos);
      for (size_t j = 0; j < s.hyps.size(); ++j) {
        if (s.hyps[j].text == s.gt_text) continue;
        const Vec neg = embednet_forward(model, s.hyps[j].psi);
        const TripletClass cls = classify_triplet(d_ap, squared_distance(anchor, neg), gamma);
        if (cls != TripletClass::kEasy) {
          out.emplace_back(static_cast<int>(i), pi, static_cast<int>(j), cls);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(MineTriplets, EqualsBruteForceEnumeration) {
  SynthConfig cfg;
  cfg.n_train = 50;
  cfg.n_val = 1;
  cfg.n_test = 1;
  cfg.k = 20;
  cfg.dim = 16;
  cfg.seed = 21;
  const SynthDataset data = synth_generate(cfg);
  const EmbedNetParams model = init_embednet(16, {10, 8}, 4, 3);
  const double gamma = 0.2;

  MiningStats stats;
  const std::vector<Triplet> mined = mine_triplets(data.train, model, gamma, 99, &stats);
  std::vector<std::tuple<int, int, int, TripletClass>> got;
  for (const Triplet& t : mined) {
    got.emplace_back(t.sample_index, t.positive_index, t.negative_index, t.cls);
  }
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, brute_force_mine(data.train, model, gamma));
  EXPECT_EQ(stats.hard + stats.semi_hard, static_cast<long>(mined.size()));
  EXPECT_EQ(stats.total, stats.hard + stats.semi_hard + stats.easy);
}

TEST(MineTriplets, AllEasyContributesNothing) {
  // one sample whose negatives are far beyond the margin in projected space
  WordSample s;
  s.id = "a";
  s.gt_text = "w";
  s.phi = {1.0, 0.0};
  s.gt_psi = Vec{1.0, 0.0};
  s.hyps.push_back({"w", 0.9, {1.0, 0.0}});
  s.hyps.push_back({"x", 0.5, {-1.0, 0.0}});
  s.hyps.push_back({"y", 0.4, {-1.0, 0.01}});
  s.hyps.push_back({"z", 0.3, {-1.0, -0.01}});
  // identity-like model: slope-1 activations, identity weights
  EmbedNetParams model = init_embednet(2, {2, 2}, 2, 0);
  for (DenseLayer& l : model.layers) {
    for (double& w : l.weights.data) w = 0.0;
    l.weights(0, 0) = 1.0;
    l.weights(1, 1) = 1.0;
    l.bias.assign(2, 0.0);
    l.prelu_slopes.assign(2, 1.0);
  }
  MiningStats stats;
  const auto mined = mine_triplets({s}, model, 0.2, 1, &stats);
  EXPECT_TRUE(mined.empty());
  EXPECT_EQ(stats.easy, 3);
}

TEST(MineTriplets, EnumerationCountsHardAndSemiHard) {
  // anchor at origin-ish, one positive, two negatives placed to be hard and
  // semi-hard in the identity-projected space
  WordSample s;
  s.id = "a";
  s.gt_text = "w";
  s.phi = {1.0, 0.0};
  s.gt_psi = Vec{0.8, 0.6};  // unit vector, squared distance 0.4 to the anchor
  s.hyps.push_back({"hardneg", 0.5, {1.0, 0.0}});  // distance 0 to anchor: hard
  s.hyps.push_back({"semineg", 0.4, {0.6, 0.8}});  // squared distance 0.8: semi-hard
  EmbedNetParams model = init_embednet(2, {2, 2}, 2, 0);
  for (DenseLayer& l : model.layers) {
    for (double& w : l.weights.data) w = 0.0;
    l.weights(0, 0) = 1.0;
    l.weights(1, 1) = 1.0;
    l.bias.assign(2, 0.0);
    l.prelu_slopes.assign(2, 1.0);
  }
  MiningStats stats;
  const auto mined = mine_triplets({s}, model, 10.0, 1, &stats);
  EXPECT_EQ(mined.size(), 2u);
  EXPECT_EQ(stats.hard, 1);
  EXPECT_EQ(stats.semi_hard, 1);
}

TEST(MineTriplets, SampleWithoutPositiveIsSkippedAndCounted) {
  WordSample s;
  s.id = "a";
  s.gt_text = "w";
  s.phi = {1.0, 0.5};
  s.hyps.push_back({"x", 0.5, {0.3, 0.4}});
  const EmbedNetParams model = init_embednet(2, {3, 3}, 2, 5);
  MiningStats stats;
  const auto mined = mine_triplets({s}, model, 0.2, 1, &stats);
  EXPECT_TRUE(mined.empty());
  EXPECT_EQ(stats.skipped_no_positive, 1);
}

TEST(MineTriplets, DeterministicAndSeedDependentOrder) {
  SynthConfig cfg;
  cfg.n_train = 20;
  cfg.n_val = 1;
  cfg.n_test = 1;
  cfg.k = 8;
  cfg.dim = 12;
  cfg.seed = 5;
  const SynthDataset data = synth_generate(cfg);
  const EmbedNetParams model = init_embednet(12, {8, 6}, 4, 9);
  const auto a = mine_triplets(data.train, model, 0.2, 42);
  const auto b = mine_triplets(data.train, model, 0.2, 42);
  ASSERT_EQ(a.size(), b.size());
  bool same_order_rerun = true;
  for (size_t i = 0; i < a.size(); ++i) {
    same_order_rerun &= a[i].sample_index == b[i].sample_index &&
                        a[i].positive_index == b[i].positive_index &&
                        a[i].negative_index == b[i].negative_index;
  }
  EXPECT_TRUE(same_order_rerun);

  const auto c = mine_triplets(data.train, model, 0.2, 43);
  ASSERT_EQ(a.size(), c.size());
  bool same_order_other_seed = true;
  for (size_t i = 0; i < a.size(); ++i) {
    same_order_other_seed &= a[i].sample_index == c[i].sample_index &&
                             a[i].positive_index == c[i].positive_index &&
                             a[i].negative_index == c[i].negative_index;
  }
  EXPECT_FALSE(same_order_other_seed);
}
