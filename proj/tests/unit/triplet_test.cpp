#include <random>

#include "gtest/gtest.h"
#include "support/oracles.hpp"
#include "tzsl/error.hpp"
#include "tzsl/triplet.hpp"

namespace tzsl {
namespace {

using testing::oracle_argmin;
using testing::oracle_classes;
using testing::oracle_all;
using testing::random_problem;

std::vector<double> random_anchor(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  std::vector<double> x(m);
  for (double& v : x) v = u(rng);
  return x;
}

SemanticTable two_by_two() {
  SemanticTable t(2);
  t.add({"s0", "s0", {1.0, 0.0}, true});
  t.add({"s1", "s1", {0.0, 1.0}, true});
  t.add({"u0", "u0", {-1.0, 0.0}, false});
  t.add({"u1", "u1", {0.0, -1.0}, false});
  return t;
}

// Identity-like net, so projections are tanh(tanh(e)).
ProjectionNet identity_net() {
  ProjectionNet net(NetShape{2, 2, 2});
  net.w1(0, 0) = net.w1(1, 1) = 1.0;
  net.w2(0, 0) = net.w2(1, 1) = 1.0;
  return net;
}

TEST(NearestClass, TiesGoToSmallestIndex) {
  DenseMatrix points(3, 1, std::vector<double>{1.0, -1.0, 1.0});
  std::vector<double> anchor{0.0};
  std::vector<ClassIndex> all{0, 1, 2};
  EXPECT_EQ(nearest_class(points, anchor, all), 0u);
  std::vector<ClassIndex> tail{1, 2};
  EXPECT_EQ(nearest_class(points, anchor, tail), 1u);
  EXPECT_THROW(nearest_class(points, anchor, std::vector<ClassIndex>{}), ValidationError);
}

TEST(PositiveZsl, SingleUnseenClass) {
  SemanticTable t(1);
  t.add({"s", "s", {1.0}, true});
  t.add({"u", "u", {-1.0}, false});
  auto net = ProjectionNet::glorot(NetShape{1, 3, 2}, 1);
  EXPECT_EQ(assign_positive_zsl(net, std::vector<double>{0.7, 0.7}, t), 1u);
}

TEST(PositiveZsl, ExactProjectionWins) {
  auto t = two_by_two();
  auto net = identity_net();
  auto anchor = forward(net, t[3].embedding);
  EXPECT_EQ(assign_positive_zsl(net, anchor, t), 3u);
}

TEST(PositiveZsl, NoUnseenClassesIsAnError) {
  SemanticTable t(1);
  t.add({"s", "s", {1.0}, true});
  auto net = ProjectionNet::glorot(NetShape{1, 3, 2}, 1);
  EXPECT_THROW(assign_positive_zsl(net, std::vector<double>{0.0, 0.0}, t), ValidationError);
}

TEST(PositiveZsl, MatchesExhaustiveScan) {
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto p = random_problem(seed, 8, 3, 5);
    auto unseen = oracle_classes(p.table, false);
    for (int q = 0; q < 20; ++q) {
      auto a = random_anchor(rng, p.net.shape().feature_dim);
      EXPECT_EQ(assign_positive_zsl(p.net, a, p.table), oracle_argmin(p.net, p.table, a, unseen));
    }
  }
}

TEST(PositiveGzsl, SeenNeighbourIsDiscarded) {
  auto t = two_by_two();
  auto net = identity_net();
  auto choice = assign_positive_gzsl(net, forward(net, t[1].embedding), t);
  EXPECT_EQ(choice.positive, 1u);
  EXPECT_FALSE(choice.retained);
}

TEST(PositiveGzsl, UnseenNeighbourIsRetained) {
  auto t = two_by_two();
  auto net = identity_net();
  auto choice = assign_positive_gzsl(net, forward(net, t[2].embedding), t);
  EXPECT_EQ(choice.positive, 2u);
  EXPECT_TRUE(choice.retained);
}

TEST(PositiveGzsl, MatchesExhaustiveScan) {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = random_problem(100 + seed);
    auto all = oracle_all(p.table);
    for (int q = 0; q < 50; ++q) {
      auto a = random_anchor(rng, p.net.shape().feature_dim);
      auto want = oracle_argmin(p.net, p.table, a, all);
      auto got = assign_positive_gzsl(p.net, a, p.table);
      EXPECT_EQ(got.positive, want);
      EXPECT_EQ(got.retained, !p.table.is_seen(want));
    }
  }
}

TEST(Negative, SingleSeenClass) {
  SemanticTable t(1);
  t.add({"s", "s", {1.0}, true});
  t.add({"u", "u", {-1.0}, false});
  t.add({"v", "v", {0.5}, false});
  auto net = ProjectionNet::glorot(NetShape{1, 3, 2}, 1);
  EXPECT_EQ(assign_negative(net, std::vector<double>{-0.5, 0.1}, t), 0u);
}

TEST(Negative, CoincidingSeenProjection) {
  auto t = two_by_two();
  auto net = identity_net();
  EXPECT_EQ(assign_negative(net, forward(net, t[1].embedding), t), 1u);
}

TEST(Negative, MatchesExhaustiveScan) {
  std::mt19937_64 rng(6);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = random_problem(200 + seed, 8, 4, 2);
    auto seen = oracle_classes(p.table, true);
    for (int q = 0; q < 50; ++q) {
      auto a = random_anchor(rng, p.net.shape().feature_dim);
      EXPECT_EQ(assign_negative(p.net, a, p.table), oracle_argmin(p.net, p.table, a, seen));
    }
  }
}

TEST(FormTriplets, ZslBatchOfOne) {
  auto t = two_by_two();
  auto net = identity_net();
  std::vector<double> a{0.3, 0.3};
  std::vector<std::span<const double>> batch{a};
  auto out = form_triplets(net, batch, t, Mode::zsl);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].retained);
  EXPECT_EQ(out[0].anchor, 0u);
  EXPECT_FALSE(t.is_seen(out[0].positive));
  EXPECT_TRUE(t.is_seen(out[0].negative));
}

TEST(FormTriplets, GzslAllSeenNeighbours) {
  auto t = two_by_two();
  auto net = identity_net();
  auto a = forward(net, t[0].embedding);
  auto b = forward(net, t[1].embedding);
  std::vector<std::span<const double>> batch{a, b, a};
  for (const auto& x : form_triplets(net, batch, t, Mode::gzsl)) EXPECT_FALSE(x.retained);
}

TEST(FormTriplets, MixedBatchMatchesOracle) {
  std::mt19937_64 rng(7);
  auto p = random_problem(300);
  std::vector<std::vector<double>> anchors;
  for (int i = 0; i < 40; ++i) anchors.push_back(random_anchor(rng, p.net.shape().feature_dim));
  std::vector<std::span<const double>> batch(anchors.begin(), anchors.end());
  auto all = oracle_all(p.table);
  auto seen = oracle_classes(p.table, true);
  auto unseen = oracle_classes(p.table, false);
  for (Mode mode : {Mode::zsl, Mode::gzsl}) {
    auto got = form_triplets(p.net, batch, p.table, mode);
    ASSERT_EQ(got.size(), anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const auto pos = oracle_argmin(p.net, p.table, anchors[i], mode == Mode::zsl ? unseen : all);
      EXPECT_EQ(got[i].anchor, i);
      EXPECT_EQ(got[i].positive, pos);
      EXPECT_EQ(got[i].retained, mode == Mode::zsl || !p.table.is_seen(pos));
      EXPECT_EQ(got[i].negative, oracle_argmin(p.net, p.table, anchors[i], seen));
    }
  }
}

TEST(FormTriplets, EmptyBatchIsAnError) {
  auto t = two_by_two();
  EXPECT_THROW(form_triplets(identity_net(), {}, t, Mode::zsl), ValidationError);
}

TEST(FormTriplets, ShapeMismatch) {
  auto t = two_by_two();
  std::vector<double> a{0.1, 0.2, 0.3};
  std::vector<std::span<const double>> batch{a};
  EXPECT_THROW(form_triplets(identity_net(), batch, t, Mode::zsl), ShapeError);
}

}  // namespace
}  // namespace tzsl
