#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "support/oracles.hpp"
#include "tzsl/error.hpp"
#include "tzsl/losses.hpp"

namespace tzsl {
namespace {

using testing::max_relative_error;
using testing::oracle_forward;
using testing::oracle_inductive;
using testing::oracle_sq;
using testing::oracle_unsupervised;
using testing::random_problem;

// Projections: class 0 (seen) -> (q, 0), class 1 (unseen) -> (-q, 0) with
// q = tanh(1).
struct Line {
  SemanticTable table{1};
  ProjectionNet net{NetShape{1, 1, 2}};
  double q = std::tanh(1.0);

  Line() {
    table.add({"neg", "neg", {20.0}, true});
    table.add({"pos", "pos", {-20.0}, false});
    net.w1(0, 0) = 1.0;
    net.w2(0, 0) = 1.0;
  }

  // Anchor at squared distances dp from the positive and dn from the negative.
  std::vector<double> anchor(double dp, double dn) const {
    const double s = 2.0 * q;
    const double x = (dp - dn + s * s) / (2.0 * s);
    return {-q + x, std::sqrt(dp - x * x)};
  }
};

TEST(Inductive, PerfectFitIsZero) {
  auto p = random_problem(1);
  std::vector<std::vector<double>> targets;
  for (auto c : p.seen_labels) targets.push_back(forward(p.net, p.table[c].embedding));
  std::vector<LabeledFeature> batch;
  for (std::size_t i = 0; i < targets.size(); ++i) batch.push_back({targets[i], p.seen_labels[i]});
  auto r = inductive_loss(p.net, p.table, batch, 0.0);
  EXPECT_EQ(r.breakdown.total, 0.0);
  EXPECT_EQ(r.gradient, ProjectionNet(p.net.shape()));
}

TEST(Inductive, UnitResidualGivesOne) {
  SemanticTable t(2);
  t.add({"a", "a", {0.3, -0.2}, true});
  ProjectionNet net(NetShape{2, 3, 4});
  std::vector<double> x{0.0, 1.0, 0.0, 0.0};
  std::vector<LabeledFeature> batch{{x, 0}};
  EXPECT_EQ(inductive_loss(net, t, batch, 0.0).breakdown.total, 1.0);
}

TEST(Inductive, MatchesScalarOracleAndFiniteDifferences) {
  double worst_value = 0.0, worst_grad = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto p = random_problem(seed);
    auto batch = p.seen_batch();
    const double lambda = 0.01 * static_cast<double>(seed % 3);
    auto r = inductive_loss(p.net, p.table, batch, lambda);
    worst_value = std::max(worst_value, std::abs(r.breakdown.total - oracle_inductive(p.net, p.table, batch, lambda)));
    auto fd = finite_diff_grad(
        [&](const ProjectionNet& n) { return oracle_inductive(n, p.table, batch, lambda); }, p.net,
        1e-5);
    worst_grad = std::max(worst_grad, max_relative_error(r.gradient, fd));
  }
  EXPECT_LE(worst_value, 1e-12);
  EXPECT_LT(worst_grad, 1e-4);
}

TEST(Inductive, Errors) {
  auto p = random_problem(2);
  EXPECT_THROW(inductive_loss(p.net, p.table, {}, 0.0), ValidationError);
  std::vector<LabeledFeature> unseen{{p.seen_features[0], 4}};
  EXPECT_THROW(inductive_loss(p.net, p.table, unseen, 0.0), ValidationError);
  auto batch = p.seen_batch();
  EXPECT_THROW(inductive_loss(p.net, p.table, batch, -1.0), ValidationError);
}

TEST(Inductive, BiasesAreNotRegularized) {
  ProjectionNet net(NetShape{1, 2, 1});
  net.b1 = {3.0, 4.0};
  net.b2 = {5.0};
  net.w1(0, 1) = 2.0;
  EXPECT_EQ(weight_norm_squared(net), 4.0);
}

TEST(Triplet, MarginSatisfiedGivesZero) {
  Line l;
  auto a = l.anchor(1.0, 4.0);
  ASSERT_NEAR(oracle_sq(a, forward(l.net, l.table[1].embedding)), 1.0, 1e-12);
  ASSERT_NEAR(oracle_sq(a, forward(l.net, l.table[0].embedding)), 4.0, 1e-12);
  std::vector<std::span<const double>> batch{a};
  std::vector<TripletAssignment> as{{0, 1, 0, true}};
  auto r = triplet_loss(l.net, l.table, as, batch, 1.0);
  EXPECT_EQ(r.breakdown.unsupervised, 0.0);
  EXPECT_EQ(r.gradient, ProjectionNet(l.net.shape()));
}

TEST(Triplet, ViolatedMarginArithmetic) {
  Line l;
  auto a = l.anchor(4.0, 2.0);
  std::vector<std::span<const double>> batch{a};
  std::vector<TripletAssignment> as{{0, 1, 0, true}};
  EXPECT_NEAR(triplet_loss(l.net, l.table, as, batch, 1.0).breakdown.unsupervised, 3.0, 1e-12);
  EXPECT_NEAR(triplet_loss(l.net, l.table, as, batch, 1.0, Variant::euclidean)
                  .breakdown.unsupervised,
              4.0, 1e-12);
}

TEST(Triplet, NormalizedByFullBatch) {
  Line l;
  auto a = l.anchor(4.0, 2.0);
  auto b = l.anchor(0.5, 3.0);
  std::vector<std::span<const double>> batch{a, b, b, b};
  std::vector<TripletAssignment> as{
      {0, 1, 0, true}, {1, 1, 0, false}, {2, 1, 0, false}, {3, 1, 0, false}};
  auto r = triplet_loss(l.net, l.table, as, batch, 1.0);
  EXPECT_NEAR(r.breakdown.unsupervised, 0.75, 1e-12);
  EXPECT_EQ(r.breakdown.retained, 1u);
}

TEST(Triplet, AllDiscardedGivesZero) {
  auto p = random_problem(3);
  auto batch = p.unlabeled_batch();
  auto as = form_triplets(p.net, batch, p.table, Mode::zsl);
  for (auto& a : as) a.retained = false;
  auto r = triplet_loss(p.net, p.table, as, batch, 1.0);
  EXPECT_EQ(r.breakdown.unsupervised, 0.0);
  EXPECT_EQ(r.breakdown.retained, 0u);
  EXPECT_EQ(r.gradient, ProjectionNet(p.net.shape()));
}

TEST(Triplet, NegativeMarginRejected) {
  Line l;
  auto a = l.anchor(1.0, 1.0);
  std::vector<std::span<const double>> batch{a};
  std::vector<TripletAssignment> as{{0, 1, 0, true}};
  EXPECT_THROW(triplet_loss(l.net, l.table, as, batch, -0.5), ValidationError);
}

double oracle_euclidean(const ProjectionNet& net, const SemanticTable& table,
                        std::span<const TripletAssignment> as,
                        std::span<const std::span<const double>> unlabeled) {
  double s = 0.0;
  for (const auto& a : as)
    if (a.retained) s += oracle_sq(oracle_forward(net, table[a.positive].embedding), unlabeled[a.anchor]);
  return s / static_cast<double>(unlabeled.size());
}

// True when every retained hinge is at least `gap` away from its kink, so
// central differences with a tiny step stay on one branch.
bool clear_of_kinks(const testing::RandomProblem& p, std::span<const TripletAssignment> as,
                    double margin, double gap) {
  for (const auto& a : as) {
    if (!a.retained) continue;
    const double pos = oracle_sq(oracle_forward(p.net, p.table[a.positive].embedding), p.unlabeled[a.anchor]);
    const double neg = oracle_sq(oracle_forward(p.net, p.table[a.negative].embedding), p.unlabeled[a.anchor]);
    if (std::abs(pos + margin - neg) < gap) return false;
  }
  return true;
}

TEST(Triplet, MatchesScalarOracleAndFiniteDifferences) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> margin_dist(0.0, 2.0);
  std::size_t checked = 0;
  double worst_value = 0.0, worst_grad = 0.0;
  for (std::uint64_t seed = 0; checked < 100; ++seed) {
    auto p = random_problem(1000 + seed);
    auto batch = p.unlabeled_batch();
    const Mode mode = seed % 2 ? Mode::gzsl : Mode::zsl;
    auto as = form_triplets(p.net, batch, p.table, mode);
    const double margin = margin_dist(rng);
    if (!clear_of_kinks(p, as, margin, 1e-3)) continue;
    ++checked;
    for (Variant v : {Variant::triplet, Variant::euclidean}) {
      auto oracle = [&](const ProjectionNet& n) {
        return v == Variant::triplet ? oracle_unsupervised(n, p.table, as, batch, margin)
                                     : oracle_euclidean(n, p.table, as, batch);
      };
      auto r = triplet_loss(p.net, p.table, as, batch, margin, v);
      worst_value = std::max(worst_value, std::abs(r.breakdown.unsupervised - oracle(p.net)));
      worst_grad = std::max(worst_grad, max_relative_error(r.gradient, finite_diff_grad(oracle, p.net, 1e-5)));
    }
  }
  EXPECT_LE(worst_value, 1e-12);
  EXPECT_LT(worst_grad, 1e-4);
}

TEST(Transductive, AlphaZeroEqualsInductiveExactly) {
  auto p = random_problem(4);
  auto seen = p.seen_batch();
  auto batch = p.unlabeled_batch();
  auto as = form_triplets(p.net, batch, p.table, Mode::zsl);
  auto t = transductive_loss(p.net, p.table, seen, batch, as, 0.0, 0.01, 1.0);
  auto i = inductive_loss(p.net, p.table, seen, 0.01);
  EXPECT_EQ(t.breakdown.total, i.breakdown.total);
  EXPECT_EQ(t.gradient, i.gradient);
}

TEST(Transductive, NoRetainedAnchorsEqualsInductive) {
  auto p = random_problem(5);
  auto seen = p.seen_batch();
  auto batch = p.unlabeled_batch();
  auto as = form_triplets(p.net, batch, p.table, Mode::zsl);
  for (auto& a : as) a.retained = false;
  auto t = transductive_loss(p.net, p.table, seen, batch, as, 0.15, 0.01, 1.0);
  auto i = inductive_loss(p.net, p.table, seen, 0.01);
  EXPECT_EQ(t.breakdown.total, i.breakdown.total);
  EXPECT_EQ(t.gradient, i.gradient);
}

TEST(Transductive, RegularizerAppliedOnce) {
  auto p = random_problem(6);
  auto seen = p.seen_batch();
  auto batch = p.unlabeled_batch();
  auto as = form_triplets(p.net, batch, p.table, Mode::zsl);
  auto t = transductive_loss(p.net, p.table, seen, batch, as, 0.5, 0.1, 1.0);
  const double want = oracle_inductive(p.net, p.table, seen, 0.1) +
                      0.5 * oracle_unsupervised(p.net, p.table, as, batch, 1.0);
  EXPECT_NEAR(t.breakdown.total, want, 1e-12);
}

TEST(Transductive, MatchesScalarOracleAndFiniteDifferences) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t checked = 0;
  double worst_value = 0.0, worst_grad = 0.0;
  for (std::uint64_t seed = 0; checked < 100; ++seed) {
    auto p = random_problem(5000 + seed);
    auto seen = p.seen_batch();
    auto batch = p.unlabeled_batch();
    auto as = form_triplets(p.net, batch, p.table, seed % 2 ? Mode::gzsl : Mode::zsl);
    const double alpha = unit(rng), lambda = 0.1 * unit(rng), margin = 2.0 * unit(rng);
    if (!clear_of_kinks(p, as, margin, 1e-3)) continue;
    ++checked;
    auto oracle = [&](const ProjectionNet& n) {
      return oracle_inductive(n, p.table, seen, lambda) +
             alpha * oracle_unsupervised(n, p.table, as, batch, margin);
    };
    auto r = transductive_loss(p.net, p.table, seen, batch, as, alpha, lambda, margin);
    worst_value = std::max(worst_value, std::abs(r.breakdown.total - oracle(p.net)));
    worst_grad = std::max(worst_grad, max_relative_error(r.gradient, finite_diff_grad(oracle, p.net, 1e-5)));
  }
  EXPECT_LE(worst_value, 1e-12);
  EXPECT_LT(worst_grad, 1e-4);
}

TEST(Transductive, Errors) {
  auto p = random_problem(7);
  auto seen = p.seen_batch();
  auto batch = p.unlabeled_batch();
  auto as = form_triplets(p.net, batch, p.table, Mode::zsl);
  EXPECT_THROW(transductive_loss(p.net, p.table, seen, batch, as, -0.1, 0.0, 1.0), ValidationError);
  as.pop_back();
  EXPECT_THROW(transductive_loss(p.net, p.table, seen, batch, as, 0.1, 0.0, 1.0), ValidationError);
}

}  // namespace
}  // namespace tzsl
