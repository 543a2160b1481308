#pragma once

#include <cstddef>
#include <span>

#include "tzsl/config.hpp"
#include "tzsl/dataset.hpp"
#include "tzsl/numerics.hpp"
#include "tzsl/triplet.hpp"

namespace tzsl {

// total = supervised + alpha * unsupervised + lambda * regularizer, where
// regularizer is the unscaled squared weight norm.
struct LossBreakdown {
  double total = 0.0;
  double supervised = 0.0;
  double unsupervised = 0.0;
  double regularizer = 0.0;
  std::size_t retained = 0;

  bool operator==(const LossBreakdown&) const = default;
};

struct LossResult {
  LossBreakdown breakdown;
  NetGradient gradient;
};

// ||w1||^2 + ||w2||^2. Biases are not regularized.
double weight_norm_squared(const ProjectionNet& net);

// (1/N) sum ||x_i - net(e_{y_i})||^2 + lambda * ||W||^2 over a labeled batch.
LossResult inductive_loss(const ProjectionNet& net, const SemanticTable& semantics,
                          std::span<const LabeledFeature> batch, double lambda);

// (1/N') sum over retained anchors of
//   max(0, ||a - net(e+)||^2 + margin - ||a - net(e-)||^2)
// with N' the full unlabeled batch size. The euclidean variant replaces the
// hinge with ||a - net(e+)||^2. Positive/negative choices stay fixed; the
// gradient flows through the projections only. Zero subgradient at the kink.
LossResult triplet_loss(const ProjectionNet& net, const SemanticTable& semantics,
                        std::span<const TripletAssignment> assignments,
                        std::span<const std::span<const double>> unlabeled, double margin,
                        Variant variant = Variant::triplet);

// Supervised term + alpha * unsupervised term + lambda * ||W||^2, with the
// regularizer applied once.
LossResult transductive_loss(const ProjectionNet& net, const SemanticTable& semantics,
                             std::span<const LabeledFeature> seen,
                             std::span<const std::span<const double>> unlabeled,
                             std::span<const TripletAssignment> assignments, double alpha,
                             double lambda, double margin, Variant variant = Variant::triplet);

}  // namespace tzsl
