#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tzsl/config.hpp"
#include "tzsl/dataset.hpp"
#include "tzsl/numerics.hpp"

namespace tzsl {

// Every class embedding pushed through the projection, plus the seen/unseen
// candidate lists in table order.
struct ProjectedClasses {
  DenseMatrix points;  // classes x feature_dim
  std::vector<ClassIndex> seen;
  std::vector<ClassIndex> unseen;
  std::vector<ClassIndex> all;

  static ProjectedClasses compute(const ProjectionNet& net, const SemanticTable& semantics);
};

double squared_distance(std::span<const double> a, std::span<const double> b);

// argmin over `candidates` of the squared distance between `anchor` and the
// candidate's projection. Candidates must be in table order so that ties go
// to the smallest index. Throws ValidationError when `candidates` is empty.
ClassIndex nearest_class(const DenseMatrix& points, std::span<const double> anchor,
                         std::span<const ClassIndex> candidates);

struct PositiveChoice {
  ClassIndex positive;
  bool retained;
};

struct TripletAssignment {
  std::size_t anchor;   // position in the unlabeled batch
  ClassIndex positive;
  ClassIndex negative;  // always a seen class
  bool retained;        // false: contributes nothing to the unsupervised loss

  bool operator==(const TripletAssignment&) const = default;
};

// Nearest unseen class.
ClassIndex assign_positive_zsl(const ProjectedClasses& classes, std::span<const double> anchor);
// Nearest class overall; anchors whose nearest class is seen are not retained.
PositiveChoice assign_positive_gzsl(const ProjectedClasses& classes,
                                    std::span<const double> anchor);
// Nearest seen class to the same unlabeled anchor.
ClassIndex assign_negative(const ProjectedClasses& classes, std::span<const double> anchor);

ClassIndex assign_positive_zsl(const ProjectionNet& net, std::span<const double> anchor,
                               const SemanticTable& semantics);
PositiveChoice assign_positive_gzsl(const ProjectionNet& net, std::span<const double> anchor,
                                    const SemanticTable& semantics);
ClassIndex assign_negative(const ProjectionNet& net, std::span<const double> anchor,
                           const SemanticTable& semantics);

// One assignment per anchor, in batch order.
std::vector<TripletAssignment> form_triplets(const ProjectedClasses& classes,
                                             std::span<const std::span<const double>> batch,
                                             Mode mode);
std::vector<TripletAssignment> form_triplets(const ProjectionNet& net,
                                             std::span<const std::span<const double>> batch,
                                             const SemanticTable& semantics, Mode mode);

}  // namespace tzsl
