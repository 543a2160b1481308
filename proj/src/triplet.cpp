#include "tzsl/triplet.hpp"

#include <algorithm>

#include "tzsl/error.hpp"

namespace tzsl {

ProjectedClasses ProjectedClasses::compute(const ProjectionNet& net,
                                           const SemanticTable& semantics) {
  ProjectedClasses out;
  out.points = forward_rows(net, semantics.embeddings());
  out.seen = semantics.seen_indices();
  out.unseen = semantics.unseen_indices();
  out.all.resize(semantics.size());
  for (ClassIndex c = 0; c < semantics.size(); ++c) out.all[c] = c;
  return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

ClassIndex nearest_class(const DenseMatrix& points, std::span<const double> anchor,
                         std::span<const ClassIndex> candidates) {
  if (candidates.empty()) throw ValidationError("nearest class: no candidate classes");
  if (anchor.size() != points.cols())
    throw ShapeError("nearest class anchor", points.cols(), anchor.size());
  ClassIndex best = candidates.front();
  double best_dist = squared_distance(anchor, points.row(best));
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double dist = squared_distance(anchor, points.row(candidates[i]));
    if (dist < best_dist) {
      best_dist = dist;
      best = candidates[i];
    }
  }
  return best;
}

ClassIndex assign_positive_zsl(const ProjectedClasses& classes, std::span<const double> anchor) {
  if (classes.unseen.empty()) throw ValidationError("positive selection: no unseen classes");
  return nearest_class(classes.points, anchor, classes.unseen);
}

PositiveChoice assign_positive_gzsl(const ProjectedClasses& classes,
                                    std::span<const double> anchor) {
  if (classes.all.empty()) throw ValidationError("positive selection: empty class table");
  ClassIndex best = nearest_class(classes.points, anchor, classes.all);
  bool seen = std::binary_search(classes.seen.begin(), classes.seen.end(), best);
  return {best, !seen};
}

ClassIndex assign_negative(const ProjectedClasses& classes, std::span<const double> anchor) {
  if (classes.seen.empty()) throw ValidationError("negative selection: no seen classes");
  return nearest_class(classes.points, anchor, classes.seen);
}

ClassIndex assign_positive_zsl(const ProjectionNet& net, std::span<const double> anchor,
                               const SemanticTable& semantics) {
  return assign_positive_zsl(ProjectedClasses::compute(net, semantics), anchor);
}

PositiveChoice assign_positive_gzsl(const ProjectionNet& net, std::span<const double> anchor,
                                    const SemanticTable& semantics) {
  return assign_positive_gzsl(ProjectedClasses::compute(net, semantics), anchor);
}

ClassIndex assign_negative(const ProjectionNet& net, std::span<const double> anchor,
                           const SemanticTable& semantics) {
  return assign_negative(ProjectedClasses::compute(net, semantics), anchor);
}

std::vector<TripletAssignment> form_triplets(const ProjectedClasses& classes,
                                             std::span<const std::span<const double>> batch,
                                             Mode mode) {
  if (batch.empty()) throw ValidationError("triplet formation: empty batch");
  std::vector<TripletAssignment> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    PositiveChoice pos = mode == Mode::zsl
                             ? PositiveChoice{assign_positive_zsl(classes, batch[i]), true}
                             : assign_positive_gzsl(classes, batch[i]);
    out.push_back({i, pos.positive, assign_negative(classes, batch[i]), pos.retained});
  }
  return out;
}

std::vector<TripletAssignment> form_triplets(const ProjectionNet& net,
                                             std::span<const std::span<const double>> batch,
                                             const SemanticTable& semantics, Mode mode) {
  return form_triplets(ProjectedClasses::compute(net, semantics), batch, mode);
}

}  // namespace tzsl
