#include "tzsl/losses.hpp"

#include <cmath>
#include <optional>
#include <vector>

#include "tzsl/error.hpp"

namespace tzsl {

namespace {

// Lazily projected class embeddings plus per-class dLoss/dOutput buffers.
// The backward pass runs once per touched class, in table order.
class ClassGradients {
 public:
  ClassGradients(const ProjectionNet& net, const SemanticTable& semantics)
      : net_(net),
        semantics_(semantics),
        projections_(semantics.size()),
        upstream_(semantics.size()) {
    if (semantics.dim() != net.shape().semantic_dim)
      throw ShapeError("semantic table vs projection input", net.shape().semantic_dim,
                       semantics.dim());
  }

  std::span<const double> projection(ClassIndex c) {
    if (c >= semantics_.size())
      throw ValidationError("class index " + std::to_string(c) + " out of range");
    if (!projections_[c]) projections_[c] = forward(net_, semantics_[c].embedding);
    return *projections_[c];
  }

  // upstream[c] += scale * (projection(c) - anchor)
  void add_residual(ClassIndex c, std::span<const double> anchor, double scale) {
    auto p = projection(c);
    auto& u = upstream_[c];
    if (!u) u = Vector(p.size(), 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) (*u)[k] += scale * (p[k] - anchor[k]);
  }

  NetGradient backward_all() const {
    std::vector<UpstreamSample> samples;
    for (ClassIndex c = 0; c < upstream_.size(); ++c)
      if (upstream_[c]) samples.push_back({semantics_[c].embedding, *upstream_[c]});
    return backward(net_, samples);
  }

 private:
  const ProjectionNet& net_;
  const SemanticTable& semantics_;
  std::vector<std::optional<Vector>> projections_;
  std::vector<std::optional<Vector>> upstream_;
};

void check_feature(std::span<const double> x, const ProjectionNet& net, const char* what) {
  if (x.size() != net.shape().feature_dim)
    throw ShapeError(what, net.shape().feature_dim, x.size());
}

// Mean squared residual over the labeled batch; adds 2/N * residual upstream.
double supervised_term(ClassGradients& classes, const ProjectionNet& net,
                       const SemanticTable& semantics, std::span<const LabeledFeature> batch) {
  if (batch.empty()) throw ValidationError("supervised loss: empty batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double sum = 0.0;
  for (const auto& s : batch) {
    check_feature(s.feature, net, "seen feature");
    if (s.label >= semantics.size() || !semantics.is_seen(s.label))
      throw ValidationError("supervised loss: record is not labeled with a seen class");
    sum += squared_distance(s.feature, classes.projection(s.label));
    classes.add_residual(s.label, s.feature, 2.0 * inv_n);
  }
  return sum * inv_n;
}

struct UnsupervisedValue {
  double value = 0.0;
  std::size_t retained = 0;
};

// When `scale` is zero no upstream gradient is recorded.
UnsupervisedValue unsupervised_term(ClassGradients& classes, const ProjectionNet& net,
                                    std::span<const TripletAssignment> assignments,
                                    std::span<const std::span<const double>> unlabeled,
                                    double margin, Variant variant, double scale) {
  if (!(margin >= 0.0) || !std::isfinite(margin))
    throw ValidationError("triplet loss: margin must be >= 0");
  UnsupervisedValue out;
  if (unlabeled.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(unlabeled.size());
  double sum = 0.0;
  for (const auto& a : assignments) {
    if (a.anchor >= unlabeled.size())
      throw ValidationError("triplet loss: assignment anchor outside the batch");
    if (!a.retained) continue;
    ++out.retained;
    auto anchor = unlabeled[a.anchor];
    check_feature(anchor, net, "unlabeled feature");
    const double d_pos = squared_distance(anchor, classes.projection(a.positive));
    if (variant == Variant::euclidean) {
      sum += d_pos;
      if (scale != 0.0) classes.add_residual(a.positive, anchor, scale * 2.0 * inv_n);
      continue;
    }
    const double d_neg = squared_distance(anchor, classes.projection(a.negative));
    const double hinge = d_pos + margin - d_neg;
    if (hinge > 0.0) {
      sum += hinge;
      if (scale != 0.0) {
        classes.add_residual(a.positive, anchor, scale * 2.0 * inv_n);
        classes.add_residual(a.negative, anchor, -scale * 2.0 * inv_n);
      }
    }
  }
  out.value = sum * inv_n;
  return out;
}

void add_weight_decay(const ProjectionNet& net, double lambda, NetGradient& grad) {
  if (lambda == 0.0) return;
  const auto w1 = net.w1.values();
  const auto w2 = net.w2.values();
  auto g1 = grad.w1.values();
  auto g2 = grad.w2.values();
  for (std::size_t i = 0; i < w1.size(); ++i) g1[i] += 2.0 * lambda * w1[i];
  for (std::size_t i = 0; i < w2.size(); ++i) g2[i] += 2.0 * lambda * w2[i];
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ValidationError("lambda must be >= 0");
}

}  // namespace

double weight_norm_squared(const ProjectionNet& net) {
  double acc = 0.0;
  for (double w : net.w1.values()) acc += w * w;
  for (double w : net.w2.values()) acc += w * w;
  return acc;
}

LossResult inductive_loss(const ProjectionNet& net, const SemanticTable& semantics,
                          std::span<const LabeledFeature> batch, double lambda) {
  check_lambda(lambda);
  ClassGradients classes(net, semantics);
  LossResult out;
  out.breakdown.supervised = supervised_term(classes, net, semantics, batch);
  out.breakdown.regularizer = weight_norm_squared(net);
  out.breakdown.total = out.breakdown.supervised + lambda * out.breakdown.regularizer;
  out.gradient = classes.backward_all();
  add_weight_decay(net, lambda, out.gradient);
  return out;
}

LossResult triplet_loss(const ProjectionNet& net, const SemanticTable& semantics,
                        std::span<const TripletAssignment> assignments,
                        std::span<const std::span<const double>> unlabeled, double margin,
                        Variant variant) {
  ClassGradients classes(net, semantics);
  auto term = unsupervised_term(classes, net, assignments, unlabeled, margin, variant, 1.0);
  LossResult out;
  out.breakdown.unsupervised = term.value;
  out.breakdown.total = term.value;
  out.breakdown.retained = term.retained;
  out.gradient = classes.backward_all();
  return out;
}

LossResult transductive_loss(const ProjectionNet& net, const SemanticTable& semantics,
                             std::span<const LabeledFeature> seen,
                             std::span<const std::span<const double>> unlabeled,
                             std::span<const TripletAssignment> assignments, double alpha,
                             double lambda, double margin, Variant variant) {
  check_lambda(lambda);
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be >= 0");
  if (assignments.size() != unlabeled.size())
    throw ValidationError("transductive loss: assignments must cover the unlabeled batch");
  ClassGradients classes(net, semantics);
  LossResult out;
  out.breakdown.supervised = supervised_term(classes, net, semantics, seen);
  auto term = unsupervised_term(classes, net, assignments, unlabeled, margin, variant, alpha);
  out.breakdown.unsupervised = term.value;
  out.breakdown.retained = term.retained;
  out.breakdown.regularizer = weight_norm_squared(net);
  out.breakdown.total = out.breakdown.supervised + alpha * out.breakdown.unsupervised +
                        lambda * out.breakdown.regularizer;
  out.gradient = classes.backward_all();
  add_weight_decay(net, lambda, out.gradient);
  return out;
}

}  // namespace tzsl
