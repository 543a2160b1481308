#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tzsl/config.hpp"
#include "tzsl/dataset.hpp"
#include "tzsl/numerics.hpp"
#include "tzsl/triplet.hpp"

namespace tzsl {

enum class Averaging { overall, per_class_mean };

std::string to_string(Averaging averaging);
Averaging parse_averaging(const std::string& text);

// Nearest unseen class to the feature (ties to the smallest table index).
ClassIndex predict_zsl(const ProjectedClasses& classes, std::span<const double> feature);
// Nearest class among seen and unseen.
ClassIndex predict_gzsl(const ProjectedClasses& classes, std::span<const double> feature);

ClassIndex predict_zsl(const ProjectionNet& net, const SemanticTable& semantics,
                       std::span<const double> feature);
ClassIndex predict_gzsl(const ProjectionNet& net, const SemanticTable& semantics,
                        std::span<const double> feature);

// 2ab / (a + b); 0 when a + b is 0.
double harmonic_mean(double a, double b);

// All accuracies are percentages.
struct EvalReport {
  Mode mode = Mode::zsl;
  Averaging averaging = Averaging::overall;
  std::size_t total = 0;
  std::size_t correct = 0;
  double overall_top1 = 0.0;     // 100 * correct / total
  double mean_class_top1 = 0.0;  // mean of per-class accuracies
  std::map<ClassIndex, double> per_class_top1;
  double acc_seen = 0.0;    // gzsl
  double acc_unseen = 0.0;  // gzsl
  double hm = 0.0;          // gzsl
  std::size_t seen_total = 0;
  std::size_t unseen_total = 0;
  // confusion[true][predicted], square over the whole class table.
  std::vector<std::vector<std::size_t>> confusion;

  double top1() const {
    return averaging == Averaging::overall ? overall_top1 : mean_class_top1;
  }
};

// Scores the unlabeled_test records against their held ground truth. ZSL
// scores the unseen-class records over unseen candidates; GZSL scores every
// test record over all classes and reports Acc_s, Acc_u and HM.
EvalReport evaluate(const ProjectionNet& net, const Dataset& dataset, Mode mode,
                    Averaging averaging = Averaging::overall);

// metric=value lines.
std::string format_report(const EvalReport& report, const SemanticTable& semantics);
// Header row of predicted class ids, one row per true class.
std::string format_confusion_csv(const EvalReport& report, const SemanticTable& semantics);

// Adjusted Fisher-Pearson sample skewness,
//   n / ((n-1)(n-2)) * sum(((x - mean) / s)^3)
// with s the n-1 standard deviation. Returns 0 for constant input or n < 3.
double adjusted_skewness(std::span<const double> values);

enum class ProjectionDirection { semantic_to_input, input_to_semantic };

struct HubnessReport {
  std::size_t k = 1;
  std::size_t queries = 0;
  std::vector<ClassIndex> classes;  // candidate classes in table order
  std::vector<std::size_t> hits;    // N_k per candidate class
  double skewness = 0.0;
  ProjectionDirection direction = ProjectionDirection::semantic_to_input;
};

// N_k counts how often each candidate class is among the k nearest projected
// classes of a query. Queries and candidates follow `evaluate` for the mode.
// Only the semantic-to-input direction is computed.
HubnessReport hubness_skewness(const ProjectionNet& net, const Dataset& dataset, std::size_t k,
                               Mode mode = Mode::zsl,
                               ProjectionDirection direction = ProjectionDirection::semantic_to_input);

std::string format_hubness(const HubnessReport& report, const SemanticTable& semantics);

struct QfslReport {
  EvalReport first;   // trained on half A, scored on half B
  EvalReport second;  // trained on half B, scored on half A
  double acc_seen = 0.0;
  double acc_unseen = 0.0;
  double hm = 0.0;
};

// Split-in-halves GZSL protocol: two models, each trained transductively on
// one half of the unlabeled records and scored on the other; the result is the
// arithmetic mean of the two reports.
QfslReport evaluate_qfsl_protocol(const Dataset& dataset, const TrainConfig& config,
                                  Averaging averaging = Averaging::overall);
QfslReport evaluate_qfsl_protocol(const Dataset& dataset, const UnlabeledHalves& halves,
                                  const TrainConfig& config,
                                  Averaging averaging = Averaging::overall);

std::string format_qfsl_report(const QfslReport& report);

}  // namespace tzsl
