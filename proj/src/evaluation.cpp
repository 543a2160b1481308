#include "tzsl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tzsl/error.hpp"
#include "tzsl/io.hpp"

namespace tzsl {

namespace {

struct Query {
  std::span<const double> feature;
  ClassIndex truth;
};

// Test records scored under `mode`: every labeled test record for GZSL, the
// unseen-class ones for ZSL.
std::vector<Query> test_queries(const Dataset& dataset, Mode mode) {
  std::vector<Query> out;
  for (const auto& r : dataset.records()) {
    if (r.split != Split::unlabeled_test) continue;
    if (!r.label)
      throw ValidationError("evaluation: test record " + r.id + " has no ground-truth label");
    if (mode == Mode::zsl && dataset.semantics().is_seen(*r.label)) continue;
    out.push_back({r.feature, *r.label});
  }
  return out;
}

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

const char* direction_name(ProjectionDirection d) {
  return d == ProjectionDirection::semantic_to_input ? "semantic_to_input"
                                                     : "input_to_semantic";
}

}  // namespace

std::string to_string(Averaging averaging) {
  return averaging == Averaging::overall ? "overall" : "per-class-mean";
}

Averaging parse_averaging(const std::string& text) {
  if (text == "overall") return Averaging::overall;
  if (text == "per-class-mean") return Averaging::per_class_mean;
  throw ValidationError("averaging must be overall|per-class-mean, got '" + text + "'");
}

ClassIndex predict_zsl(const ProjectedClasses& classes, std::span<const double> feature) {
  if (classes.unseen.empty()) throw ValidationError("ZSL prediction: no unseen classes");
  return nearest_class(classes.points, feature, classes.unseen);
}

ClassIndex predict_gzsl(const ProjectedClasses& classes, std::span<const double> feature) {
  if (classes.all.empty()) throw ValidationError("GZSL prediction: empty class table");
  return nearest_class(classes.points, feature, classes.all);
}

ClassIndex predict_zsl(const ProjectionNet& net, const SemanticTable& semantics,
                       std::span<const double> feature) {
  return predict_zsl(ProjectedClasses::compute(net, semantics), feature);
}

ClassIndex predict_gzsl(const ProjectionNet& net, const SemanticTable& semantics,
                        std::span<const double> feature) {
  return predict_gzsl(ProjectedClasses::compute(net, semantics), feature);
}

double harmonic_mean(double a, double b) {
  const double sum = a + b;
  if (sum == 0.0) return 0.0;
  // Clamp away the last-ulp rounding so min <= HM <= max holds exactly.
  return std::clamp(2.0 * a * b / sum, std::min(a, b), std::max(a, b));
}

EvalReport evaluate(const ProjectionNet& net, const Dataset& dataset, Mode mode,
                    Averaging averaging) {
  const auto& table = dataset.semantics();
  const auto classes = ProjectedClasses::compute(net, table);
  const auto queries = test_queries(dataset, mode);

  EvalReport report;
  report.mode = mode;
  report.averaging = averaging;
  report.confusion.assign(table.size(), std::vector<std::size_t>(table.size(), 0));

  std::vector<std::size_t> class_total(table.size(), 0), class_correct(table.size(), 0);
  std::size_t seen_correct = 0, unseen_correct = 0;
  for (const auto& q : queries) {
    const ClassIndex pred = mode == Mode::zsl ? predict_zsl(classes, q.feature)
                                              : predict_gzsl(classes, q.feature);
    const bool hit = pred == q.truth;
    ++report.confusion[q.truth][pred];
    ++class_total[q.truth];
    ++report.total;
    if (hit) {
      ++class_correct[q.truth];
      ++report.correct;
    }
    if (table.is_seen(q.truth)) {
      ++report.seen_total;
      seen_correct += hit;
    } else {
      ++report.unseen_total;
      unseen_correct += hit;
    }
  }

  double seen_sum = 0.0, unseen_sum = 0.0, all_sum = 0.0;
  std::size_t seen_classes = 0, unseen_classes = 0;
  for (ClassIndex c = 0; c < table.size(); ++c) {
    if (class_total[c] == 0) continue;
    const double acc = percent(class_correct[c], class_total[c]);
    report.per_class_top1[c] = acc;
    all_sum += acc;
    if (table.is_seen(c)) {
      seen_sum += acc;
      ++seen_classes;
    } else {
      unseen_sum += acc;
      ++unseen_classes;
    }
  }

  report.overall_top1 = percent(report.correct, report.total);
  report.mean_class_top1 =
      report.per_class_top1.empty() ? 0.0 : all_sum / static_cast<double>(report.per_class_top1.size());

  if (averaging == Averaging::overall) {
    report.acc_seen = percent(seen_correct, report.seen_total);
    report.acc_unseen = percent(unseen_correct, report.unseen_total);
  } else {
    report.acc_seen = seen_classes ? seen_sum / static_cast<double>(seen_classes) : 0.0;
    report.acc_unseen = unseen_classes ? unseen_sum / static_cast<double>(unseen_classes) : 0.0;
  }
  report.hm = mode == Mode::gzsl ? harmonic_mean(report.acc_seen, report.acc_unseen) : 0.0;
  return report;
}

std::string format_report(const EvalReport& report, const SemanticTable& semantics) {
  std::string out;
  auto line = [&out](const std::string& key, const std::string& value) {
    out += key + "=" + value + "\n";
  };
  line("mode", to_string(report.mode));
  line("averaging", to_string(report.averaging));
  line("total", std::to_string(report.total));
  line("correct", std::to_string(report.correct));
  line("top1", format_real(report.top1()));
  line("overall_top1", format_real(report.overall_top1));
  line("mean_class_top1", format_real(report.mean_class_top1));
  if (report.mode == Mode::gzsl) {
    line("seen_total", std::to_string(report.seen_total));
    line("unseen_total", std::to_string(report.unseen_total));
    line("acc_seen", format_real(report.acc_seen));
    line("acc_unseen", format_real(report.acc_unseen));
    line("hm", format_real(report.hm));
  }
  for (const auto& [c, acc] : report.per_class_top1)
    line("class." + semantics[c].id + ".top1", format_real(acc));
  return out;
}

std::string format_confusion_csv(const EvalReport& report, const SemanticTable& semantics) {
  std::string out = "true\\predicted";
  for (const auto& cls : semantics.classes()) out += "," + cls.id;
  out += "\n";
  for (ClassIndex t = 0; t < report.confusion.size(); ++t) {
    out += semantics[t].id;
    for (std::size_t count : report.confusion[t]) out += "," + std::to_string(count);
    out += "\n";
  }
  return out;
}

double adjusted_skewness(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 3) return 0.0;
  const double nd = static_cast<double>(n);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / nd;
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  if (ss == 0.0) return 0.0;
  const double sd = std::sqrt(ss / (nd - 1.0));
  double cubes = 0.0;
  for (double x : values) {
    const double z = (x - mean) / sd;
    cubes += z * z * z;
  }
  return nd / ((nd - 1.0) * (nd - 2.0)) * cubes;
}

HubnessReport hubness_skewness(const ProjectionNet& net, const Dataset& dataset, std::size_t k,
                               Mode mode, ProjectionDirection direction) {
  if (direction != ProjectionDirection::semantic_to_input)
    throw ValidationError("hubness: only the semantic_to_input direction is supported");
  if (k < 1) throw ValidationError("hubness: k must be >= 1");
  const auto classes = ProjectedClasses::compute(net, dataset.semantics());
  const auto& candidates = mode == Mode::zsl ? classes.unseen : classes.all;
  if (k > candidates.size())
    throw ValidationError("hubness: k=" + std::to_string(k) + " exceeds the " +
                          std::to_string(candidates.size()) + " candidate classes");

  HubnessReport report;
  report.k = k;
  report.direction = direction;
  report.classes = candidates;
  report.hits.assign(candidates.size(), 0);

  std::vector<std::pair<double, std::size_t>> ranked(candidates.size());
  for (const auto& q : test_queries(dataset, mode)) {
    for (std::size_t i = 0; i < candidates.size(); ++i)
      ranked[i] = {squared_distance(q.feature, classes.points.row(candidates[i])), i};
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k),
                      ranked.end());
    for (std::size_t j = 0; j < k; ++j) ++report.hits[ranked[j].second];
    ++report.queries;
  }
  std::vector<double> counts(report.hits.begin(), report.hits.end());
  report.skewness = adjusted_skewness(counts);
  return report;
}

std::string format_hubness(const HubnessReport& report, const SemanticTable& semantics) {
  std::string out;
  out += "direction=" + std::string(direction_name(report.direction)) + "\n";
  out += "k=" + std::to_string(report.k) + "\n";
  out += "queries=" + std::to_string(report.queries) + "\n";
  out += "skewness=" + format_real(report.skewness) + "\n";
  for (std::size_t i = 0; i < report.classes.size(); ++i)
    out += "class." + semantics[report.classes[i]].id + ".n_k=" + std::to_string(report.hits[i]) + "\n";
  return out;
}

std::string format_qfsl_report(const QfslReport& report) {
  std::string out;
  out += "protocol=qfsl\n";
  out += "acc_seen=" + format_real(report.acc_seen) + "\n";
  out += "acc_unseen=" + format_real(report.acc_unseen) + "\n";
  out += "hm=" + format_real(report.hm) + "\n";
  out += "first.acc_seen=" + format_real(report.first.acc_seen) + "\n";
  out += "first.acc_unseen=" + format_real(report.first.acc_unseen) + "\n";
  out += "first.hm=" + format_real(report.first.hm) + "\n";
  out += "second.acc_seen=" + format_real(report.second.acc_seen) + "\n";
  out += "second.acc_unseen=" + format_real(report.second.acc_unseen) + "\n";
  out += "second.hm=" + format_real(report.second.hm) + "\n";
  return out;
}

}  // namespace tzsl
