#include "tzsl/error.hpp"
#include "tzsl/evaluation.hpp"
#include "tzsl/io.hpp"
#include "tzsl/training.hpp"

namespace tzsl {

namespace {

constexpr std::uint64_t kHalvingStream = 6;

EvalReport train_on_score_on(const Dataset& dataset, std::span<const std::size_t> train_half,
                             std::span<const std::size_t> test_half, const TrainConfig& config,
                             Averaging averaging) {
  auto train_set = with_unlabeled_subset(dataset, train_half);
  auto test_set = with_unlabeled_subset(dataset, test_half);
  auto trained = train_both(train_set, config);
  return evaluate(trained.transductive.net, test_set, Mode::gzsl, averaging);
}

}  // namespace

QfslReport evaluate_qfsl_protocol(const Dataset& dataset, const TrainConfig& config,
                                  Averaging averaging) {
  auto halves = halve_unlabeled(dataset, mix_seed(config.seed, kHalvingStream));
  return evaluate_qfsl_protocol(dataset, halves, config, averaging);
}

QfslReport evaluate_qfsl_protocol(const Dataset& dataset, const UnlabeledHalves& halves,
                                  const TrainConfig& config, Averaging averaging) {
  if (config.mode != Mode::gzsl)
    throw ValidationError("the split-in-halves protocol evaluates generalized ZSL only");
  if (halves.first.empty() || halves.second.empty())
    throw ValidationError("the split-in-halves protocol needs two non-empty halves");
  QfslReport report;
  report.first = train_on_score_on(dataset, halves.first, halves.second, config, averaging);
  report.second = train_on_score_on(dataset, halves.second, halves.first, config, averaging);
  report.acc_seen = (report.first.acc_seen + report.second.acc_seen) / 2.0;
  report.acc_unseen = (report.first.acc_unseen + report.second.acc_unseen) / 2.0;
  report.hm = (report.first.hm + report.second.hm) / 2.0;
  return report;
}

}  // namespace tzsl
