#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tzsl/config.hpp"
#include "tzsl/dataset.hpp"
#include "tzsl/losses.hpp"
#include "tzsl/numerics.hpp"

namespace tzsl {

enum class Stage { inductive, transductive };

std::string to_string(Stage stage);

struct Checkpoint {
  ProjectionNet net;
  TrainConfig config;
  Stage stage = Stage::inductive;
  std::size_t epoch = 0;  // epochs completed in this stage
  // One entry per completed epoch: batch-mean loss terms, retained summed.
  std::vector<LossBreakdown> history;
  AdamState optimizer;

  bool operator==(const Checkpoint&) const = default;
};

// Glorot-initialized network for the dataset's dimensions, before any epoch.
Checkpoint initial_checkpoint(const Dataset& dataset, const TrainConfig& config);

// Minimizes the inductive objective on seen records for
// config.epochs_inductive epochs.
Checkpoint train_inductive(const Dataset& dataset, const TrainConfig& config);

// As train_inductive but starting from `init` with a fresh optimizer.
Checkpoint train_inductive_from(const Dataset& dataset, const TrainConfig& config,
                                const ProjectionNet& init);

// Transductive stage from an inductive checkpoint. Pseudo-label triplets are
// re-formed for all unlabeled records at the start of every epoch; the
// optimizer state starts fresh.
Checkpoint train_transductive(const Dataset& dataset, const TrainConfig& config,
                              const Checkpoint& init);

// Runs `extra_epochs` more epochs of the checkpoint's stage, reusing its
// optimizer state. Equivalent to an uninterrupted run of the combined length.
Checkpoint continue_training(const Dataset& dataset, Checkpoint checkpoint,
                             std::size_t extra_epochs);

struct StageResult {
  Checkpoint inductive;
  Checkpoint transductive;
};

StageResult train_both(const Dataset& dataset, const TrainConfig& config);

// Binary checkpoint: "ZSLCKPT v1\n", u64 dims (d, h, m), little-endian f64
// blocks w1 b1 w2 b2, then the Adam moments in the same order, then a
// u64-length-prefixed UTF-8 key=value block with config, stage and history.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct GridPoint {
  double alpha = 0.15;
  double lambda = 1e-4;
  double margin = 1.0;

  bool operator==(const GridPoint&) const = default;
};

struct CvRow {
  GridPoint point;
  std::vector<double> scores;  // one ZSL top-1 per repetition
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one repetition
};

struct CvResult {
  std::vector<CvRow> table;
  std::size_t best = 0;  // highest mean; ties go to the earlier grid point

  const GridPoint& best_point() const { return table[best].point; }
};

// Monte Carlo cross-validation: every repetition draws a class-level
// pseudo-unseen split of the seen classes, trains both stages per grid point
// and scores ZSL top-1 on the pseudo-unseen classes. Repetition r uses the
// same split for every grid point.
// Called after every training run with the repetition, grid point and score.
using CvProgress = std::function<void(std::size_t, const GridPoint&, double)>;

CvResult monte_carlo_cv(const Dataset& dataset, std::span<const GridPoint> grid,
                        std::size_t repetitions, double fraction, const TrainConfig& base,
                        const CvProgress& progress = {});

std::string format_cv_csv(const CvResult& result);

struct SweepRow {
  std::size_t batch_size = 0;
  double unseen_top1 = 0.0;
};

// Trains both stages at each seen batch size (unlabeled batch = same size
// unless base fixes it) and reports ZSL unseen top-1.
std::vector<SweepRow> sweep_batch_sizes(const Dataset& dataset,
                                        std::span<const std::size_t> batch_sizes,
                                        const TrainConfig& base);

std::string format_sweep_csv(std::span<const SweepRow> rows);

}  // namespace tzsl
