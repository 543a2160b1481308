#include "tzsl/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "tzsl/error.hpp"
#include "tzsl/evaluation.hpp"
#include "tzsl/io.hpp"
#include "tzsl/triplet.hpp"

namespace tzsl {

namespace {

// Independent random streams derived from the run seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSeenStream = 2;
constexpr std::uint64_t kUnlabeledStream = 3;
constexpr std::uint64_t kCvSplitStream = 4;
constexpr std::uint64_t kCvTrainStream = 5;

constexpr std::size_t kEarlyStopPatience = 5;
constexpr double kEarlyStopTolerance = 1e-5;

constexpr std::string_view kMagic = "ZSLCKPT v1\n";

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed,
                                        std::uint64_t stream, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(mix_seed(seed, stream), epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::size_t batch_count(std::size_t n, std::size_t batch) {
  return n == 0 ? 0 : (n + batch - 1) / batch;
}

bool converged(const std::vector<LossBreakdown>& history) {
  if (history.size() < kEarlyStopPatience + 1) return false;
  for (std::size_t i = history.size() - kEarlyStopPatience; i < history.size(); ++i) {
    const double prev = history[i - 1].total;
    const double cur = history[i].total;
    const double scale = std::max(std::abs(prev), 1e-300);
    if ((prev - cur) / scale >= kEarlyStopTolerance) return false;
  }
  return true;
}

void check_dims(const Dataset& dataset, const ProjectionNet& net) {
  const auto shape = net.shape();
  if (shape.semantic_dim != dataset.semantic_dim())
    throw ShapeError("checkpoint semantic dim", dataset.semantic_dim(), shape.semantic_dim);
  if (shape.feature_dim != dataset.feature_dim())
    throw ShapeError("checkpoint feature dim", dataset.feature_dim(), shape.feature_dim);
}

// Advances the checkpoint to `target_epoch` epochs of its own stage.
void run_epochs(const TrainingView& view, Checkpoint& ckpt, std::size_t target_epoch) {
  const TrainConfig& cfg = ckpt.config;
  const bool transductive = ckpt.stage == Stage::transductive;
  const auto seen = view.seen();
  const auto unlabeled = view.unlabeled();
  const auto& semantics = view.semantics();
  const std::size_t n_batch = cfg.batch_seen;
  const std::size_t u_batch = cfg.unlabeled_batch();
  const std::size_t seen_batches = batch_count(seen.size(), n_batch);
  const std::size_t unlabeled_batches = transductive ? batch_count(unlabeled.size(), u_batch) : 0;
  // With alpha = 0 the unlabeled stream cannot affect the update, so the
  // epoch keeps the inductive schedule.
  const std::size_t batches =
      std::max(seen_batches, cfg.alpha == 0.0 ? std::size_t{0} : unlabeled_batches);

  std::vector<LabeledFeature> seen_batch;
  std::vector<std::span<const double>> unlabeled_batch;
  std::vector<TripletAssignment> batch_assignments;

  while (ckpt.epoch < target_epoch) {
    if (cfg.early_stop && converged(ckpt.history)) break;
    const std::size_t epoch = ckpt.epoch;

    // Pseudo-labels are fixed for the whole epoch.
    std::vector<TripletAssignment> assignments;
    if (transductive)
      assignments = form_triplets(ckpt.net, unlabeled, semantics, cfg.mode);

    const auto seen_order = shuffled_order(seen.size(), cfg.seed, kSeenStream, epoch);
    const auto unlabeled_order =
        transductive ? shuffled_order(unlabeled.size(), cfg.seed, kUnlabeledStream, epoch)
                     : std::vector<std::size_t>{};

    LossBreakdown sum;
    for (std::size_t b = 0; b < batches; ++b) {
      seen_batch.clear();
      const std::size_t s0 = (b % seen_batches) * n_batch;
      for (std::size_t i = s0; i < std::min(s0 + n_batch, seen.size()); ++i)
        seen_batch.push_back(seen[seen_order[i]]);

      LossResult loss;
      if (transductive) {
        unlabeled_batch.clear();
        batch_assignments.clear();
        const std::size_t u0 = (b % unlabeled_batches) * u_batch;
        for (std::size_t i = u0; i < std::min(u0 + u_batch, unlabeled.size()); ++i) {
          TripletAssignment a = assignments[unlabeled_order[i]];
          a.anchor = unlabeled_batch.size();
          unlabeled_batch.push_back(unlabeled[unlabeled_order[i]]);
          batch_assignments.push_back(a);
        }
        loss = transductive_loss(ckpt.net, semantics, seen_batch, unlabeled_batch,
                                 batch_assignments, cfg.alpha, cfg.lambda, cfg.margin,
                                 cfg.variant);
      } else {
        loss = inductive_loss(ckpt.net, semantics, seen_batch, cfg.lambda);
      }
      adam_step(ckpt.net, loss.gradient, ckpt.optimizer, cfg.lr);

      sum.total += loss.breakdown.total;
      sum.supervised += loss.breakdown.supervised;
      sum.unsupervised += loss.breakdown.unsupervised;
      sum.regularizer += loss.breakdown.regularizer;
      sum.retained += loss.breakdown.retained;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    sum.total *= inv;
    sum.supervised *= inv;
    sum.unsupervised *= inv;
    sum.regularizer *= inv;
    if (!std::isfinite(sum.total) || !ckpt.net.all_finite())
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    ckpt.history.push_back(sum);
    ++ckpt.epoch;
  }
}

Checkpoint fresh_stage(const ProjectionNet& net, const TrainConfig& config, Stage stage) {
  Checkpoint ckpt;
  ckpt.net = net;
  ckpt.config = config;
  ckpt.stage = stage;
  ckpt.optimizer = AdamState(net.shape());
  return ckpt;
}

// Little-endian byte writer/reader.
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_block(std::string& out, std::span<const double> xs) {
  for (double x : xs) put_u64(out, std::bit_cast<std::uint64_t>(x));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint is truncated or corrupt");
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint64_t u64() {
    auto raw = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(raw[static_cast<std::size_t>(i)]);
    return v;
  }

  void block(std::span<double> xs) {
    for (double& x : xs) x = std::bit_cast<double>(u64());
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string format_breakdown(const LossBreakdown& b) {
  return format_real(b.total) + "," + format_real(b.supervised) + "," +
         format_real(b.unsupervised) + "," + format_real(b.regularizer) + "," +
         std::to_string(b.retained);
}

LossBreakdown parse_breakdown(std::string_view text) {
  auto f = split(text, ',');
  if (f.size() != 5) throw FormatError("checkpoint: malformed history entry");
  return {parse_real(f[0], "history"), parse_real(f[1], "history"),
          parse_real(f[2], "history"), parse_real(f[3], "history"),
          parse_count(f[4], "history")};
}

}  // namespace

std::string to_string(Stage stage) {
  return stage == Stage::inductive ? "inductive" : "transductive";
}

Checkpoint initial_checkpoint(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  NetShape shape{dataset.semantic_dim(), config.hidden_dim, dataset.feature_dim()};
  return fresh_stage(ProjectionNet::glorot(shape, mix_seed(config.seed, kInitStream)), config,
                     Stage::inductive);
}

Checkpoint train_inductive(const Dataset& dataset, const TrainConfig& config) {
  return train_inductive_from(dataset, config, initial_checkpoint(dataset, config).net);
}

Checkpoint train_inductive_from(const Dataset& dataset, const TrainConfig& config,
                                const ProjectionNet& init) {
  config.validate();
  check_dims(dataset, init);
  TrainingView view(dataset);
  if (view.seen().empty()) throw ValidationError("inductive training needs seen records");
  Checkpoint ckpt = fresh_stage(init, config, Stage::inductive);
  run_epochs(view, ckpt, config.epochs_inductive);
  return ckpt;
}

Checkpoint train_transductive(const Dataset& dataset, const TrainConfig& config,
                              const Checkpoint& init) {
  config.validate();
  if (init.stage != Stage::inductive)
    throw ValidationError("transductive training must start from an inductive checkpoint");
  check_dims(dataset, init.net);
  TrainingView view(dataset);
  if (view.seen().empty()) throw ValidationError("transductive training needs seen records");
  if (view.unlabeled().empty())
    throw ValidationError("transductive training needs unlabeled records");
  Checkpoint ckpt = fresh_stage(init.net, config, Stage::transductive);
  run_epochs(view, ckpt, config.epochs_transductive);
  return ckpt;
}

Checkpoint continue_training(const Dataset& dataset, Checkpoint checkpoint,
                             std::size_t extra_epochs) {
  checkpoint.config.validate();
  check_dims(dataset, checkpoint.net);
  TrainingView view(dataset);
  if (view.seen().empty()) throw ValidationError("training needs seen records");
  if (checkpoint.stage == Stage::transductive && view.unlabeled().empty())
    throw ValidationError("transductive training needs unlabeled records");
  const std::size_t target = checkpoint.epoch + extra_epochs;
  if (checkpoint.stage == Stage::inductive)
    checkpoint.config.epochs_inductive = target;
  else
    checkpoint.config.epochs_transductive = target;
  run_epochs(view, checkpoint, target);
  return checkpoint;
}

StageResult train_both(const Dataset& dataset, const TrainConfig& config) {
  auto ind = train_inductive(dataset, config);
  auto tns = train_transductive(dataset, config, ind);
  return {std::move(ind), std::move(tns)};
}

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  checkpoint.net.check_consistent();
  const auto shape = checkpoint.net.shape();
  std::string out(kMagic);
  put_u64(out, shape.semantic_dim);
  put_u64(out, shape.hidden_dim);
  put_u64(out, shape.feature_dim);
  for (auto block : checkpoint.net.blocks()) put_block(out, block);
  for (auto block : checkpoint.optimizer.first_moment.blocks()) put_block(out, block);
  for (auto block : checkpoint.optimizer.second_moment.blocks()) put_block(out, block);

  std::string text;
  text += "stage=" + to_string(checkpoint.stage) + "\n";
  text += "epoch=" + std::to_string(checkpoint.epoch) + "\n";
  text += "adam_step=" + std::to_string(checkpoint.optimizer.step) + "\n";
  for (const auto& [k, v] : checkpoint.config.to_map()) text += "config." + k + "=" + v + "\n";
  for (std::size_t i = 0; i < checkpoint.history.size(); ++i)
    text += "history." + std::to_string(i) + "=" + format_breakdown(checkpoint.history[i]) + "\n";
  put_u64(out, text.size());
  out += text;
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (bytes.size() < kMagic.size() || bytes.substr(0, 8) != kMagic.substr(0, 8))
    throw FormatError("not a checkpoint file");
  if (in.take(kMagic.size()) != kMagic) throw FormatError("unsupported checkpoint version");

  NetShape shape;
  shape.semantic_dim = in.u64();
  shape.hidden_dim = in.u64();
  shape.feature_dim = in.u64();
  const std::uint64_t limit = std::uint64_t{1} << 32;
  if (shape.semantic_dim >= limit || shape.hidden_dim >= limit || shape.feature_dim >= limit ||
      shape.semantic_dim * shape.hidden_dim + shape.hidden_dim * shape.feature_dim >
          bytes.size())
    throw FormatError("checkpoint is truncated or corrupt");

  Checkpoint ckpt;
  ckpt.net = ProjectionNet(shape);
  ckpt.optimizer = AdamState(shape);
  for (auto block : ckpt.net.blocks()) in.block(block);
  for (auto block : ckpt.optimizer.first_moment.blocks()) in.block(block);
  for (auto block : ckpt.optimizer.second_moment.blocks()) in.block(block);

  const std::uint64_t text_len = in.u64();
  const auto text = in.take(text_len);
  if (!in.done()) throw FormatError("checkpoint has trailing bytes");

  std::map<std::string, std::string> kv;
  for (auto line : split(text, '\n')) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError("checkpoint: malformed text block");
    kv.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
  }
  auto get = [&kv](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("checkpoint: missing '" + key + "'");
    return it->second;
  };

  const auto& stage = get("stage");
  if (stage == "inductive")
    ckpt.stage = Stage::inductive;
  else if (stage == "transductive")
    ckpt.stage = Stage::transductive;
  else
    throw FormatError("checkpoint: unknown stage '" + stage + "'");
  ckpt.epoch = parse_count(get("epoch"), "epoch");
  ckpt.optimizer.step = parse_count(get("adam_step"), "adam_step");

  std::map<std::string, std::string> config_kv;
  for (const auto& [k, v] : kv)
    if (k.rfind("config.", 0) == 0) config_kv.emplace(k.substr(7), v);
  ckpt.config = TrainConfig::from_map(config_kv);

  for (std::size_t i = 0; i < ckpt.epoch; ++i)
    ckpt.history.push_back(parse_breakdown(get("history." + std::to_string(i))));
  if (kv.count("history." + std::to_string(ckpt.epoch)))
    throw FormatError("checkpoint: history longer than the epoch count");
  if (!ckpt.net.all_finite()) throw FormatError("checkpoint: non-finite weights");
  return ckpt;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

CvResult monte_carlo_cv(const Dataset& dataset, std::span<const GridPoint> grid,
                        std::size_t repetitions, double fraction, const TrainConfig& base,
                        const CvProgress& progress) {
  if (grid.empty()) throw ValidationError("cross-validation grid is empty");
  if (repetitions < 1) throw ValidationError("cross-validation needs >= 1 repetition");
  CvResult result;
  for (const auto& point : grid) result.table.push_back({point, {}, 0.0, 0.0});

  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    auto split = split_seen_for_validation(
        dataset, fraction, mix_seed(mix_seed(base.seed, kCvSplitStream), rep));
    for (auto& row : result.table) {
      TrainConfig cfg = base;
      cfg.mode = Mode::zsl;
      cfg.alpha = row.point.alpha;
      cfg.lambda = row.point.lambda;
      cfg.margin = row.point.margin;
      cfg.seed = mix_seed(mix_seed(base.seed, kCvTrainStream), rep);
      auto trained = train_both(split.dataset, cfg);
      row.scores.push_back(evaluate(trained.transductive.net, split.dataset, Mode::zsl).overall_top1);
      if (progress) progress(rep, row.point, row.scores.back());
    }
  }

  for (std::size_t i = 0; i < result.table.size(); ++i) {
    auto& row = result.table[i];
    const double n = static_cast<double>(row.scores.size());
    row.mean = std::accumulate(row.scores.begin(), row.scores.end(), 0.0) / n;
    double ss = 0.0;
    for (double s : row.scores) ss += (s - row.mean) * (s - row.mean);
    row.stddev = row.scores.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    if (row.mean > result.table[result.best].mean) result.best = i;
  }
  return result;
}

std::string format_cv_csv(const CvResult& result) {
  std::string out = "alpha,lambda,margin,mean_top1,std_top1,repetitions\n";
  for (const auto& row : result.table) {
    out += format_real(row.point.alpha) + "," + format_real(row.point.lambda) + "," +
           format_real(row.point.margin) + "," + format_real(row.mean) + "," +
           format_real(row.stddev) + "," + std::to_string(row.scores.size()) + "\n";
  }
  return out;
}

std::vector<SweepRow> sweep_batch_sizes(const Dataset& dataset,
                                        std::span<const std::size_t> batch_sizes,
                                        const TrainConfig& base) {
  if (batch_sizes.empty()) throw ValidationError("batch-size sweep needs at least one size");
  std::vector<SweepRow> rows;
  for (std::size_t n : batch_sizes) {
    TrainConfig cfg = base;
    cfg.mode = Mode::zsl;
    cfg.batch_seen = n;
    auto trained = train_both(dataset, cfg);
    rows.push_back({n, evaluate(trained.transductive.net, dataset, Mode::zsl).overall_top1});
  }
  return rows;
}

std::string format_sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "batch_size,unseen_top1\n";
  for (const auto& r : rows) out += std::to_string(r.batch_size) + "," + format_real(r.unseen_top1) + "\n";
  return out;
}

}  // namespace tzsl
