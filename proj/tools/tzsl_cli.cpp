// Command-line front end: synth, train, eval, cv, sweep-batch.
//
// Exit codes: 0 success, 1 usage, 2 I/O failure, 3 invalid input,
// 4 numeric failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tzsl/config.hpp"
#include "tzsl/dataset.hpp"
#include "tzsl/error.hpp"
#include "tzsl/evaluation.hpp"
#include "tzsl/io.hpp"
#include "tzsl/training.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumeric = 4;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// One manifest per run: command, config echo, seed, input digests, outputs
// and wall-clock duration.
class Manifest {
 public:
  explicit Manifest(std::string command)
      : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["config"] = ordered_json::object();
    doc_["inputs"] = ordered_json::array();
    doc_["outputs"] = ordered_json::array();
  }

  void config(const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) doc_["config"][k] = v;
  }
  void config(const std::string& key, const std::string& value) { doc_["config"][key] = value; }
  void seed(std::uint64_t s) { doc_["seed"] = s; }

  void input(const fs::path& path) {
    doc_["inputs"].push_back(
        {{"path", path.string()}, {"fnv1a64", hex64(tzsl::fnv1a64(tzsl::read_file(path)))}});
  }

  void output(const fs::path& path) { doc_["outputs"].push_back(path.string()); }
  void note(const std::string& key, ordered_json value) { doc_[key] = std::move(value); }

  void write(const fs::path& path) {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    doc_["duration_seconds"] = seconds;
    tzsl::write_file_atomic(path, doc_.dump(2) + "\n");
  }

 private:
  ordered_json doc_;
  std::chrono::steady_clock::time_point start_;
};

fs::path manifest_path(const std::string& flag, const fs::path& primary) {
  return flag.empty() ? fs::path(primary.string() + ".manifest.json") : fs::path(flag);
}

// Training hyperparameters: defaults, then --config file, then explicit flags.
struct TrainFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;

  void add(CLI::App& app) {
    const tzsl::TrainConfig defaults;
    values = defaults.to_map();
    auto opt = [&](const std::string& flag, const std::string& key, const std::string& help) {
      options[key] = app.add_option(flag, values[key], help)->default_str(values[key]);
    };
    opt("--mode", "mode", "zsl or gzsl");
    opt("--variant", "variant", "unsupervised loss: triplet or euclidean");
    opt("--alpha", "alpha", "weight of the unsupervised term");
    opt("--lambda", "lambda", "weight decay on W1 and W2");
    opt("--margin", "margin", "triplet margin");
    opt("--lr", "lr", "Adam learning rate");
    opt("--batch-seen", "batch_seen", "labeled batch size");
    opt("--batch-unlabeled", "batch_unlabeled", "unlabeled batch size (0: same as --batch-seen)");
    opt("--epochs-inductive", "epochs_inductive", "inductive epochs");
    opt("--epochs-transductive", "epochs_transductive", "transductive epochs");
    opt("--hidden", "hidden_dim", "hidden layer width");
    opt("--early-stop", "early_stop", "1 to stop on a loss plateau");
    opt("--seed", "seed", "run seed");
    app.add_option("--config", config_file, "key=value file with the same keys; flags win");
  }

  tzsl::TrainConfig resolve() const {
    std::map<std::string, std::string> kv = tzsl::TrainConfig{}.to_map();
    if (!config_file.empty()) {
      const auto text = tzsl::read_file(config_file);
      std::size_t line_no = 0;
      for (auto line : tzsl::split(text, '\n')) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        const std::string key(line.substr(0, eq));
        if (eq == std::string_view::npos || !kv.count(key))
          throw tzsl::FormatError(config_file + ":" + std::to_string(line_no) +
                                  ": expected a known key=value pair");
        kv[key] = std::string(line.substr(eq + 1));
      }
    }
    for (const auto& [key, option] : options)
      if (option->count() > 0) kv[key] = values.at(key);
    auto cfg = tzsl::TrainConfig::from_map(kv);
    cfg.validate();
    return cfg;
  }
};

struct DataFlags {
  std::string features;
  std::string semantics;

  void add(CLI::App& app) {
    app.add_option("--features", features, "feature file")->required();
    app.add_option("--semantics", semantics, "semantic file")->required();
  }

  tzsl::Dataset load(Manifest& manifest) const {
    auto ds = tzsl::load_dataset(features, semantics);
    manifest.input(features);
    manifest.input(semantics);
    return ds;
  }
};

int run_synth(const tzsl::SynthConfig& cfg, const std::string& features,
              const std::string& semantics, const std::string& manifest_flag) {
  Manifest manifest("synth");
  manifest.config({{"seen_classes", std::to_string(cfg.seen_classes)},
                   {"unseen_classes", std::to_string(cfg.unseen_classes)},
                   {"semantic_dim", std::to_string(cfg.semantic_dim)},
                   {"feature_dim", std::to_string(cfg.feature_dim)},
                   {"samples_per_class", std::to_string(cfg.samples_per_class)},
                   {"prototype_noise", tzsl::format_real(cfg.prototype_noise)},
                   {"sample_noise", tzsl::format_real(cfg.sample_noise)},
                   {"cluster_quality", tzsl::format_real(cfg.cluster_quality)},
                   {"seen_test_fraction", tzsl::format_real(cfg.seen_test_fraction)}});
  manifest.seed(cfg.seed);
  auto ds = tzsl::generate_synthetic(cfg);
  tzsl::save_dataset(ds, features, semantics);
  manifest.output(features);
  manifest.output(semantics);
  manifest.write(manifest_path(manifest_flag, features));
  return 0;
}

struct TrainArgs {
  DataFlags data;
  TrainFlags train;
  std::string out;
  std::string out_inductive;
  std::string stage = "both";
  std::string init;
  std::string resume;
  std::size_t extra_epochs = 0;
  std::string manifest;
};

int run_train(const TrainArgs& a) {
  Manifest manifest("train");
  if (a.stage != "inductive" && a.stage != "transductive" && a.stage != "both")
    throw tzsl::ValidationError("--stage must be inductive|transductive|both");
  manifest.config("stage", a.stage);
  auto ds = a.data.load(manifest);

  tzsl::Checkpoint result;
  if (!a.resume.empty()) {
    auto ckpt = tzsl::load_checkpoint(a.resume);
    manifest.input(a.resume);
    result = tzsl::continue_training(ds, std::move(ckpt), a.extra_epochs);
  } else {
    const auto cfg = a.train.resolve();
    if (a.stage == "inductive") {
      result = tzsl::train_inductive(ds, cfg);
    } else if (a.stage == "transductive") {
      if (a.init.empty())
        throw tzsl::ValidationError("--stage transductive needs --init <inductive checkpoint>");
      auto init = tzsl::load_checkpoint(a.init);
      manifest.input(a.init);
      result = tzsl::train_transductive(ds, cfg, init);
    } else {
      auto both = tzsl::train_both(ds, cfg);
      if (!a.out_inductive.empty()) {
        tzsl::save_checkpoint(both.inductive, a.out_inductive);
        manifest.output(a.out_inductive);
      }
      result = std::move(both.transductive);
    }
  }
  manifest.config(result.config.to_map());
  manifest.seed(result.config.seed);
  manifest.note("final_stage", tzsl::to_string(result.stage));
  manifest.note("epochs", result.epoch);
  tzsl::save_checkpoint(result, a.out);
  manifest.output(a.out);
  manifest.write(manifest_path(a.manifest, a.out));
  return 0;
}

struct EvalArgs {
  DataFlags data;
  TrainFlags train;
  std::string checkpoint;
  std::string out;
  std::string confusion;
  std::string mode = "zsl";
  std::string averaging = "overall";
  std::string protocol = "standard";
  std::size_t hubness = 0;
  std::string hubness_out;
  std::string manifest;
};

int run_eval(const EvalArgs& a) {
  Manifest manifest("eval");
  const auto mode = tzsl::parse_mode(a.mode);
  const auto averaging = tzsl::parse_averaging(a.averaging);
  manifest.config("mode", a.mode);
  manifest.config("averaging", a.averaging);
  manifest.config("protocol", a.protocol);
  auto ds = a.data.load(manifest);

  if (a.protocol == "qfsl") {
    if (mode != tzsl::Mode::gzsl)
      throw tzsl::ValidationError("--protocol qfsl evaluates --mode gzsl only");
    auto cfg = a.train.resolve();
    cfg.mode = tzsl::Mode::gzsl;
    manifest.config(cfg.to_map());
    manifest.seed(cfg.seed);
    auto report = tzsl::evaluate_qfsl_protocol(ds, cfg, averaging);
    tzsl::write_file_atomic(a.out, tzsl::format_qfsl_report(report));
    manifest.output(a.out);
    manifest.write(manifest_path(a.manifest, a.out));
    return 0;
  }
  if (a.protocol != "standard")
    throw tzsl::ValidationError("--protocol must be standard|qfsl");
  if (a.checkpoint.empty()) throw tzsl::ValidationError("--checkpoint is required");

  auto ckpt = tzsl::load_checkpoint(a.checkpoint);
  manifest.input(a.checkpoint);
  manifest.seed(ckpt.config.seed);
  auto report = tzsl::evaluate(ckpt.net, ds, mode, averaging);
  tzsl::write_file_atomic(a.out, tzsl::format_report(report, ds.semantics()));
  manifest.output(a.out);
  if (!a.confusion.empty()) {
    tzsl::write_file_atomic(a.confusion, tzsl::format_confusion_csv(report, ds.semantics()));
    manifest.output(a.confusion);
  }
  if (a.hubness > 0) {
    manifest.config("hubness_k", std::to_string(a.hubness));
    const fs::path path = a.hubness_out.empty() ? fs::path(a.out + ".hubness") : fs::path(a.hubness_out);
    auto hub = tzsl::hubness_skewness(ckpt.net, ds, a.hubness, mode);
    tzsl::write_file_atomic(path, tzsl::format_hubness(hub, ds.semantics()));
    manifest.output(path);
  }
  manifest.write(manifest_path(a.manifest, a.out));
  return 0;
}

struct CvArgs {
  DataFlags data;
  TrainFlags train;
  std::vector<double> alphas{0.15};
  std::vector<double> lambdas{1e-4};
  std::vector<double> margins{1.0};
  std::size_t reps = 10;
  double val_fraction = 0.17;
  std::string out;
  std::string best;
  std::string manifest;
};

int run_cv(const CvArgs& a) {
  Manifest manifest("cv");
  auto ds = a.data.load(manifest);
  auto cfg = a.train.resolve();
  manifest.config(cfg.to_map());
  manifest.config("reps", std::to_string(a.reps));
  manifest.config("val_fraction", tzsl::format_real(a.val_fraction));
  manifest.seed(cfg.seed);

  std::vector<tzsl::GridPoint> grid;
  for (double alpha : a.alphas)
    for (double lambda : a.lambdas)
      for (double margin : a.margins) grid.push_back({alpha, lambda, margin});

  std::size_t runs = 0;
  auto log = [&runs](std::size_t rep, const tzsl::GridPoint& p, double score) {
    ++runs;
    std::cerr << "cv run " << runs << ": rep=" << rep << " alpha=" << tzsl::format_real(p.alpha)
              << " lambda=" << tzsl::format_real(p.lambda)
              << " margin=" << tzsl::format_real(p.margin)
              << " top1=" << tzsl::format_real(score) << "\n";
  };
  auto result = tzsl::monte_carlo_cv(ds, grid, a.reps, a.val_fraction, cfg, log);
  manifest.note("training_runs", runs);

  tzsl::write_file_atomic(a.out, tzsl::format_cv_csv(result));
  manifest.output(a.out);
  const fs::path best = a.best.empty() ? fs::path(a.out + ".best") : fs::path(a.best);
  auto chosen = cfg;
  chosen.alpha = result.best_point().alpha;
  chosen.lambda = result.best_point().lambda;
  chosen.margin = result.best_point().margin;
  std::string text;
  for (const auto& [k, v] : chosen.to_map()) text += k + "=" + v + "\n";
  tzsl::write_file_atomic(best, text);
  manifest.output(best);
  manifest.write(manifest_path(a.manifest, a.out));
  return 0;
}

struct SweepArgs {
  DataFlags data;
  TrainFlags train;
  std::vector<std::size_t> sizes;
  std::string out;
  std::string manifest;
};

int run_sweep(const SweepArgs& a) {
  Manifest manifest("sweep-batch");
  auto ds = a.data.load(manifest);
  auto cfg = a.train.resolve();
  manifest.config(cfg.to_map());
  manifest.seed(cfg.seed);
  auto rows = tzsl::sweep_batch_sizes(ds, a.sizes, cfg);
  tzsl::write_file_atomic(a.out, tzsl::format_sweep_csv(rows));
  manifest.output(a.out);
  manifest.write(manifest_path(a.manifest, a.out));
  return 0;
}

int exit_code(const tzsl::Error& e) {
  switch (e.kind()) {
    case tzsl::ErrorKind::io:
      return kExitIo;
    case tzsl::ErrorKind::validation:
      return kExitValidation;
    case tzsl::ErrorKind::numeric:
      return kExitNumeric;
  }
  return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transductive zero-shot learning with pseudo-label triplets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tzsl 1.0.0");

  tzsl::SynthConfig synth;
  std::string synth_features, synth_semantics, synth_manifest;
  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic embedding dataset");
  cmd_synth->add_option("--out-features", synth_features, "feature file to write")->required();
  cmd_synth->add_option("--out-semantics", synth_semantics, "semantic file to write")->required();
  cmd_synth->add_option("--seen", synth.seen_classes, "seen classes")->check(CLI::PositiveNumber)->capture_default_str();
  cmd_synth->add_option("--unseen", synth.unseen_classes, "unseen classes")->check(CLI::PositiveNumber)->capture_default_str();
  cmd_synth->add_option("--semantic-dim", synth.semantic_dim, "semantic dimension d")->check(CLI::PositiveNumber)->capture_default_str();
  cmd_synth->add_option("--feature-dim", synth.feature_dim, "feature dimension m")->check(CLI::PositiveNumber)->capture_default_str();
  cmd_synth->add_option("--per-class", synth.samples_per_class, "samples per class")->check(CLI::PositiveNumber)->capture_default_str();
  cmd_synth->add_option("--prototype-noise", synth.prototype_noise, "prototype noise")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd_synth->add_option("--sample-noise", synth.sample_noise, "sample noise")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd_synth->add_option("--cluster-quality", synth.cluster_quality, "0 tight .. 1 diffuse")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd_synth->add_option("--seen-test-fraction", synth.seen_test_fraction, "share of seen records held out for testing")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd_synth->add_option("--seed", synth.seed, "seed")->capture_default_str();
  cmd_synth->add_option("--manifest", synth_manifest, "manifest path (default <features>.manifest.json)");

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "train a projection network");
  train.data.add(*cmd_train);
  train.train.add(*cmd_train);
  cmd_train->add_option("--out", train.out, "checkpoint to write")->required();
  cmd_train->add_option("--out-inductive", train.out_inductive, "also keep the inductive checkpoint (--stage both)");
  cmd_train->add_option("--stage", train.stage, "inductive, transductive or both")->capture_default_str();
  cmd_train->add_option("--init", train.init, "inductive checkpoint to start the transductive stage from");
  cmd_train->add_option("--resume", train.resume, "checkpoint to continue in its own stage");
  cmd_train->add_option("--extra-epochs", train.extra_epochs, "epochs to add with --resume");
  cmd_train->add_option("--manifest", train.manifest, "manifest path (default <out>.manifest.json)");

  EvalArgs eval;
  auto* cmd_eval = app.add_subcommand("eval", "score a checkpoint on the test records");
  eval.data.add(*cmd_eval);
  eval.train.add(*cmd_eval);
  cmd_eval->add_option("--checkpoint", eval.checkpoint, "checkpoint to score");
  cmd_eval->add_option("--out", eval.out, "report to write")->required();
  cmd_eval->add_option("--confusion", eval.confusion, "confusion matrix CSV to write");
  cmd_eval->add_option("--averaging", eval.averaging, "overall or per-class-mean")->capture_default_str();
  cmd_eval->add_option("--protocol", eval.protocol, "standard or qfsl")->capture_default_str();
  cmd_eval->add_option("--hubness", eval.hubness, "also report N_k skewness for this k");
  cmd_eval->add_option("--hubness-out", eval.hubness_out, "hubness report path (default <out>.hubness)");
  cmd_eval->add_option("--manifest", eval.manifest, "manifest path (default <out>.manifest.json)");

  CvArgs cv;
  auto* cmd_cv = app.add_subcommand("cv", "Monte Carlo cross-validation over a hyperparameter grid");
  cv.data.add(*cmd_cv);
  cv.train.add(*cmd_cv);
  cmd_cv->add_option("--alphas", cv.alphas, "comma-separated alpha values")->delimiter(',')->capture_default_str();
  cmd_cv->add_option("--lambdas", cv.lambdas, "comma-separated lambda values")->delimiter(',')->capture_default_str();
  cmd_cv->add_option("--margins", cv.margins, "comma-separated margin values")->delimiter(',')->capture_default_str();
  cmd_cv->add_option("--reps", cv.reps, "repetitions")->check(CLI::PositiveNumber)->capture_default_str();
  cmd_cv->add_option("--val-fraction", cv.val_fraction, "share of seen classes held out")->capture_default_str();
  cmd_cv->add_option("--out", cv.out, "score table CSV")->required();
  cmd_cv->add_option("--best", cv.best, "best config file (default <out>.best)");
  cmd_cv->add_option("--manifest", cv.manifest, "manifest path (default <out>.manifest.json)");

  SweepArgs sweep;
  auto* cmd_sweep = app.add_subcommand("sweep-batch", "unseen top-1 as a function of batch size");
  sweep.data.add(*cmd_sweep);
  sweep.train.add(*cmd_sweep);
  cmd_sweep->add_option("--batch-sizes", sweep.sizes, "comma-separated seen batch sizes")->delimiter(',')->required();
  cmd_sweep->add_option("--out", sweep.out, "CSV to write")->required();
  cmd_sweep->add_option("--manifest", sweep.manifest, "manifest path (default <out>.manifest.json)");

  eval.mode = "zsl";
  cmd_eval->get_option("--mode")->description("zsl or gzsl (also the qfsl training mode)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*cmd_synth) return run_synth(synth, synth_features, synth_semantics, synth_manifest);
    if (*cmd_train) return run_train(train);
    if (*cmd_eval) {
      eval.mode = eval.train.values.at("mode");
      return run_eval(eval);
    }
    if (*cmd_cv) return run_cv(cv);
    if (*cmd_sweep) return run_sweep(sweep);
  } catch (const tzsl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
