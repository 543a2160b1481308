#include "tzsl/config.hpp"

#include <cmath>

#include "tzsl/error.hpp"
#include "tzsl/io.hpp"

namespace tzsl {

std::string to_string(Mode mode) { return mode == Mode::zsl ? "zsl" : "gzsl"; }

std::string to_string(Variant variant) {
  return variant == Variant::triplet ? "triplet" : "euclidean";
}

Mode parse_mode(const std::string& text) {
  if (text == "zsl") return Mode::zsl;
  if (text == "gzsl") return Mode::gzsl;
  throw ValidationError("mode must be zsl|gzsl, got '" + text + "'");
}

Variant parse_variant(const std::string& text) {
  if (text == "triplet") return Variant::triplet;
  if (text == "euclidean") return Variant::euclidean;
  throw ValidationError("variant must be triplet|euclidean, got '" + text + "'");
}

void TrainConfig::validate() const {
  auto non_negative = [](double x) { return std::isfinite(x) && x >= 0.0; };
  if (!non_negative(alpha)) throw ValidationError("alpha must be >= 0");
  if (!non_negative(lambda)) throw ValidationError("lambda must be >= 0");
  if (!non_negative(margin)) throw ValidationError("margin must be >= 0");
  if (!(std::isfinite(lr) && lr > 0.0)) throw ValidationError("learning rate must be > 0");
  if (batch_seen < 1) throw ValidationError("seen batch size must be >= 1");
  if (hidden_dim < 1) throw ValidationError("hidden width must be >= 1");
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {
      {"alpha", format_real(alpha)},
      {"batch_seen", std::to_string(batch_seen)},
      {"batch_unlabeled", std::to_string(batch_unlabeled)},
      {"early_stop", early_stop ? "1" : "0"},
      {"epochs_inductive", std::to_string(epochs_inductive)},
      {"epochs_transductive", std::to_string(epochs_transductive)},
      {"hidden_dim", std::to_string(hidden_dim)},
      {"lambda", format_real(lambda)},
      {"lr", format_real(lr)},
      {"margin", format_real(margin)},
      {"mode", to_string(mode)},
      {"seed", std::to_string(seed)},
      {"variant", to_string(variant)},
  };
}

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& kv) {
  auto get = [&kv](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("config is missing key '" + key + "'");
    return it->second;
  };
  TrainConfig cfg;
  cfg.alpha = parse_real(get("alpha"), "alpha");
  cfg.batch_seen = parse_count(get("batch_seen"), "batch_seen");
  cfg.batch_unlabeled = parse_count(get("batch_unlabeled"), "batch_unlabeled");
  cfg.early_stop = parse_count(get("early_stop"), "early_stop") != 0;
  cfg.epochs_inductive = parse_count(get("epochs_inductive"), "epochs_inductive");
  cfg.epochs_transductive = parse_count(get("epochs_transductive"), "epochs_transductive");
  cfg.hidden_dim = parse_count(get("hidden_dim"), "hidden_dim");
  cfg.lambda = parse_real(get("lambda"), "lambda");
  cfg.lr = parse_real(get("lr"), "lr");
  cfg.margin = parse_real(get("margin"), "margin");
  cfg.mode = parse_mode(get("mode"));
  cfg.seed = parse_count(get("seed"), "seed");
  cfg.variant = parse_variant(get("variant"));
  return cfg;
}

}  // namespace tzsl
