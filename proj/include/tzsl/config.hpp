#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

namespace tzsl {

enum class Mode { zsl, gzsl };

// Unsupervised term used in the transductive stage: the pseudo-label
// triplet hinge, or plain squared distance to the positive (baseline).
enum class Variant { triplet, euclidean };

std::string to_string(Mode mode);
std::string to_string(Variant variant);
Mode parse_mode(const std::string& text);
Variant parse_variant(const std::string& text);

struct TrainConfig {
  Mode mode = Mode::zsl;
  Variant variant = Variant::triplet;
  double alpha = 0.15;
  double lambda = 1e-4;
  double margin = 1.0;
  double lr = 1e-4;
  std::size_t batch_seen = 32;
  std::size_t batch_unlabeled = 0;  // 0: same as batch_seen
  std::size_t epochs_inductive = 200;
  std::size_t epochs_transductive = 200;
  std::size_t hidden_dim = 512;
  // Stop once the epoch-mean loss improves by < 1e-5 (relative) for 5
  // consecutive epochs.
  bool early_stop = false;
  std::uint64_t seed = 1;

  std::size_t unlabeled_batch() const noexcept {
    return batch_unlabeled == 0 ? batch_seen : batch_unlabeled;
  }

  void validate() const;

  // Flat key=value form, keys sorted, reals in shortest round-trip form.
  std::map<std::string, std::string> to_map() const;
  static TrainConfig from_map(const std::map<std::string, std::string>& kv);

  bool operator==(const TrainConfig&) const = default;
};

}  // namespace tzsl
