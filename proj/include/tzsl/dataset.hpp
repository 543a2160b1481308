#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tzsl/numerics.hpp"

namespace tzsl {

// Position of a class in its SemanticTable. Ties in every nearest-class
// search resolve to the smallest index.
using ClassIndex = std::size_t;

enum class Split { seen_train, unlabeled_test };

struct EmbeddingRecord {
  std::string id;
  Vector feature;
  // Ground truth. For unlabeled_test records this is evaluation-only and is
  // never exposed through TrainingView.
  std::optional<ClassIndex> label;
  Split split = Split::seen_train;

  bool operator==(const EmbeddingRecord&) const = default;
};

struct SemanticClass {
  std::string id;
  std::string name;
  Vector embedding;
  bool seen = true;

  bool operator==(const SemanticClass&) const = default;
};

// Ordered class table; the seen and unseen subsets partition it.
class SemanticTable {
 public:
  SemanticTable() = default;
  explicit SemanticTable(std::size_t dim) : dim_(dim) {}

  // Throws ShapeError on a dimension mismatch and FormatError on a duplicate id.
  ClassIndex add(SemanticClass cls);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return classes_.size(); }
  const SemanticClass& operator[](ClassIndex i) const { return classes_[i]; }
  std::span<const SemanticClass> classes() const noexcept { return classes_; }

  std::optional<ClassIndex> find(const std::string& id) const;
  bool is_seen(ClassIndex i) const { return classes_[i].seen; }
  std::vector<ClassIndex> seen_indices() const;
  std::vector<ClassIndex> unseen_indices() const;

  // size() x dim() matrix of embeddings in table order.
  const DenseMatrix& embeddings() const noexcept { return embeddings_; }

  bool operator==(const SemanticTable& o) const {
    return dim_ == o.dim_ && classes_ == o.classes_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<SemanticClass> classes_;
  DenseMatrix embeddings_;
};

// Per-dimension affine map applied at ingestion: stored = raw * scale + offset.
struct FeatureScaling {
  Vector scale;
  Vector offset;

  static FeatureScaling identity(std::size_t dim);
  bool operator==(const FeatureScaling&) const = default;
};

// Rescales every feature dimension into [-0.9, 0.9] in place and returns the
// map. Constant dimensions collapse to 0.
FeatureScaling normalize_features(std::vector<EmbeddingRecord>& records,
                                  std::size_t feature_dim);

class Dataset {
 public:
  // Validates every record against the table; throws on violation.
  Dataset(SemanticTable semantics, std::size_t feature_dim,
          std::vector<EmbeddingRecord> records,
          std::optional<FeatureScaling> scaling = std::nullopt);

  const SemanticTable& semantics() const noexcept { return semantics_; }
  std::span<const EmbeddingRecord> records() const noexcept { return records_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::size_t semantic_dim() const noexcept { return semantics_.dim(); }
  const FeatureScaling& scaling() const noexcept { return scaling_; }

  std::size_t count(Split split) const;

  bool operator==(const Dataset&) const = default;

 private:
  SemanticTable semantics_;
  std::size_t feature_dim_;
  std::vector<EmbeddingRecord> records_;
  FeatureScaling scaling_;
};

struct LabeledFeature {
  std::span<const double> feature;
  ClassIndex label;
};

// What the training code is allowed to see: labeled seen-train features and
// bare unlabeled features. Borrows storage from the Dataset, which must
// outlive the view.
class TrainingView {
 public:
  explicit TrainingView(const Dataset& dataset);

  const SemanticTable& semantics() const noexcept { return *semantics_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::span<const LabeledFeature> seen() const noexcept { return seen_; }
  std::span<const std::span<const double>> unlabeled() const noexcept {
    return unlabeled_;
  }

 private:
  const SemanticTable* semantics_;
  std::size_t feature_dim_;
  std::vector<LabeledFeature> seen_;
  std::vector<std::span<const double>> unlabeled_;
};

Dataset load_dataset(const std::filesystem::path& features_path,
                     const std::filesystem::path& semantics_path);

// Parses already-read file contents. Features are rescaled into [-0.9, 0.9].
Dataset parse_dataset(const std::string& features_text,
                      const std::string& semantics_text);

std::string format_features(const Dataset& dataset);
std::string format_semantics(const SemanticTable& semantics);

void save_dataset(const Dataset& dataset, const std::filesystem::path& features_path,
                  const std::filesystem::path& semantics_path);

struct SynthConfig {
  std::size_t seen_classes = 5;
  std::size_t unseen_classes = 3;
  std::size_t semantic_dim = 16;
  std::size_t feature_dim = 32;
  std::size_t samples_per_class = 20;
  double prototype_noise = 0.25;
  double sample_noise = 0.1;
  // 0 gives tight clusters, 1 diffuse ones (sample noise scaled by 1 + 3q).
  double cluster_quality = 0.5;
  // Share of each seen class held out as unlabeled_test (generalized setting).
  double seen_test_fraction = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

Dataset generate_synthetic(const SynthConfig& cfg);

struct ValidationSplit {
  // Original seen classes only; pseudo-unseen ones are marked unseen and their
  // records turned into labeled-for-evaluation unlabeled_test records.
  Dataset dataset;
  std::vector<std::string> pseudo_unseen_ids;
};

// Class-level split of the seen classes. The number of pseudo-unseen classes
// is fraction * S rounded to nearest, at least 1.
ValidationSplit split_seen_for_validation(const Dataset& dataset, double fraction,
                                          std::uint64_t seed);

struct UnlabeledHalves {
  std::vector<std::size_t> first;   // record indices into dataset.records()
  std::vector<std::size_t> second;
};

// Random disjoint halves of the unlabeled_test records, stratified by ground
// truth class where present. |first| - |second| is 0 or 1.
UnlabeledHalves halve_unlabeled(const Dataset& dataset, std::uint64_t seed);

// All seen_train records plus the listed unlabeled_test records.
Dataset with_unlabeled_subset(const Dataset& dataset,
                              std::span<const std::size_t> unlabeled_indices);

}  // namespace tzsl
