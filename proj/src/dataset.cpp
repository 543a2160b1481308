#include "tzsl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "tzsl/error.hpp"
#include "tzsl/io.hpp"

namespace tzsl {

namespace {

constexpr double kFeatureBound = 0.9;

std::string line_ctx(const std::string& file, std::size_t line) {
  return file + " line " + std::to_string(line);
}

// Splits into lines, dropping a trailing '\r' and skipping blank lines.
std::vector<std::pair<std::size_t, std::string_view>> numbered_lines(
    std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t number = 0;
  for (auto line : split(text, '\n')) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    out.emplace_back(number, line);
  }
  return out;
}

// Parses "<magic> v1 <key>=<int>".
std::size_t parse_header(std::string_view line, std::string_view magic,
                         std::string_view key, const std::string& file) {
  auto parts = split(line, ' ');
  if (parts.size() != 3 || parts[0] != magic)
    throw FormatError(file + ": malformed header '" + std::string(line) + "'");
  if (parts[1] != "v1")
    throw FormatError(file + ": unsupported version '" + std::string(parts[1]) + "'");
  std::string prefix = std::string(key) + "=";
  if (parts[2].substr(0, prefix.size()) != prefix)
    throw FormatError(file + ": malformed header '" + std::string(line) + "'");
  return parse_count(parts[2].substr(prefix.size()), file + " header");
}

void check_token(std::string_view token, const std::string& what) {
  if (token.empty() || token.find_first_of(",\n\r") != std::string_view::npos)
    throw ValidationError(what + " must be non-empty and free of commas/newlines: '" +
                          std::string(token) + "'");
}

}  // namespace

ClassIndex SemanticTable::add(SemanticClass cls) {
  if (cls.embedding.size() != dim_)
    throw ShapeError("semantic vector of class " + cls.id, dim_, cls.embedding.size());
  if (find(cls.id)) throw FormatError("duplicate class id '" + cls.id + "'");
  classes_.push_back(std::move(cls));
  std::vector<double> flat(embeddings_.values().begin(), embeddings_.values().end());
  flat.insert(flat.end(), classes_.back().embedding.begin(),
              classes_.back().embedding.end());
  embeddings_ = DenseMatrix(classes_.size(), dim_, std::move(flat));
  return classes_.size() - 1;
}

std::optional<ClassIndex> SemanticTable::find(const std::string& id) const {
  for (ClassIndex i = 0; i < classes_.size(); ++i)
    if (classes_[i].id == id) return i;
  return std::nullopt;
}

std::vector<ClassIndex> SemanticTable::seen_indices() const {
  std::vector<ClassIndex> out;
  for (ClassIndex i = 0; i < classes_.size(); ++i)
    if (classes_[i].seen) out.push_back(i);
  return out;
}

std::vector<ClassIndex> SemanticTable::unseen_indices() const {
  std::vector<ClassIndex> out;
  for (ClassIndex i = 0; i < classes_.size(); ++i)
    if (!classes_[i].seen) out.push_back(i);
  return out;
}

FeatureScaling FeatureScaling::identity(std::size_t dim) {
  return {Vector(dim, 1.0), Vector(dim, 0.0)};
}

FeatureScaling normalize_features(std::vector<EmbeddingRecord>& records,
                                  std::size_t feature_dim) {
  FeatureScaling map = FeatureScaling::identity(feature_dim);
  if (records.empty()) return map;
  for (std::size_t k = 0; k < feature_dim; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : records) {
      lo = std::min(lo, r.feature[k]);
      hi = std::max(hi, r.feature[k]);
    }
    if (hi > lo) {
      map.scale[k] = 2.0 * kFeatureBound / (hi - lo);
      map.offset[k] = -kFeatureBound - lo * map.scale[k];
    } else {
      map.scale[k] = 0.0;
      map.offset[k] = 0.0;
    }
  }
  for (auto& r : records)
    for (std::size_t k = 0; k < feature_dim; ++k)
      r.feature[k] = std::clamp(r.feature[k] * map.scale[k] + map.offset[k],
                                -kFeatureBound, kFeatureBound);
  return map;
}

Dataset::Dataset(SemanticTable semantics, std::size_t feature_dim,
                 std::vector<EmbeddingRecord> records,
                 std::optional<FeatureScaling> scaling)
    : semantics_(std::move(semantics)),
      feature_dim_(feature_dim),
      records_(std::move(records)),
      scaling_(scaling ? std::move(*scaling) : FeatureScaling::identity(feature_dim)) {
  if (scaling_.scale.size() != feature_dim_ || scaling_.offset.size() != feature_dim_)
    throw ShapeError("feature scaling", feature_dim_, scaling_.scale.size());
  for (const auto& r : records_) {
    if (r.feature.size() != feature_dim_)
      throw ShapeError("feature of record " + r.id, feature_dim_, r.feature.size());
    for (double x : r.feature)
      if (!std::isfinite(x))
        throw NumericError("record " + r.id + " has a non-finite feature");
    if (r.label && *r.label >= semantics_.size())
      throw ValidationError("record " + r.id + " references an unknown class");
    if (r.split == Split::seen_train) {
      if (!r.label)
        throw ValidationError("training record " + r.id + " has no label");
      if (!semantics_.is_seen(*r.label))
        throw ValidationError("training record " + r.id + " is labeled with unseen class " +
                              semantics_[*r.label].id);
    }
  }
}

std::size_t Dataset::count(Split split) const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [split](const auto& r) { return r.split == split; }));
}

TrainingView::TrainingView(const Dataset& dataset)
    : semantics_(&dataset.semantics()), feature_dim_(dataset.feature_dim()) {
  for (const auto& r : dataset.records()) {
    if (r.split == Split::seen_train)
      seen_.push_back({r.feature, *r.label});
    else
      unlabeled_.emplace_back(r.feature);
  }
}

Dataset parse_dataset(const std::string& features_text,
                      const std::string& semantics_text) {
  const std::string sem_file = "semantic file";
  const std::string emb_file = "feature file";

  auto sem_lines = numbered_lines(semantics_text);
  if (sem_lines.empty()) throw FormatError(sem_file + ": missing header");
  const std::size_t d = parse_header(sem_lines[0].second, "SEM", "d", sem_file);
  SemanticTable table(d);
  for (std::size_t i = 1; i < sem_lines.size(); ++i) {
    auto [number, line] = sem_lines[i];
    auto ctx = line_ctx(sem_file, number);
    auto fields = split(line, ',');
    if (fields.size() != 3 + d)
      throw FormatError(ctx + ": expected " + std::to_string(d) +
                        " semantic values, found " +
                        std::to_string(fields.size() < 3 ? 0 : fields.size() - 3));
    SemanticClass cls;
    cls.id = std::string(fields[0]);
    cls.name = std::string(fields[1]);
    if (cls.id.empty()) throw FormatError(ctx + ": empty class id");
    if (fields[2] == "seen")
      cls.seen = true;
    else if (fields[2] == "unseen")
      cls.seen = false;
    else
      throw FormatError(ctx + ": partition must be seen|unseen, got '" +
                        std::string(fields[2]) + "'");
    for (std::size_t k = 0; k < d; ++k) cls.embedding.push_back(parse_real(fields[3 + k], ctx));
    if (table.find(cls.id))
      throw FormatError(ctx + ": duplicate class id '" + cls.id + "'");
    table.add(std::move(cls));
  }

  auto emb_lines = numbered_lines(features_text);
  if (emb_lines.empty()) throw FormatError(emb_file + ": missing header");
  const std::size_t m = parse_header(emb_lines[0].second, "EMB", "m", emb_file);
  std::vector<EmbeddingRecord> records;
  for (std::size_t i = 1; i < emb_lines.size(); ++i) {
    auto [number, line] = emb_lines[i];
    auto ctx = line_ctx(emb_file, number);
    auto fields = split(line, ',');
    if (fields.size() != 3 + m)
      throw FormatError(ctx + ": expected " + std::to_string(m) + " feature values, found " +
                        std::to_string(fields.size() < 3 ? 0 : fields.size() - 3));
    EmbeddingRecord rec;
    rec.id = std::string(fields[0]);
    if (rec.id.empty()) throw FormatError(ctx + ": empty record id");
    if (fields[1] == "train")
      rec.split = Split::seen_train;
    else if (fields[1] == "test")
      rec.split = Split::unlabeled_test;
    else
      throw FormatError(ctx + ": split must be train|test, got '" + std::string(fields[1]) + "'");
    if (fields[2] != "_") {
      auto idx = table.find(std::string(fields[2]));
      if (!idx)
        throw FormatError(ctx + ": unknown class '" + std::string(fields[2]) + "'");
      rec.label = *idx;
    }
    if (rec.split == Split::seen_train) {
      if (!rec.label) throw FormatError(ctx + ": train record without a label");
      if (!table.is_seen(*rec.label))
        throw FormatError(ctx + ": train record labeled with unseen class '" +
                          std::string(fields[2]) + "'");
    }
    for (std::size_t k = 0; k < m; ++k) rec.feature.push_back(parse_real(fields[3 + k], ctx));
    records.push_back(std::move(rec));
  }

  auto scaling = normalize_features(records, m);
  return Dataset(std::move(table), m, std::move(records), std::move(scaling));
}

Dataset load_dataset(const std::filesystem::path& features_path,
                     const std::filesystem::path& semantics_path) {
  return parse_dataset(read_file(features_path), read_file(semantics_path));
}

std::string format_semantics(const SemanticTable& semantics) {
  std::string out = "SEM v1 d=" + std::to_string(semantics.dim()) + "\n";
  for (const auto& cls : semantics.classes()) {
    check_token(cls.id, "class id");
    check_token(cls.name, "class name");
    out += cls.id;
    out += ',';
    out += cls.name;
    out += cls.seen ? ",seen" : ",unseen";
    for (double v : cls.embedding) {
      out += ',';
      out += format_real(v);
    }
    out += '\n';
  }
  return out;
}

std::string format_features(const Dataset& dataset) {
  std::string out = "EMB v1 m=" + std::to_string(dataset.feature_dim()) + "\n";
  for (const auto& r : dataset.records()) {
    check_token(r.id, "record id");
    out += r.id;
    out += r.split == Split::seen_train ? ",train," : ",test,";
    out += r.label ? dataset.semantics()[*r.label].id : std::string("_");
    for (double v : r.feature) {
      out += ',';
      out += format_real(v);
    }
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& features_path,
                  const std::filesystem::path& semantics_path) {
  auto sem = format_semantics(dataset.semantics());
  auto emb = format_features(dataset);
  write_file_atomic(semantics_path, sem);
  write_file_atomic(features_path, emb);
}

void SynthConfig::validate() const {
  if (seen_classes < 1) throw ValidationError("synthetic: seen classes must be >= 1");
  if (unseen_classes < 1) throw ValidationError("synthetic: unseen classes must be >= 1");
  if (semantic_dim < 1) throw ValidationError("synthetic: semantic dim must be >= 1");
  if (feature_dim < 1) throw ValidationError("synthetic: feature dim must be >= 1");
  if (samples_per_class < 1)
    throw ValidationError("synthetic: samples per class must be >= 1");
  if (!(prototype_noise >= 0.0) || !std::isfinite(prototype_noise))
    throw ValidationError("synthetic: prototype noise must be >= 0");
  if (!(sample_noise >= 0.0) || !std::isfinite(sample_noise))
    throw ValidationError("synthetic: sample noise must be >= 0");
  if (!(cluster_quality >= 0.0 && cluster_quality <= 1.0))
    throw ValidationError("synthetic: cluster quality must lie in [0, 1]");
  if (!(seen_test_fraction >= 0.0 && seen_test_fraction < 1.0))
    throw ValidationError("synthetic: seen test fraction must lie in [0, 1)");
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t total_classes = cfg.seen_classes + cfg.unseen_classes;
  const std::size_t d = cfg.semantic_dim;
  const std::size_t m = cfg.feature_dim;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SemanticTable table(d);
  for (std::size_t c = 0; c < total_classes; ++c) {
    SemanticClass cls;
    cls.id = "c" + std::to_string(c);
    cls.seen = c < cfg.seen_classes;
    cls.name = (cls.seen ? "seen_" : "unseen_") + std::to_string(c);
    for (std::size_t k = 0; k < d; ++k) cls.embedding.push_back(normal(rng));
    table.add(std::move(cls));
  }

  // Entries N(0, 1/d) keep A*e at unit scale before the tanh.
  DenseMatrix linear_map(m, d);
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& a : linear_map.values()) a = map_scale * normal(rng);

  DenseMatrix prototypes(total_classes, m);
  for (std::size_t c = 0; c < total_classes; ++c) {
    const auto& e = table[c].embedding;
    for (std::size_t r = 0; r < m; ++r) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += linear_map(r, k) * e[k];
      prototypes(c, r) = std::tanh(acc) + cfg.prototype_noise * normal(rng);
    }
  }

  const double spread = cfg.sample_noise * (1.0 + 3.0 * cfg.cluster_quality);
  const auto held_out = static_cast<std::size_t>(
      std::llround(cfg.seen_test_fraction * static_cast<double>(cfg.samples_per_class)));

  std::vector<EmbeddingRecord> records;
  records.reserve(total_classes * cfg.samples_per_class);
  for (std::size_t c = 0; c < total_classes; ++c) {
    const bool seen = c < cfg.seen_classes;
    for (std::size_t s = 0; s < cfg.samples_per_class; ++s) {
      EmbeddingRecord rec;
      rec.id = "c" + std::to_string(c) + "_" + std::to_string(s);
      rec.label = c;
      const bool held = seen && s >= cfg.samples_per_class - held_out;
      rec.split = (seen && !held) ? Split::seen_train : Split::unlabeled_test;
      rec.feature.resize(m);
      for (std::size_t r = 0; r < m; ++r)
        rec.feature[r] = prototypes(c, r) + spread * normal(rng);
      records.push_back(std::move(rec));
    }
  }

  auto scaling = normalize_features(records, m);
  return Dataset(std::move(table), m, std::move(records), std::move(scaling));
}

ValidationSplit split_seen_for_validation(const Dataset& dataset, double fraction,
                                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ValidationError("validation fraction must lie in (0, 1)");
  const auto& table = dataset.semantics();
  auto seen = table.seen_indices();
  if (seen.size() < 2)
    throw ValidationError("validation split needs at least 2 seen classes");
  const auto wanted = std::max<long long>(
      1, std::llround(fraction * static_cast<double>(seen.size())));
  if (static_cast<std::size_t>(wanted) >= seen.size())
    throw ValidationError("validation fraction leaves no training classes");

  auto shuffled = seen;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::vector<bool> pseudo_unseen(table.size(), false);
  for (long long i = 0; i < wanted; ++i) pseudo_unseen[shuffled[static_cast<std::size_t>(i)]] = true;

  SemanticTable reduced(table.dim());
  std::vector<std::optional<ClassIndex>> remap(table.size());
  std::vector<std::string> ids;
  for (ClassIndex c : seen) {
    SemanticClass cls = table[c];
    cls.seen = !pseudo_unseen[c];
    if (pseudo_unseen[c]) ids.push_back(cls.id);
    remap[c] = reduced.add(std::move(cls));
  }

  std::vector<EmbeddingRecord> records;
  for (const auto& r : dataset.records()) {
    if (r.split != Split::seen_train) continue;
    EmbeddingRecord copy = r;
    copy.label = remap[*r.label];
    if (pseudo_unseen[*r.label]) copy.split = Split::unlabeled_test;
    records.push_back(std::move(copy));
  }
  return {Dataset(std::move(reduced), dataset.feature_dim(), std::move(records),
                  dataset.scaling()),
          std::move(ids)};
}

UnlabeledHalves halve_unlabeled(const Dataset& dataset, std::uint64_t seed) {
  const auto records = dataset.records();
  // Strata keyed by class index; unlabeled records go last.
  std::map<std::size_t, std::vector<std::size_t>> strata;
  const std::size_t no_label = std::numeric_limits<std::size_t>::max();
  std::size_t total = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].split != Split::unlabeled_test) continue;
    strata[records[i].label.value_or(no_label)].push_back(i);
    ++total;
  }
  if (total < 2) throw ValidationError("halving needs at least 2 unlabeled records");

  std::mt19937_64 rng(seed);
  UnlabeledHalves halves;
  bool to_first = true;
  for (auto& [label, members] : strata) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) {
      (to_first ? halves.first : halves.second).push_back(idx);
      to_first = !to_first;
    }
  }
  std::sort(halves.first.begin(), halves.first.end());
  std::sort(halves.second.begin(), halves.second.end());
  return halves;
}

Dataset with_unlabeled_subset(const Dataset& dataset,
                              std::span<const std::size_t> unlabeled_indices) {
  const auto records = dataset.records();
  std::vector<EmbeddingRecord> kept;
  for (const auto& r : records)
    if (r.split == Split::seen_train) kept.push_back(r);
  for (std::size_t idx : unlabeled_indices) {
    if (idx >= records.size() || records[idx].split != Split::unlabeled_test)
      throw ValidationError("index " + std::to_string(idx) +
                            " is not an unlabeled record");
    kept.push_back(records[idx]);
  }
  return Dataset(dataset.semantics(), dataset.feature_dim(), std::move(kept),
                 dataset.scaling());
}

}  // namespace tzsl
