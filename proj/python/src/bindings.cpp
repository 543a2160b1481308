#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tzsl/config.hpp"
#include "tzsl/dataset.hpp"
#include "tzsl/error.hpp"
#include "tzsl/evaluation.hpp"
#include "tzsl/io.hpp"
#include "tzsl/training.hpp"

namespace py = pybind11;
using namespace tzsl;

namespace {

// Training options arrive as Python keyword arguments named like the
// checkpoint keys (alpha, lr, epochs_inductive, ...).
TrainConfig config_from(const py::dict& options) {
  auto kv = TrainConfig{}.to_map();
  for (const auto& [key_obj, value] : options) {
    const auto key = py::cast<std::string>(key_obj);
    if (!kv.count(key)) throw ValidationError("unknown training option '" + key + "'");
    if (py::isinstance<py::bool_>(value)) {
      kv[key] = py::cast<bool>(value) ? "1" : "0";
    } else if (py::isinstance<py::float_>(value)) {
      kv[key] = format_real(py::cast<double>(value));
    } else {
      kv[key] = py::cast<std::string>(py::str(value));
    }
  }
  auto cfg = TrainConfig::from_map(kv);
  cfg.validate();
  return cfg;
}

py::dict report_dict(const EvalReport& r, const SemanticTable& table) {
  py::dict out;
  out["mode"] = to_string(r.mode);
  out["averaging"] = to_string(r.averaging);
  out["total"] = r.total;
  out["correct"] = r.correct;
  out["top1"] = r.top1();
  out["overall_top1"] = r.overall_top1;
  out["mean_class_top1"] = r.mean_class_top1;
  py::dict per_class;
  for (const auto& [cls, acc] : r.per_class_top1) per_class[py::str(table[cls].id)] = acc;
  out["per_class_top1"] = per_class;
  if (r.mode == Mode::gzsl) {
    out["acc_seen"] = r.acc_seen;
    out["acc_unseen"] = r.acc_unseen;
    out["hm"] = r.hm;
  }
  out["confusion"] = r.confusion;
  return out;
}

}  // namespace

PYBIND11_MODULE(_tzsl, m) {
  m.doc() = "Transductive zero-shot learning core";

  auto base = py::register_exception<Error>(m, "TzslError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("seen_classes", &SynthConfig::seen_classes)
      .def_readwrite("unseen_classes", &SynthConfig::unseen_classes)
      .def_readwrite("semantic_dim", &SynthConfig::semantic_dim)
      .def_readwrite("feature_dim", &SynthConfig::feature_dim)
      .def_readwrite("samples_per_class", &SynthConfig::samples_per_class)
      .def_readwrite("prototype_noise", &SynthConfig::prototype_noise)
      .def_readwrite("sample_noise", &SynthConfig::sample_noise)
      .def_readwrite("cluster_quality", &SynthConfig::cluster_quality)
      .def_readwrite("seen_test_fraction", &SynthConfig::seen_test_fraction)
      .def_readwrite("seed", &SynthConfig::seed);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("feature_dim", &Dataset::feature_dim)
      .def_property_readonly("semantic_dim", &Dataset::semantic_dim)
      .def_property_readonly("seen_train_count",
                             [](const Dataset& d) { return d.count(Split::seen_train); })
      .def_property_readonly("unlabeled_count",
                             [](const Dataset& d) { return d.count(Split::unlabeled_test); })
      .def_property_readonly("class_ids",
                             [](const Dataset& d) {
                               std::vector<std::string> ids;
                               for (const auto& c : d.semantics().classes()) ids.push_back(c.id);
                               return ids;
                             })
      .def("save", [](const Dataset& d, const std::filesystem::path& features,
                      const std::filesystem::path& semantics) { save_dataset(d, features, semantics); },
           py::arg("features"), py::arg("semantics"))
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def("load_dataset", &load_dataset, py::arg("features"), py::arg("semantics"));
  m.def("generate_synthetic", &generate_synthetic, py::arg("config"));

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_property_readonly("stage", [](const Checkpoint& c) { return to_string(c.stage); })
      .def_property_readonly("epoch", [](const Checkpoint& c) { return c.epoch; })
      .def_property_readonly("config", [](const Checkpoint& c) { return c.config.to_map(); })
      .def_property_readonly("loss_history",
                             [](const Checkpoint& c) {
                               std::vector<double> totals;
                               for (const auto& h : c.history) totals.push_back(h.total);
                               return totals;
                             })
      .def("project", [](const Checkpoint& c, const Vector& semantic) { return forward(c.net, semantic); },
           py::arg("semantic"))
      .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(c, p); },
           py::arg("path"))
      .def("to_bytes", [](const Checkpoint& c) { return py::bytes(serialize_checkpoint(c)); })
      .def("__eq__", [](const Checkpoint& a, const Checkpoint& b) { return a == b; });

  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  m.def("train_inductive",
        [](const Dataset& d, const py::kwargs& options) { return train_inductive(d, config_from(options)); },
        py::arg("dataset"));
  m.def("train_transductive",
        [](const Dataset& d, const Checkpoint& init, const py::kwargs& options) {
          return train_transductive(d, config_from(options), init);
        },
        py::arg("dataset"), py::arg("init"));
  m.def("train_both",
        [](const Dataset& d, const py::kwargs& options) {
          auto r = train_both(d, config_from(options));
          return py::make_tuple(std::move(r.inductive), std::move(r.transductive));
        },
        py::arg("dataset"), "Returns (inductive, transductive) checkpoints.");

  m.def("evaluate",
        [](const Checkpoint& c, const Dataset& d, const std::string& mode, const std::string& averaging) {
          return report_dict(evaluate(c.net, d, parse_mode(mode), parse_averaging(averaging)),
                             d.semantics());
        },
        py::arg("checkpoint"), py::arg("dataset"), py::arg("mode") = "zsl",
        py::arg("averaging") = "overall");

  m.def("hubness",
        [](const Checkpoint& c, const Dataset& d, std::size_t k, const std::string& mode) {
          auto r = hubness_skewness(c.net, d, k, parse_mode(mode));
          py::dict out;
          out["k"] = r.k;
          out["queries"] = r.queries;
          out["hits"] = r.hits;
          out["skewness"] = r.skewness;
          return out;
        },
        py::arg("checkpoint"), py::arg("dataset"), py::arg("k") = 1, py::arg("mode") = "zsl");

  m.def("qfsl",
        [](const Dataset& d, const py::kwargs& options) {
          auto cfg = config_from(options);
          cfg.mode = Mode::gzsl;
          auto r = evaluate_qfsl_protocol(d, cfg);
          py::dict out;
          out["acc_seen"] = r.acc_seen;
          out["acc_unseen"] = r.acc_unseen;
          out["hm"] = r.hm;
          out["first"] = report_dict(r.first, d.semantics());
          out["second"] = report_dict(r.second, d.semantics());
          return out;
        },
        py::arg("dataset"));

  m.def("monte_carlo_cv",
        [](const Dataset& d, const std::vector<std::tuple<double, double, double>>& grid,
           std::size_t repetitions, double fraction, const py::kwargs& options) {
          std::vector<GridPoint> points;
          for (const auto& [a, l, mg] : grid) points.push_back({a, l, mg});
          auto r = monte_carlo_cv(d, points, repetitions, fraction, config_from(options));
          py::list table;
          for (const auto& row : r.table) {
            py::dict entry;
            entry["point"] = py::make_tuple(row.point.alpha, row.point.lambda, row.point.margin);
            entry["scores"] = row.scores;
            entry["mean"] = row.mean;
            entry["stddev"] = row.stddev;
            table.append(entry);
          }
          const auto& best = r.best_point();
          return py::make_tuple(py::make_tuple(best.alpha, best.lambda, best.margin), table);
        },
        py::arg("dataset"), py::arg("grid"), py::arg("repetitions"), py::arg("fraction") = 0.17,
        "Returns (best (alpha, lambda, margin), score table).");

  m.def("harmonic_mean", &harmonic_mean, py::arg("a"), py::arg("b"));
  m.def("adjusted_skewness",
        [](const std::vector<double>& values) { return adjusted_skewness(values); },
        py::arg("values"));
}
