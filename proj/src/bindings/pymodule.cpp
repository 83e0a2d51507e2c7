#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "specflow/cfm.hpp"
#include "specflow/cli.hpp"
#include "specflow/dataset_io.hpp"
#include "specflow/errors.hpp"
#include "specflow/evaluation.hpp"
#include "specflow/flow_model.hpp"
#include "specflow/likelihood.hpp"
#include "specflow/runconfig.hpp"
#include "specflow/spectral.hpp"
#include "specflow/synth.hpp"
#include "specflow/trajectory.hpp"

namespace py = pybind11;

namespace specflow {
namespace {

using c_array =
    py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> points_to_array(const std::vector<Vec2>& pts) {
  py::array_t<double> a({py::ssize_t(pts.size()), py::ssize_t(2)});
  auto r = a.mutable_unchecked<2>();
  for (size_t i = 0; i < pts.size(); ++i) {
    r(py::ssize_t(i), 0) = pts[i].x;
    r(py::ssize_t(i), 1) = pts[i].y;
  }
  return a;
}

std::vector<Vec2> array_to_points(const c_array& a) {
  if (a.ndim() != 2 || a.shape(1) != 2)
    throw py::value_error("expected an (n, 2) array of xy points");
  auto r = a.unchecked<2>();
  std::vector<Vec2> pts(size_t(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i)
    pts[size_t(i)] = {r(i, 0), r(i, 1)};
  return pts;
}

py::array_t<double> vector_to_array(const Vector& v) {
  py::array_t<double> a(py::ssize_t(v.size()));
  auto r = a.mutable_unchecked<1>();
  for (size_t i = 0; i < v.size(); ++i) r(py::ssize_t(i)) = v[i];
  return a;
}

Vector array_to_vector(const c_array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  auto r = a.unchecked<1>();
  Vector v(size_t(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) v[size_t(i)] = r(i);
  return v;
}

}  // namespace

PYBIND11_MODULE(_specflow, m) {
  m.doc() = "flow-matching density estimation for trajectory anomaly scoring";

  static py::exception<SpecError> spec_exc(m, "SpecError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const SpecError& e) {
      const std::string msg =
          std::string(err_class_name(e.cls())) + ": " + e.what();
      py::set_error(spec_exc, msg.c_str());
    }
  });

  m.attr("HORIZON") = kHorizon;
  m.attr("HISTORY_LEN") = kHistoryLen;
  m.attr("GOAL_POINTS") = kGoalPoints;
  m.attr("FLAT_DIM") = kFlatDim;
  m.attr("DT") = kDt;
  m.attr("SCALE_METERS") = kScaleMeters;

  py::class_<GeneratorConfig>(m, "GeneratorConfig")
      .def(py::init<>())
      .def_readwrite("n_train", &GeneratorConfig::n_train)
      .def_readwrite("n_val", &GeneratorConfig::n_val)
      .def_readwrite("val_anomaly_frac", &GeneratorConfig::val_anomaly_frac)
      .def_readwrite("speed_min", &GeneratorConfig::speed_min)
      .def_readwrite("speed_max", &GeneratorConfig::speed_max)
      .def_readwrite("accel_lat_max", &GeneratorConfig::accel_lat_max)
      .def_readwrite("curvature_max", &GeneratorConfig::curvature_max)
      .def_readwrite("jerk_max", &GeneratorConfig::jerk_max)
      .def_readwrite("noise_lat", &GeneratorConfig::noise_lat)
      .def_readwrite("noise_long", &GeneratorConfig::noise_long)
      .def_readwrite("brake_decel", &GeneratorConfig::brake_decel)
      .def_readwrite("swerve_yaw", &GeneratorConfig::swerve_yaw)
      .def_readwrite("violation_offset_min",
                     &GeneratorConfig::violation_offset_min)
      .def_readwrite("violation_offset_max",
                     &GeneratorConfig::violation_offset_max)
      .def_readwrite("violation_hold", &GeneratorConfig::violation_hold)
      .def_readwrite("jitter_sigma", &GeneratorConfig::jitter_sigma)
      .def_readwrite("scale", &GeneratorConfig::scale);

  py::class_<Scenario>(m, "Scenario")
      .def_property_readonly("seed",
                             [](const Scenario& s) { return s.seed; })
      .def_property_readonly(
          "tag",
          [](const Scenario& s) { return std::string(tag_name(s.anomaly_tag)); })
      .def_property_readonly(
          "future", [](const Scenario& s) { return points_to_array(s.future); })
      .def_property_readonly(
          "goal_lane",
          [](const Scenario& s) { return points_to_array(s.context.goal_lane); })
      .def("__repr__", [](const Scenario& s) {
        return "<Scenario seed=" + std::to_string(s.seed) + " tag=" +
               tag_name(s.anomaly_tag) + ">";
      });

  py::class_<DatasetSplit>(m, "Dataset")
      .def_readonly("config", &DatasetSplit::config)
      .def_readonly("seed", &DatasetSplit::seed)
      .def_readonly("train", &DatasetSplit::train)
      .def_readonly("val", &DatasetSplit::val);

  m.def("build_dataset", &build_dataset, py::arg("config"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
  m.def("load_dataset", &load_dataset, py::arg("path"));

  py::class_<SpectralBasis>(m, "SpectralBasis")
      .def_property_readonly("k", [](const SpectralBasis& b) { return b.k; })
      .def_property_readonly("dim", [](const SpectralBasis& b) { return b.D; })
      .def_property_readonly(
          "evr", [](const SpectralBasis& b) { return vector_to_array(b.evr); })
      .def_property_readonly(
          "mean", [](const SpectralBasis& b) { return vector_to_array(b.mean); })
      .def_property_readonly(
          "hash", [](const SpectralBasis& b) { return basis_hash(b); })
      .def("project",
           [](const SpectralBasis& b, const c_array& flat) {
             return vector_to_array(project(b, array_to_vector(flat)));
           },
           py::arg("flat"))
      .def("reconstruct",
           [](const SpectralBasis& b, const c_array& z) {
             return vector_to_array(reconstruct(b, array_to_vector(z)));
           },
           py::arg("z"));

  m.def("fit_basis",
        [](const std::vector<Scenario>& scenarios, int k) {
          std::vector<Vector> flats;
          flats.reserve(scenarios.size());
          for (const Scenario& s : scenarios) flats.push_back(flatten(s.future));
          return fit_basis(flats, k);
        },
        py::arg("scenarios"), py::arg("k"));
  m.def("save_basis", &save_basis, py::arg("basis"), py::arg("path"));
  m.def("load_basis", &load_basis, py::arg("path"));

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("k", &ModelConfig::k)
      .def_readwrite("hidden", &ModelConfig::hidden)
      .def_readwrite("enc_hidden", &ModelConfig::enc_hidden)
      .def_readwrite("ctx_dim", &ModelConfig::ctx_dim)
      .def_readwrite("n_blocks", &ModelConfig::n_blocks)
      .def_readwrite("t_freqs", &ModelConfig::t_freqs);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("lr_init", &TrainConfig::lr_init)
      .def_readwrite("lr_floor", &TrainConfig::lr_floor)
      .def_readwrite("weight_decay", &TrainConfig::weight_decay)
      .def_readwrite("clip_norm", &TrainConfig::clip_norm)
      .def_readwrite("sigma_min", &TrainConfig::sigma_min)
      .def_readwrite("lambda_coord", &TrainConfig::lambda_coord)
      .def_readwrite("weighted", &TrainConfig::weighted)
      .def_readwrite("alpha", &TrainConfig::alpha)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<FlowModel>(m, "FlowModel")
      .def_property_readonly(
          "param_count", [](const FlowModel& f) { return f.p.count(); })
      .def_property_readonly("config",
                             [](const FlowModel& f) { return f.cfg; });

  py::class_<EpochStats>(m, "EpochStats")
      .def_readonly("epoch", &EpochStats::epoch)
      .def_readonly("flow_loss", &EpochStats::flow_loss)
      .def_readonly("coord_rmse_m", &EpochStats::coord_rmse_m)
      .def_readonly("grad_norm_mean", &EpochStats::grad_norm_mean)
      .def_readonly("lr", &EpochStats::lr)
      .def_readonly("flow_share", &EpochStats::flow_share)
      .def_readonly("coord_share", &EpochStats::coord_share);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_readonly("epochs", &TrainResult::epochs);

  m.def("train_flow",
        [](const std::vector<Scenario>& train, const SpectralBasis& b,
           const ModelConfig& mcfg, const TrainConfig& tcfg, int threads) {
          py::gil_scoped_release rel;
          return train_flow(train, b, mcfg, tcfg, threads, {});
        },
        py::arg("train"), py::arg("basis"), py::arg("model_config"),
        py::arg("train_config"), py::arg("threads") = 0);

  m.def("save_checkpoint",
        [](const std::string& path, const FlowModel& f, const SpectralBasis& b,
           const std::string& train_echo) {
          const ojson echo = train_echo.empty()
                                 ? ojson::object()
                                 : parse_json(train_echo, "train echo");
          save_checkpoint(path, f, basis_hash(b), echo);
        },
        py::arg("path"), py::arg("model"), py::arg("basis"),
        py::arg("train_echo") = std::string());

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_readonly("model", &Checkpoint::model)
      .def_readonly("basis_hash", &Checkpoint::basis_hash)
      .def_property_readonly("train_echo", [](const Checkpoint& c) {
        return c.train_echo.dump();
      });
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  py::class_<OdeOptions>(m, "OdeOptions")
      .def(py::init<>())
      .def_readwrite("steps", &OdeOptions::steps)
      .def_readwrite("trace", &OdeOptions::trace)
      .def_readwrite("probes", &OdeOptions::probes)
      .def_readwrite("probe_dist", &OdeOptions::probe_dist)
      .def_readwrite("probe_seed", &OdeOptions::probe_seed);

  py::class_<ScoreResult>(m, "ScoreResult")
      .def_readonly("log_likelihood", &ScoreResult::log_likelihood)
      .def_readonly("score", &ScoreResult::score)
      .def_readonly("z0_norm", &ScoreResult::z0_norm)
      .def_readonly("div_integral", &ScoreResult::div_integral)
      .def_readonly("trace_se", &ScoreResult::trace_se)
      .def_readonly("steps", &ScoreResult::steps)
      .def_readonly("method", &ScoreResult::method);

  m.def("score_batch",
        [](const FlowModel& f, const SpectralBasis& b,
           const std::vector<Scenario>& scenarios, const OdeOptions& opts,
           int threads) {
          py::gil_scoped_release rel;
          return score_batch(f, b, scenarios, opts, threads);
        },
        py::arg("model"), py::arg("basis"), py::arg("scenarios"),
        py::arg("options") = OdeOptions{}, py::arg("threads") = 0);

  py::class_<GoldenLabel>(m, "GoldenLabel")
      .def_readonly("is_critical", &GoldenLabel::is_critical)
      .def_property_readonly(
          "trigger",
          [](const GoldenLabel& g) { return std::string(trigger_name(g.trigger)); })
      .def_readonly("min_accel", &GoldenLabel::min_accel)
      .def_readonly("max_yaw_rate", &GoldenLabel::max_yaw_rate);

  m.def("golden_label",
        [](const c_array& future_m, double dt) {
          return golden_label(array_to_points(future_m), dt);
        },
        py::arg("future_m"), py::arg("dt") = kDt);

  m.def("auc_roc",
        [](const std::vector<double>& scores, const std::vector<bool>& labels) {
          if (scores.size() != labels.size())
            throw py::value_error("scores and labels must have equal length");
          std::vector<std::pair<double, bool>> pairs;
          pairs.reserve(scores.size());
          for (size_t i = 0; i < scores.size(); ++i)
            pairs.emplace_back(scores[i], labels[i]);
          const AucResult r = auc_roc(std::move(pairs));
          py::array_t<double> roc(
              {py::ssize_t(r.roc.size()), py::ssize_t(3)});
          auto w = roc.mutable_unchecked<2>();
          for (size_t i = 0; i < r.roc.size(); ++i) {
            w(py::ssize_t(i), 0) = r.roc[i].fpr;
            w(py::ssize_t(i), 1) = r.roc[i].tpr;
            w(py::ssize_t(i), 2) = r.roc[i].threshold;
          }
          return py::make_tuple(r.auc, roc);
        },
        py::arg("scores"), py::arg("labels"));

  m.def("default_config", [] { return serialize_run_config(RunConfig{}); });

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          int code = 0;
          {
            py::gil_scoped_release rel;
            code = run_cli(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}

}  // namespace specflow
