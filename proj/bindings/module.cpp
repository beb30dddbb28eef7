// Python bindings for the steam-flow control study: plant simulation,
// identification, controller training, closed-loop scenarios, and the
// table-reproduction harness.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "steamflow/harness.hpp"
#include "steamflow/plant.hpp"

namespace py = pybind11;
using namespace steamflow;

PYBIND11_MODULE(_steamflow, m) {
  m.doc() = "Neural process-control study of a steam-flow valve plant";

  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
  py::register_exception<ControllerFault>(m, "ControllerFault",
                                          PyExc_RuntimeError);

  // --- plant -----------------------------------------------------------
  py::class_<ActuatorParams>(m, "ActuatorParams")
      .def(py::init<>())
      .def_readwrite("inductance_L", &ActuatorParams::inductance_L)
      .def_readwrite("resistance_R", &ActuatorParams::resistance_R)
      .def_readwrite("mass_m", &ActuatorParams::mass_m)
      .def_readwrite("damper_D", &ActuatorParams::damper_D)
      .def_readwrite("spring_k", &ActuatorParams::spring_k)
      .def_readwrite("relay_km", &ActuatorParams::relay_km)
      .def_readwrite("sensor_p", &ActuatorParams::sensor_p);

  py::class_<TransferFunction>(m, "TransferFunction")
      .def_readonly("numerator", &TransferFunction::numerator)
      .def_readonly("denominator", &TransferFunction::denominator);

  m.def("build_transfer_function", &build_transfer_function,
        py::arg("params") = ActuatorParams{});

  py::class_<DiscretePlant>(m, "DiscretePlant")
      .def("step", &DiscretePlant::step, py::arg("u"))
      .def("output", &DiscretePlant::output)
      .def("reset", &DiscretePlant::reset)
      .def_readonly("sample_time", &DiscretePlant::sample_time);

  m.def("make_paper_plant", &make_paper_plant, py::arg("sample_time") = 0.1);

  // --- identification ---------------------------------------------------
  py::class_<ExcitationConfig>(m, "ExcitationConfig")
      .def(py::init<>())
      .def_readwrite("u_min", &ExcitationConfig::u_min)
      .def_readwrite("u_max", &ExcitationConfig::u_max)
      .def_readwrite("interval_min", &ExcitationConfig::interval_min)
      .def_readwrite("interval_max", &ExcitationConfig::interval_max)
      .def_readwrite("total_segments", &ExcitationConfig::total_segments)
      .def_readwrite("sample_time", &ExcitationConfig::sample_time)
      .def_readwrite("seed", &ExcitationConfig::seed);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("u", &Dataset::u)
      .def_readwrite("y", &Dataset::y)
      .def_readwrite("sample_time", &Dataset::sample_time);

  m.def("generate_excitation", &generate_excitation, py::arg("config"));
  m.def("collect_dataset", &collect_dataset, py::arg("config"),
        py::arg("plant"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<IdentifyOptions>(m, "IdentifyOptions")
      .def(py::init<>())
      .def_readwrite("hidden", &IdentifyOptions::hidden)
      .def_readwrite("regularize_g", &IdentifyOptions::regularize_g)
      .def_readwrite("g_target", &IdentifyOptions::g_target);

  py::class_<NarxModel>(m, "NarxModel")
      .def("predict", &NarxModel::predict, py::arg("y_hist"), py::arg("u_hist"))
      .def_readonly("validation_rmse", &NarxModel::validation_rmse)
      .def_readonly("output_range", &NarxModel::output_range)
      .def_readonly("input_delays", &NarxModel::input_delays)
      .def_readonly("output_delays", &NarxModel::output_delays);

  py::class_<NarmaL2Model>(m, "NarmaL2Model")
      .def("predict", &NarmaL2Model::predict, py::arg("y_hist"),
           py::arg("u_hist"), py::arg("u_now"))
      .def_readonly("validation_rmse", &NarmaL2Model::validation_rmse)
      .def_readonly("output_range", &NarmaL2Model::output_range);

  m.def("identify_narx", &identify_narx, py::arg("data"), py::arg("config"),
        py::arg("options") = IdentifyOptions{});
  m.def("identify_narma_l2", &identify_narma_l2, py::arg("data"),
        py::arg("config"), py::arg("options") = IdentifyOptions{});

  // --- signals and metrics ----------------------------------------------
  py::enum_<ReferenceKind>(m, "ReferenceKind")
      .value("step", ReferenceKind::step)
      .value("sine", ReferenceKind::sine);

  py::class_<ReferenceSignal>(m, "ReferenceSignal")
      .def(py::init<>())
      .def_readwrite("kind", &ReferenceSignal::kind)
      .def_readwrite("amplitude", &ReferenceSignal::amplitude)
      .def_readwrite("start_time", &ReferenceSignal::start_time)
      .def_readwrite("frequency", &ReferenceSignal::frequency)
      .def_readwrite("phase", &ReferenceSignal::phase);

  py::class_<NoiseConfig>(m, "NoiseConfig")
      .def(py::init<>())
      .def_readwrite("enabled", &NoiseConfig::enabled)
      .def_readwrite("amplitude", &NoiseConfig::amplitude)
      .def_readwrite("correlation_time", &NoiseConfig::correlation_time)
      .def_readwrite("seed", &NoiseConfig::seed);

  py::class_<StepMetrics>(m, "StepMetrics")
      .def_readonly("rise_time", &StepMetrics::rise_time)
      .def_readonly("overshoot_pct", &StepMetrics::overshoot_pct)
      .def_readonly("settling_time", &StepMetrics::settling_time)
      .def_readonly("steady_state", &StepMetrics::steady_state);

  py::class_<TrackMetrics>(m, "TrackMetrics")
      .def_readonly("peak_value", &TrackMetrics::peak_value);

  m.def(
      "step_metrics",
      [](const std::vector<double>& t, const std::vector<double>& y,
         double target) { return step_metrics(t, y, target); },
      py::arg("t"), py::arg("y"), py::arg("target"));
  m.def("track_metrics", &track_metrics, py::arg("y"));

  // --- closed-loop harness ------------------------------------------------
  py::enum_<ControllerKind>(m, "ControllerKind")
      .value("narma_l2", ControllerKind::narma_l2)
      .value("model_reference", ControllerKind::model_reference)
      .value("nn_predictive", ControllerKind::nn_predictive);

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("controller", &Scenario::controller)
      .def_readwrite("reference", &Scenario::reference)
      .def_readwrite("noise", &Scenario::noise)
      .def_readwrite("duration", &Scenario::duration)
      .def_readwrite("sample_time", &Scenario::sample_time)
      .def_readwrite("seed", &Scenario::seed);

  py::class_<ControllerBundle>(m, "ControllerBundle")
      .def_readonly("narx", &ControllerBundle::narx)
      .def_readonly("narma", &ControllerBundle::narma)
      .def_readonly("u_lo", &ControllerBundle::u_lo)
      .def_readonly("u_hi", &ControllerBundle::u_hi);

  py::class_<RunRecord>(m, "RunRecord")
      .def_readonly("t", &RunRecord::t)
      .def_readonly("r", &RunRecord::r)
      .def_readonly("y_true", &RunRecord::y_true)
      .def_readonly("y_measured", &RunRecord::y_measured)
      .def_readonly("u", &RunRecord::u)
      .def_readonly("has_step", &RunRecord::has_step)
      .def_readonly("step", &RunRecord::step)
      .def_readonly("has_track", &RunRecord::has_track)
      .def_readonly("track", &RunRecord::track)
      .def_readonly("metrics_error", &RunRecord::metrics_error)
      .def_readonly("fault", &RunRecord::fault)
      .def_readonly("fault_message", &RunRecord::fault_message);

  m.def(
      "train_bundle", [](std::uint64_t seed) { return train_bundle(seed); },
      py::arg("seed"), py::call_guard<py::gil_scoped_release>());
  m.def("run_scenario", &run_scenario, py::arg("scenario"), py::arg("bundle"),
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "reproduce_tables",
      [](const std::vector<std::uint64_t>& seeds) {
        return reproduce_tables(seeds);
      },
      py::arg("seeds"), py::call_guard<py::gil_scoped_release>());

  m.def("save_bundle", &save_bundle, py::arg("bundle"), py::arg("directory"));
  m.def("load_bundle", &load_bundle, py::arg("directory"));
  m.def(
      "run_csv",
      [](const RunRecord& rec) {
        std::ostringstream os;
        emit_csv(rec, os);
        return os.str();
      },
      py::arg("record"));
  m.def(
      "run_svg",
      [](const RunRecord& rec) {
        std::ostringstream os;
        emit_plot(rec, os);
        return os.str();
      },
      py::arg("record"));
}
