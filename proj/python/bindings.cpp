#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <variant>
#include <vector>

#include "reluinit/combinatorics.hpp"
#include "reluinit/error.hpp"
#include "reluinit/experiment.hpp"
#include "reluinit/moments.hpp"
#include "reluinit/netsim.hpp"
#include "reluinit/report_io.hpp"

namespace py = pybind11;
using namespace reluinit;

namespace {

using ScheduleArg = std::variant<std::string, std::vector<double>>;

InitSchedule to_schedule(const NetworkShape& shape, const ScheduleArg& arg) {
  if (const auto* betas = std::get_if<std::vector<double>>(&arg)) {
    InitSchedule sched(*betas);
    require_compatible(shape, sched);
    return sched;
  }
  return ScheduleSpec::parse(std::get<std::string>(arg)).resolve(shape);
}

py::dict prediction_dict(const MomentPrediction& p) {
  py::dict d;
  d["k"] = p.k;
  d["s_k"] = p.s_k;
  d["first_moment_exact"] = p.first_moment_exact;
  d["first_moment_lo"] = p.first_moment_lo;
  d["first_moment_hi"] = p.first_moment_hi;
  d["second_moment"] = p.second_moment;
  d["variance_lo"] = p.variance_lo;
  d["variance_hi"] = p.variance_hi;
  d["variance_lower_vacuous"] = p.variance_lower_vacuous;
  d["backward_variance"] = p.backward_variance;
  d["width_condition"] = p.width_condition;
  return d;
}

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

ExperimentConfig config_from(const py::dict& options) {
  ExperimentConfig config;
  for (const auto& [key, value] : options) {
    set_config_value(config, py::str(key).cast<std::string>(),
                     py::str(value).cast<std::string>());
  }
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Closed-form moments of ReLU networks at initialization";

  py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<domain_error>(m, "DomainError", PyExc_ValueError);
  py::register_exception<insufficient_data_error>(m, "InsufficientDataError",
                                                  PyExc_RuntimeError);

  m.def("log_gamma", &log_gamma, py::arg("x"));
  m.def("gautschi_ratio", &gautschi_ratio, py::arg("i"));
  m.def("norm_growth_factor", &norm_growth_factor, py::arg("n"));
  m.def(
      "binomial_sums",
      [](std::uint64_t n, std::uint64_t threshold) {
        const auto s = binomial_sums(n, threshold);
        py::dict d;
        d["n"] = s.n;
        d["a_log2"] = s.a_n.log2();
        d["b_log2"] = s.b_n.log2();
        d["a"] = s.a_n.value();
        d["b"] = s.b_n.value();
        d["scaled"] = s.a_n.is_scaled();
        return d;
      },
      py::arg("n"), py::arg("threshold") = kOverflowThreshold);

  m.def(
      "schedule",
      [](const std::vector<std::size_t>& shape, const ScheduleArg& schedule) {
        const NetworkShape s(shape);
        const auto sched = to_schedule(s, schedule);
        return std::vector<double>(sched.betas().begin(), sched.betas().end());
      },
      py::arg("shape"), py::arg("schedule") = "fan-in");

  m.def(
      "predict",
      [](const std::vector<std::size_t>& shape, const ScheduleArg& schedule, double x_norm,
         double eps, double width_c) {
        const NetworkShape s(shape);
        py::list out;
        for (const auto& p : predict_all(s, to_schedule(s, schedule), x_norm, eps, width_c)) {
          out.append(prediction_dict(p));
        }
        return out;
      },
      py::arg("shape"), py::arg("schedule") = "fan-in", py::arg("x_norm") = 1.0,
      py::arg("eps") = 0.5, py::arg("width_c") = kDefaultWidthConstant);

  m.def(
      "first_moment",
      [](const std::vector<std::size_t>& shape, const ScheduleArg& schedule, double x_norm,
         std::size_t k) {
        const NetworkShape s(shape);
        return first_moment_exact(s, to_schedule(s, schedule), x_norm, k);
      },
      py::arg("shape"), py::arg("schedule"), py::arg("x_norm"), py::arg("k"));

  m.def(
      "second_moment",
      [](const std::vector<std::size_t>& shape, const ScheduleArg& schedule, double x_norm,
         std::size_t k) {
        const NetworkShape s(shape);
        return second_moment(s, to_schedule(s, schedule), x_norm, k);
      },
      py::arg("shape"), py::arg("schedule"), py::arg("x_norm"), py::arg("k"));

  m.def(
      "backward_variance",
      [](const std::vector<std::size_t>& shape, const ScheduleArg& schedule, std::size_t k) {
        const NetworkShape s(shape);
        return backward_variance(s, to_schedule(s, schedule), k);
      },
      py::arg("shape"), py::arg("schedule"), py::arg("k"));

  m.def(
      "sample_weights",
      [](const std::vector<std::size_t>& shape, const ScheduleArg& schedule,
         std::uint64_t seed) {
        const NetworkShape s(shape);
        py::list out;
        for (const auto& w : sample_weights(s, to_schedule(s, schedule), seed).layers) {
          out.append(to_array(w));
        }
        return out;
      },
      py::arg("shape"), py::arg("schedule") = "fan-in", py::arg("seed") = 0);

  m.def(
      "forward_backward",
      [](const std::vector<std::size_t>& shape, const ScheduleArg& schedule, std::uint64_t seed,
         const std::vector<double>& x) {
        const NetworkShape s(shape);
        const auto weights = sample_weights(s, to_schedule(s, schedule), seed);
        const auto trace = forward(weights, x);
        py::dict d;
        d["activations"] = trace.post;
        d["preactivations"] = trace.pre;
        d["output"] = trace.output();
        d["deltas"] = output_gradient_full(weights, trace);
        return d;
      },
      py::arg("shape"), py::arg("schedule"), py::arg("seed"), py::arg("x"));

  m.def(
      "verify_json",
      [](const py::dict& options) {
        const auto config = config_from(options);
        const auto report = [&] {
          py::gil_scoped_release release;
          return run_verify(config);
        }();
        return dump_json(to_json(report));
      },
      py::arg("options"), "Runs a verification; options use the config-file keys.");

  m.def(
      "predict_json",
      [](const py::dict& options) { return dump_json(to_json(run_predict(config_from(options)))); },
      py::arg("options"));

  m.def(
      "bounds_json",
      [](std::uint64_t n_max, std::uint64_t i_max, std::uint64_t t_samples, std::uint64_t seed) {
        BoundsConfig config;
        config.n_max = n_max;
        config.i_max = i_max;
        config.t_samples = t_samples;
        config.seed = seed;
        const auto report = [&] {
          py::gil_scoped_release release;
          return run_bounds(config);
        }();
        return dump_json(to_json(report));
      },
      py::arg("n_max") = 200, py::arg("i_max") = 10000, py::arg("t_samples") = 100000,
      py::arg("seed") = 0);
}
