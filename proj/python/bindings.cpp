#include "regobs/config.hpp"
#include "regobs/errors.hpp"
#include "regobs/harness.hpp"
#include "regobs/observer.hpp"
#include "regobs/region.hpp"
#include "regobs/sensing.hpp"
#include "regobs/spectral.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace regobs;

namespace {

ModeSet to_modes(const std::vector<std::pair<int, int>>& pairs) {
  std::vector<ModeIndex> m;
  m.reserve(pairs.size());
  for (auto [i, j] : pairs) m.push_back({i, j});
  return ModeSet(std::move(m));
}

std::vector<std::pair<int, int>> from_modes(const ModeSet& modes) {
  std::vector<std::pair<int, int>> out;
  for (const auto& m : modes) out.emplace_back(m.i, m.j);
  return out;
}

}  // namespace

PYBIND11_MODULE(_regobs, m) {
  m.doc() = "Regional observers for coupled parabolic systems";
  m.attr("__version__") = REGOBS_VERSION;

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<InapplicableError>(m, "InapplicableError", base.ptr());
  py::register_exception<FitError>(m, "FitError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<NotDetectable>(m, "NotDetectable", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());

  py::class_<Point>(m, "Point")
      .def(py::init<double, double>(), py::arg("x1"), py::arg("x2"))
      .def_readwrite("x1", &Point::x1)
      .def_readwrite("x2", &Point::x2);

  py::class_<Domain>(m, "Domain")
      .def(py::init([](double a1, double b1, double a2, double b2) {
             Domain d{a1, b1, a2, b2};
             d.validate();
             return d;
           }),
           py::arg("alpha1") = 0.0, py::arg("beta1") = 1.0, py::arg("alpha2") = 0.0,
           py::arg("beta2") = 1.0)
      .def_readonly("alpha1", &Domain::alpha1)
      .def_readonly("beta1", &Domain::beta1)
      .def_readonly("alpha2", &Domain::alpha2)
      .def_readonly("beta2", &Domain::beta2);

  py::class_<Coefficients>(m, "Coefficients")
      .def(py::init([](double a, double g, double b) {
             Coefficients c{a, g, b};
             c.validate();
             return c;
           }),
           py::arg("alpha_diff") = 1.0, py::arg("gamma_diff") = 0.1,
           py::arg("beta_couple") = 1.0)
      .def_readonly("alpha_diff", &Coefficients::alpha_diff)
      .def_readonly("gamma_diff", &Coefficients::gamma_diff)
      .def_readonly("beta_couple", &Coefficients::beta_couple);

  m.def("truncated_modes", [](int n) { return from_modes(ModeSet::truncated(n)); },
        py::arg("n"));
  m.def("eigenvalue",
        [](int i, int j, const Domain& d) { return eigenvalue({i, j}, d); },
        py::arg("i"), py::arg("j"), py::arg("domain") = Domain{});
  m.def("eigenfunction",
        [](int i, int j, double x1, double x2, const Domain& d) {
          return eigenfunction({i, j}, d, {x1, x2});
        },
        py::arg("i"), py::arg("j"), py::arg("x1"), py::arg("x2"),
        py::arg("domain") = Domain{});

  py::class_<ModalModel>(m, "ModalModel")
      .def_property_readonly("modes", [](const ModalModel& mm) { return from_modes(mm.modes); })
      .def_readonly("eigenvalues", &ModalModel::eigenvalues)
      .def_readonly("a11", &ModalModel::a11)
      .def_readonly("a12", &ModalModel::a12)
      .def_readonly("a21", &ModalModel::a21)
      .def_readonly("a22", &ModalModel::a22)
      .def("stacked", &ModalModel::stacked);
  m.def("assemble_exchange_model",
        [](const Coefficients& c, const Domain& d, int n) {
          return assemble_exchange_model(c, d, ModeSet::truncated(n));
        },
        py::arg("coefficients"), py::arg("domain"), py::arg("n_modes"));
  m.def("propagate",
        [](const Matrix& a, const Vector& x0, double dt, int steps) {
          return propagate(a, x0, dt, steps);
        },
        py::arg("a"), py::arg("x0"), py::arg("dt"), py::arg("steps"));

  py::class_<SensorSpec>(m, "SensorSpec")
      .def_static("pointwise",
                  [](double x1, double x2) { return SensorSpec::pointwise({x1, x2}); },
                  py::arg("x1"), py::arg("x2"))
      .def_static("zone",
                  [](double lo1, double hi1, double lo2, double hi2, bool sine) {
                    return SensorSpec::zone(
                        {lo1, hi1, lo2, hi2},
                        sine ? WeightKind::SeparableSine : WeightKind::Uniform);
                  },
                  py::arg("lo1"), py::arg("hi1"), py::arg("lo2"), py::arg("hi2"),
                  py::arg("sine_weight") = false)
      .def_property_readonly("is_zone", &SensorSpec::is_zone);

  m.def("output_matrix",
        [](const std::vector<SensorSpec>& s, int n, const Domain& d) {
          return output_matrix(s, ModeSet::truncated(n), d);
        },
        py::arg("sensors"), py::arg("n_modes"), py::arg("domain") = Domain{});

  py::class_<StrategicReport>(m, "StrategicReport")
      .def_property_readonly("strategic", &StrategicReport::strategic)
      .def_readonly("sensors", &StrategicReport::sensors)
      .def_readonly("max_multiplicity", &StrategicReport::max_multiplicity)
      .def_property_readonly("groups",
                             [](const StrategicReport& r) { return r.blocks.size(); })
      .def_property_readonly("offending_modes", [](const StrategicReport& r) {
        std::vector<std::vector<std::size_t>> out;
        for (auto k : r.offending) out.push_back(r.blocks[k].group.columns);
        return out;
      });
  m.def("strategic_rank_test",
        [](const Matrix& c, const ModalModel& mm, double tol_group, double tol_rank) {
          const auto groups = group_modes_by_eigenvalue(mm, Block::A22, tol_group);
          return strategic_rank_test(c, groups, tol_rank);
        },
        py::arg("c"), py::arg("model"), py::arg("tol_group") = 1e-9,
        py::arg("tol_rank") = 1e-10);
  m.def("observability_gramian", &observability_gramian, py::arg("m"), py::arg("obs"),
        py::arg("horizon"), py::arg("n_quad") = 16);
  m.def("pointwise_predicate",
        [](double x1, double x2, int n, const Domain& d) {
          const auto modes = ModeSet::truncated(n);
          const auto r = nonstrategic_pointwise_predicate(SensorSpec::pointwise({x1, x2}),
                                                          d, modes);
          return from_modes(ModeSet(r.modes));
        },
        py::arg("x1"), py::arg("x2"), py::arg("n_modes"), py::arg("domain") = Domain{});

  py::enum_<GainMethod>(m, "GainMethod")
      .value("LyapunovShift", GainMethod::LyapunovShift)
      .value("LeastSquares", GainMethod::LeastSquares);
  py::class_<ObserverGain>(m, "ObserverGain")
      .def_readonly("h", &ObserverGain::h)
      .def_readonly("closed_loop_eigs", &ObserverGain::closed_loop_eigs)
      .def_property_readonly("unstable",
                             [](const ObserverGain& g) { return g.split.dimension(); })
      .def("max_closed_loop_real", &ObserverGain::max_closed_loop_real);
  m.def("reduced_observation", &reduced_observation, py::arg("model"), py::arg("c"));
  m.def("design_gain",
        [](const Matrix& block, const Matrix& obs, double target, double margin,
           GainMethod method) {
          const auto split = split_unstable_stable(block, margin);
          return design_gain(block, obs, split, target, method);
        },
        py::arg("block"), py::arg("obs"), py::arg("target_margin") = 1.0,
        py::arg("margin") = 0.0, py::arg("method") = GainMethod::LyapunovShift);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("times", &Trajectory::times)
      .def_readonly("error", &Trajectory::error)
      .def_readonly("err_gamma", &Trajectory::err_gamma);
  m.def("simulate_reduced_order",
        [](const ModalModel& mm, const Matrix& c, const ObserverGain& g, const Vector& x0,
           double dt, double horizon) {
          return simulate_reduced_order(mm, c, g, zero_input(mm.inputs()), x0,
                                        Vector::Zero(mm.size()), {dt, horizon});
        },
        py::arg("model"), py::arg("c"), py::arg("gain"), py::arg("x0"),
        py::arg("dt") = 0.01, py::arg("horizon") = 5.0);

  py::class_<DecayFit>(m, "DecayFit")
      .def_readonly("amplitude", &DecayFit::amplitude)
      .def_readonly("rate", &DecayFit::rate)
      .def_readonly("residual", &DecayFit::residual)
      .def_readonly("points", &DecayFit::points);
  m.def("fit_decay",
        [](const std::vector<double>& t, const std::vector<double>& v, double lo,
           double hi) { return fit_decay(t, v, lo, hi); },
        py::arg("t"), py::arg("v"), py::arg("t_lo"), py::arg("t_hi"));

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readonly("n_modes", &ExperimentConfig::n_modes)
      .def("to_text", [](const ExperimentConfig& c) { return to_text(c); })
      .def("__eq__", [](const ExperimentConfig& a, const ExperimentConfig& b) { return a == b; });
  m.def("parse_config", &parse_config, py::arg("text"));

  py::class_<RunReport>(m, "RunReport")
      .def_readonly("strategic", &RunReport::strategic)
      .def_readonly("manifest", &RunReport::manifest)
      .def_property_readonly("not_detectable",
                             [](const RunReport& r) { return r.primary().gain.not_detectable; })
      .def_property_readonly("decay_rate",
                             [](const RunReport& r) -> std::optional<double> {
                               if (!r.primary().fit) return std::nullopt;
                               return r.primary().fit->rate;
                             })
      .def_property_readonly("err_gamma", [](const RunReport& r) {
        return r.primary().trajectory.err_gamma;
      });
  m.def("run_pipeline", &run_pipeline, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_experiment", &run_experiment, py::arg("config"), py::arg("out_dir"),
        py::call_guard<py::gil_scoped_release>());
  m.def("placement_sweep_csv",
        [](const ExperimentConfig& c, int grid) { return sweep_csv(placement_sweep(c, grid)); },
        py::arg("config"), py::arg("grid_n"), py::call_guard<py::gil_scoped_release>());
}
