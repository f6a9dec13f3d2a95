#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "kdvstab/critical.hpp"
#include "kdvstab/finitetime.hpp"
#include "kdvstab/runner.hpp"

namespace py = pybind11;
using namespace kdvstab;

PYBIND11_MODULE(_kdvstab, m) {
    m.doc() = "Gramian-based boundary feedback for the KdV equation: discretization, "
              "Gramian assembly, closed-loop and finite-time simulation";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    py::class_<Grid>(m, "Grid")
        .def_readonly("L", &Grid::L)
        .def_readonly("N", &Grid::N)
        .def_readonly("h", &Grid::h)
        .def_readonly("nodes", &Grid::nodes)
        .def("norm", &Grid::norm)
        .def("grad_norm", &Grid::grad_norm);

    py::class_<Generator>(m, "Generator")
        .def_readonly("grid", &Generator::grid)
        .def_readonly("A", &Generator::A)
        .def_readonly("b", &Generator::b)
        .def_readonly("D1", &Generator::D1)
        .def_readonly("antisym_defect", &Generator::antisym_defect)
        .def_readonly("scheme_order", &Generator::scheme_order);

    m.def("build_grid", &build_grid, py::arg("L"), py::arg("N"));
    m.def("build_generator", &build_generator, py::arg("grid"));
    m.def(
        "interpolation_bound_check",
        [](const Grid& g, const Eigen::VectorXd& w) {
            auto r = interpolation_bound_check(g, w);
            return std::make_pair(r.lhs, r.rhs);
        },
        py::arg("grid"), py::arg("w"));

    py::class_<PropagatorConfig>(m, "PropagatorConfig")
        .def(py::init<>())
        .def_readwrite("dt", &PropagatorConfig::dt)
        .def_readwrite("solver_tol", &PropagatorConfig::solver_tol);

    py::class_<TraceSeries>(m, "TraceSeries")
        .def_readonly("times", &TraceSeries::times)
        .def_readonly("values", &TraceSeries::values)
        .def_readonly("midpoint_values", &TraceSeries::midpoint_values)
        .def("squared_integral", &TraceSeries::squared_integral);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("times", &Trajectory::times)
        .def_readonly("states", &Trajectory::states);

    m.def("default_dt", &default_dt, py::arg("h"), py::arg("lambda_"));
    m.def("step_linear", &step_linear, py::arg("gen"), py::arg("state"), py::arg("dt"),
          py::arg("lambda_"), py::arg("u"), py::arg("source"));
    m.def("propagate", &propagate, py::arg("gen"), py::arg("z0"), py::arg("T"), py::arg("cfg"));
    m.def("admissibility_constant", &admissibility_constant, py::arg("gen"), py::arg("T"),
          py::arg("samples"), py::arg("cfg"), py::arg("seed") = 0x9E3779B97F4A7C15ull);

    py::class_<Gramian>(m, "Gramian")
        .def_readonly("Q", &Gramian::Q)
        .def_readonly("lambda_", &Gramian::lambda)
        .def_readonly("horizon", &Gramian::horizon);

    m.def("assemble_quadrature", &assemble_quadrature, py::arg("gen"), py::arg("lambda_"),
          py::arg("tol"), py::arg("cfg"));
    m.def("assemble_sylvester", &assemble_sylvester, py::arg("gen"), py::arg("lambda_"));
    m.def("lyapunov_residual", &lyapunov_residual, py::arg("gen"), py::arg("gramian"));
    m.def(
        "invert",
        [](const Gramian& G, double cond_limit) {
            auto inv = invert(G, cond_limit);
            return std::make_pair(inv.Qinv, inv.cond);
        },
        py::arg("gramian"), py::arg("cond_limit") = 1e12);

    m.def("nonlinear_cross", &nonlinear_cross, py::arg("gen"), py::arg("y"), py::arg("v"));
    m.def("nonlinear_self", &nonlinear_self, py::arg("gen"), py::arg("y"));

    py::class_<RunReport>(m, "RunReport")
        .def_readonly("times", &RunReport::times)
        .def_readonly("norm_y", &RunReport::norm_y)
        .def_readonly("norm_ytilde", &RunReport::norm_ytilde)
        .def_readonly("envelope", &RunReport::envelope)
        .def_readonly("identity_error", &RunReport::identity_error)
        .def_readonly("z_norm", &RunReport::z_norm)
        .def_readonly("u", &RunReport::u)
        .def_readonly("xT_norm", &RunReport::xT_norm);

    py::class_<LoopOptions>(m, "LoopOptions")
        .def(py::init<>())
        .def_readwrite("enforce_guard", &LoopOptions::enforce_guard)
        .def_readwrite("eps_proxy", &LoopOptions::eps_proxy)
        .def_readwrite("cond_limit", &LoopOptions::cond_limit);

    m.def("simulate_static", &simulate_static, py::arg("gen"), py::arg("y0"), py::arg("gramian"),
          py::arg("T"), py::arg("cfg"), py::arg("opts") = LoopOptions{});
    m.def("simulate_dynamic", &simulate_dynamic, py::arg("gen"), py::arg("y0"),
          py::arg("ytilde0"), py::arg("gramian"), py::arg("lambda1"), py::arg("c0"), py::arg("T"),
          py::arg("cfg"), py::arg("opts") = LoopOptions{});
    m.def("simulate_linear", &simulate_linear, py::arg("gen"), py::arg("y0"), py::arg("T"),
          py::arg("cfg"));
    m.def(
        "decay_report",
        [](const RunReport& r, double lambda, double slack) {
            auto d = decay_report(r, lambda, slack);
            return std::make_pair(d.fitted_rate, d.envelope_violations);
        },
        py::arg("report"), py::arg("lambda_"), py::arg("slack") = 0.1);

    py::class_<Schedule>(m, "Schedule")
        .def_readonly("T", &Schedule::T)
        .def_readonly("t", &Schedule::t)
        .def_readonly("lambda_", &Schedule::lambda)
        .def_readonly("lambda1", &Schedule::lambda1)
        .def_readonly("s", &Schedule::s)
        .def_readonly("n_max", &Schedule::n_max);

    py::class_<ScheduleFamily>(m, "ScheduleFamily")
        .def(py::init<>())
        .def_readwrite("lambda_base", &ScheduleFamily::lambda_base)
        .def_readwrite("c", &ScheduleFamily::c)
        .def_readwrite("margin", &ScheduleFamily::margin);

    m.def("build_schedule", &build_schedule, py::arg("T"), py::arg("n_max"),
          py::arg("family") = ScheduleFamily{});

    py::class_<CriticalEntry>(m, "CriticalEntry")
        .def_readonly("k", &CriticalEntry::k)
        .def_readonly("l", &CriticalEntry::l)
        .def_readonly("L", &CriticalEntry::L);

    py::class_<CriticalSet>(m, "CriticalSet")
        .def_readonly("entries", &CriticalSet::entries)
        .def_readonly("k_max", &CriticalSet::k_max);

    m.def("enumerate_critical_lengths", &enumerate_critical_lengths, py::arg("k_max"));
    m.def(
        "is_critical",
        [](double L, int k_max, double tol) {
            auto q = is_critical(L, k_max, tol);
            return py::make_tuple(q.is_critical, q.nearest.L, q.distance);
        },
        py::arg("L"), py::arg("k_max"), py::arg("tol"));
    m.def(
        "uncontrollable_mode_probe",
        [](double L, int N) {
            auto p = uncontrollable_mode_probe(L, N);
            return py::make_tuple(p.eigenvalues_imag, p.couplings, p.min_coupling,
                                  p.median_coupling);
        },
        py::arg("L"), py::arg("N"));
}
