#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "selcov/coverage.hpp"
#include "selcov/mc_oracle.hpp"
#include "selcov/minimizer.hpp"
#include "selcov/quadrature.hpp"

namespace py = pybind11;
using namespace selcov;

namespace {

Scenario make_scenario(int m, double rho, double nominal_coverage, double test_size) {
  Scenario s{DegreesOfFreedom(m), rho, nominal_coverage, test_size};
  s.validate();
  return s;
}

py::dict breakdown_dict(const DeficitBreakdown& b) {
  py::dict d;
  d["gamma"] = b.gamma;
  d["p_accept"] = b.p_accept;
  d["p_J"] = b.p_J;
  d["p_J_and_accept"] = b.p_J_and_accept;
  d["p_I_and_accept"] = b.p_I_and_accept;
  d["d_wm"] = b.d_wm;
  d["d_rd"] = b.d_rd;
  d["coverage_K"] = b.coverage_K;
  d["coverage_K_star"] = b.coverage_K_star;
  return d;
}

py::dict min_dict(const MinResult& r) {
  py::dict d;
  d["gamma_star"] = r.gamma_star;
  d["min_coverage"] = r.min_coverage;
  d["at_gamma_max"] = r.at_gamma_max;
  d["breakdown"] = breakdown_dict(r.breakdown_at_min);
  d["refine_trace"] = r.refine_trace;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Coverage of confidence intervals after a preliminary t test";

  py::register_exception<QuadratureError>(mod, "QuadratureError", PyExc_RuntimeError);

  py::class_<Scenario>(mod, "Scenario")
      .def(py::init(&make_scenario), py::arg("m") = 40, py::arg("rho") = 0.0,
           py::arg("nominal_coverage") = 0.95, py::arg("test_size") = 0.1)
      .def_property_readonly("m", [](const Scenario& s) { return s.m.value(); })
      .def_readonly("rho", &Scenario::rho)
      .def_readonly("nominal_coverage", &Scenario::nominal_coverage)
      .def_readonly("test_size", &Scenario::test_size)
      .def("__repr__", [](const Scenario& s) {
        return py::str("Scenario(m={}, rho={}, nominal_coverage={}, test_size={})")
            .format(s.m.value(), s.rho, s.nominal_coverage, s.test_size);
      });

  py::class_<QuadratureConfig>(mod, "QuadratureConfig")
      .def(py::init([](double abs_tol, double rel_tol, int max_subdivisions) {
             QuadratureConfig c;
             c.abs_tol = abs_tol;
             c.rel_tol = rel_tol;
             c.max_subdivisions = max_subdivisions;
             c.validate();
             return c;
           }),
           py::arg("abs_tol") = 1e-9, py::arg("rel_tol") = 1e-8, py::arg("max_subdivisions") = 200)
      .def_readonly("abs_tol", &QuadratureConfig::abs_tol)
      .def_readonly("rel_tol", &QuadratureConfig::rel_tol)
      .def_readonly("max_subdivisions", &QuadratureConfig::max_subdivisions);

  mod.def(
      "deficits",
      [](const Scenario& s, double gamma, const QuadratureConfig& q) {
        return breakdown_dict(deficits(s, gamma, q));
      },
      py::arg("scenario"), py::arg("gamma"), py::arg("quadrature") = QuadratureConfig{},
      "Probabilities, deficits and coverages at one gamma.");

  mod.def(
      "sweep",
      [](const Scenario& s, std::vector<double> gammas, const QuadratureConfig& q) {
        const CoverageModel model(s, q);
        py::list rows;
        for (double g : gammas) rows.append(breakdown_dict(model.deficits(g)));
        return rows;
      },
      py::arg("scenario"), py::arg("gammas"), py::arg("quadrature") = QuadratureConfig{});

  mod.def(
      "min_coverage",
      [](const Scenario& s, double gamma_max, double coarse_step, unsigned threads,
         const QuadratureConfig& q) {
        MinSearchConfig search;
        search.gamma_max = gamma_max;
        search.coarse_step = coarse_step;
        search.threads = threads;
        MinResult r;
        {
          py::gil_scoped_release release;
          r = min_coverage(s, search, q);
        }
        return min_dict(r);
      },
      py::arg("scenario"), py::arg("gamma_max") = 15.0, py::arg("coarse_step") = 0.05,
      py::arg("threads") = 0, py::arg("quadrature") = QuadratureConfig{});

  mod.def(
      "simulate_reduced",
      [](const Scenario& s, double gamma, std::uint64_t replications, std::uint64_t seed,
         int streams) {
        MonteCarloConfig mc{replications, seed, streams};
        MCEstimates e;
        {
          py::gil_scoped_release release;
          e = simulate_reduced(s, gamma, mc);
        }
        py::dict d;
        d["replications"] = e.replications;
        for (const auto& f : kValidatedFields) {
          const Estimate& est = e.*(f.mc);
          d[f.name] = py::make_tuple(est.value, est.se);
        }
        return d;
      },
      py::arg("scenario"), py::arg("gamma"), py::arg("replications") = 1'000'000,
      py::arg("seed") = 42, py::arg("streams") = 1,
      "Monte Carlo (estimate, standard error) pairs for the validated fields.");

  mod.def("default_min_grid", &default_min_grid);
}
