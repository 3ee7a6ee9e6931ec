#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hoep/acceptance.hpp"
#include "hoep/gaussian.hpp"
#include "hoep/metrology.hpp"
#include "hoep/model.hpp"
#include "hoep/perturb.hpp"
#include "hoep/scenario.hpp"
#include "hoep/spectral.hpp"

namespace py = pybind11;
using namespace hoep;

namespace {

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "higher-order exceptional point sensing";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<RegimeError>(m, "RegimeError", PyExc_ValueError);
    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
    py::register_exception<Unsupported>(m, "Unsupported", PyExc_NotImplementedError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<SystemConfig>(m, "SystemConfig")
        .def(py::init<>())
        .def_readwrite("n", &SystemConfig::n)
        .def_readwrite("m", &SystemConfig::m)
        .def_readwrite("g", &SystemConfig::g)
        .def_readwrite("kappa", &SystemConfig::kappa)
        .def_readwrite("delta", &SystemConfig::delta)
        .def_readwrite("epsilon", &SystemConfig::epsilon)
        .def_readwrite("gamma", &SystemConfig::gamma)
        .def_readwrite("Gamma", &SystemConfig::Gamma)
        .def_readwrite("alpha", &SystemConfig::alpha)
        .def("validate", &SystemConfig::validate);

    m.def("ep3_sensor", &ep3_sensor, py::arg("g"), py::arg("kappa") = 1.0, py::arg("alpha") = 0.0,
          py::arg("gamma") = 0.0, py::arg("Gamma") = 0.0);
    m.def("ep4_config", &ep4_config, py::arg("f"));
    m.def("ep4_locus", [](double f) {
        const Ep4Point p = ep4_locus(f);
        return py::dict(py::arg("delta1") = p.delta1, py::arg("delta2") = p.delta2, py::arg("delta3") = p.delta3,
                        py::arg("g") = p.g, py::arg("lambda_") = p.lambda);
    });
    m.def("dynamical_matrix", [](const SystemConfig& c) { return build_system(c).reduced; });
    m.def("irreducible", [](const SystemConfig& c) { return check_irreducibility(c).pass; });

    m.def(
        "eigensolve",
        [](const SystemConfig& c, double cluster_tol) {
            SpectralOptions o;
            o.cluster_tol = cluster_tol;
            const Spectrum s = eigensolve(build_system(c), o);
            return py::dict(py::arg("eigenvalues") = s.eigenvalues, py::arg("phase") = to_string(s.phase),
                            py::arg("ep_order") = s.ep_order, py::arg("ep_value") = s.ep_value,
                            py::arg("chi") = s.chi);
        },
        py::arg("config"), py::arg("cluster_tol") = 1e-6);
    m.def("cubic_discriminant", [](const SystemConfig& c) {
        const CubicDiscriminant d = cubic_discriminant(c);
        return py::make_tuple(d.x, d.y, d.D);
    });
    m.def(
        "puiseux_slope",
        [](const SystemConfig& c, const std::vector<double>& eps, const std::string& pc) {
            return puiseux_fit(c, eps, perturbation_direction(c, parse_perturbation_case(pc))).slope;
        },
        py::arg("config"), py::arg("eps"), py::arg("perturbation") = "same");

    m.def(
        "evolve",
        [](const SystemConfig& c, double t) {
            const GaussianState s =
                c.lossless() ? evolve(coherent_init(c), propagator(c, t)) : evolve_lossy(coherent_init(c), c, t);
            return py::make_tuple(s.mu, s.Lambda);
        },
        py::arg("config"), py::arg("t"), "Mean vector and covariance after time t from the coherent initial state.");

    m.def(
        "sensitivity",
        [](double g, double alpha, double chi_t, const std::string& observable, double gamma, double Gamma,
           double eta) {
            const SensorModel model = ep3_sensor_model(g, alpha, gamma, Gamma, eta);
            const double t = chi_t / sensor_chi(model);
            SensitivityOptions o;
            o.with_qfi = gamma == 0.0 && Gamma == 0.0;
            const SensitivityReport r = sensitivity(model, parse_observable(observable, 3), t, o);
            return py::dict(py::arg("t") = r.t, py::arg("chi") = r.chi, py::arg("susceptibility") = r.susceptibility,
                            py::arg("noise_var") = r.noise_var, py::arg("delta_eps") = r.delta_eps,
                            py::arg("qfi") = r.qfi, py::arg("qcrb") = r.qcrb, py::arg("sql") = r.sql,
                            py::arg("valid_regime") = r.valid_regime);
        },
        py::arg("g"), py::arg("alpha"), py::arg("chi_t") = 2 * M_PI, py::arg("observable") = "x1_minus_x2",
        py::arg("gamma") = 0.0, py::arg("Gamma") = 0.0, py::arg("eta") = 1.0);

    m.def(
        "run_scenario",
        [](const std::string& text, const std::string& name) {
            const RunResult r = run_scenario(parse_scenario(text, name));
            py::dict out;
            out["csv"] = render_csv(r);
            out["metrics"] = r.metrics;
            out["passed"] = r.passed();
            return out;
        },
        py::arg("text"), py::arg("name") = "scenario");

    m.def(
        "run_acceptance",
        [](const std::set<int>& only) {
            AcceptanceOptions o;
            o.only = only;
            return json_to_py(to_json(run_acceptance(o)));
        },
        py::arg("only") = std::set<int>{});
}
