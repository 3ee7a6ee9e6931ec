#include "hoep/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hoep {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();

SystemConfig perturbed(const SensorModel& model, double eps) {
    SystemConfig c = model.config;
    if (model.direction.size() != c.epsilon.size())
        throw ConfigError("sensor model: direction needs one entry per magnon");
    for (std::size_t i = 0; i < c.epsilon.size(); ++i) c.epsilon[i] += eps * model.direction[i];
    return c;
}

// integrator steps used by the unperturbed lossy run, shared by the +-h runs
int shared_steps(const SensorModel& model, double t) {
    if (model.config.lossless() || t == 0.0) return 0;
    LossyDiagnostics diag;
    evolve_lossy(coherent_init(model.config), model.config, t, {}, &diag);
    return diag.steps;
}

struct Derivative {
    GaussianState state;
    VecR dmu;
    MatR dLambda;
};

Derivative central_difference(const SensorModel& model, double eps0, double t, double h, int steps) {
    Derivative d;
    d.state = final_state(model, eps0, t, steps);
    const GaussianState p = final_state(model, eps0 + h, t, steps);
    const GaussianState m = final_state(model, eps0 - h, t, steps);
    d.dmu = (p.mu - m.mu) / (2.0 * h);
    d.dLambda = (p.Lambda - m.Lambda) / (2.0 * h);
    return d;
}

double default_qfi_step(const SensorModel& model) {
    const double chi = sensor_chi(model);
    return std::isfinite(chi) && chi > 0.0 ? 1e-7 * chi * chi * chi : 1e-7;
}

// alpha of the alpha_1 = -alpha_2 = i alpha initial state, NaN when the pattern does not match
double sensor_alpha(const SystemConfig& c) {
    if (c.alpha.size() != 2) return kNaN;
    const cplx a1 = c.alpha[0], a2 = c.alpha[1];
    if (std::abs(a1.real()) > 0 || std::abs(a1 + a2) > 1e-15 * (1.0 + std::abs(a1))) return kNaN;
    return a1.imag();
}
}  // namespace

Observable observable_x1_minus_x2(int n) {
    if (n < 3) throw ConfigError("X1 - X2 needs at least two magnon modes");
    Observable o{"x1_minus_x2", VecR::Zero(2 * n)};
    o.c(0) = 1.0;
    o.c(2) = -1.0;
    return o;
}

Observable observable_x1_plus_x2(int n) {
    if (n < 3) throw ConfigError("X1 + X2 needs at least two magnon modes");
    Observable o{"x1_plus_x2", VecR::Zero(2 * n)};
    o.c(0) = 1.0;
    o.c(2) = 1.0;
    return o;
}

Observable parse_observable(const std::string& name, int n) {
    if (name == "x1_minus_x2") return observable_x1_minus_x2(n);
    if (name == "x1_plus_x2") return observable_x1_plus_x2(n);
    throw ConfigError("unknown observable '" + name + "' (expected x1_minus_x2, x1_plus_x2 or optimal)");
}

SensorModel ep3_sensor_model(double g, double alpha, double gamma, double Gamma, double eta,
                             PerturbationCase pc) {
    SensorModel m;
    m.config = ep3_sensor(g, 1.0, alpha, gamma, Gamma);
    m.direction = perturbation_direction(m.config, pc);
    // the sensor reads a positive shift; the Puiseux convention perturbs by -eps
    for (double& d : m.direction) d = 0.0 - d;
    m.eta = eta;
    return m;
}

double sensor_chi(const SensorModel& model) {
    const Spectrum sp = eigensolve(build_system(model.config));
    return sp.chi;
}

double working_time(const SensorModel& model, double q) {
    const double chi = sensor_chi(model);
    if (!(chi > 0.0)) throw RegimeError("working_time: chi^2 <= 0, no oscillation period");
    return 2.0 * q * M_PI / chi;
}

GaussianState final_state(const SensorModel& model, double eps, double t, int fixed_steps) {
    const SystemConfig c = perturbed(model, eps);
    GaussianState s = coherent_init(c);
    if (c.lossless()) {
        s = evolve(s, propagator(c, t));
    } else {
        LossyOptions opt;
        opt.fixed_steps = fixed_steps;
        s = evolve_lossy(s, c, t, opt);
    }
    if (model.eta != 1.0) {
        std::vector<double> eta(s.modes(), 1.0);
        for (int k = 0; k < c.magnons(); ++k) eta[k] = model.eta;
        s = apply_external_loss(s, eta);
    }
    return s;
}

SusceptibilityMethod parse_susceptibility_method(const std::string& s) {
    if (s == "finite_difference" || s == "fd") return SusceptibilityMethod::finite_difference;
    if (s == "analytic_ep3" || s == "analytic") return SusceptibilityMethod::analytic_ep3;
    throw ConfigError("unknown susceptibility method '" + s + "'");
}

double susceptibility_ep3_analytic(double g, double kappa, double alpha, double t) {
    const double chi2 = kappa * kappa - g * g;
    if (!(chi2 > 0.0)) throw RegimeError("analytic susceptibility needs g < kappa");
    const double chi = std::sqrt(chi2);
    const double u = chi * t;
    const double xi = (kappa * kappa + g * g) * u * (2.0 + std::cos(u)) +
                      (g * g - 8.0 * g * kappa + kappa * kappa) * std::sin(u);
    return std::abs(std::sqrt(2.0) * alpha * (kappa + g) * (kappa + g) * xi / (2.0 * std::pow(chi, 5)));
}

double susceptibility(const SensorModel& model, const Observable& obs, double t,
                      SusceptibilityMethod method, double step) {
    if (obs.c.size() != 2 * model.config.n) throw ConfigError("observable dimension mismatch");
    if (method == SusceptibilityMethod::analytic_ep3) {
        const SystemConfig& c = model.config;
        const double alpha = sensor_alpha(c);
        const bool ep3_shape = c.n == 3 && c.m == 1 && c.lossless() && c.delta[0] == 0.0 &&
                               c.delta[1] == 0.0 && c.epsilon[0] == 0.0 && c.epsilon[1] == 0.0;
        const bool same = model.direction.size() == 2 && model.direction[0] == 1.0 && model.direction[1] == 1.0;
        const Observable ref = observable_x1_minus_x2(c.n);
        if (!ep3_shape || !same || !std::isfinite(alpha) || model.eta != 1.0 || !obs.c.isApprox(ref.c))
            throw Unsupported(
                "analytic susceptibility covers only the lossless EP3 sensor with equal "
                "perturbations, alpha_1 = -alpha_2 = i alpha and X1 - X2");
        return susceptibility_ep3_analytic(c.g[0], c.kappa[0], alpha, t);
    }
    if (t == 0.0) return 0.0;
    const int steps = shared_steps(model, t);
    const GaussianState p = final_state(model, step, t, steps);
    const GaussianState m = final_state(model, -step, t, steps);
    return std::abs(obs.c.dot(p.mu - m.mu)) / (2.0 * step);
}

double noise_variance(const SensorModel& model, const Observable& obs, double t) {
    if (obs.c.size() != 2 * model.config.n) throw ConfigError("observable dimension mismatch");
    const GaussianState s = final_state(model, 0.0, t);
    return obs.c.dot(s.Lambda * obs.c);
}

QfiResult gaussian_qfi(const GaussianState& state, const VecR& dmu, const MatR& dLambda) {
    const int d = static_cast<int>(state.mu.size());
    QfiResult r;
    r.mu = dmu.dot(state.Lambda.ldlt().solve(dmu));

    const MatR sigma = 2.0 * state.Lambda;
    const MatR dsigma = 2.0 * dLambda;
    const MatR om = symplectic_form(d / 2);
    MatR m(d * d, d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            m.block(i * d, j * d, d, d) = sigma(i, j) * sigma - om(i, j) * om;
    const VecR v = Eigen::Map<const VecR>(dsigma.data(), d * d);

    // pseudo-inverse: singular values below 1e-10 of the largest are dropped
    Eigen::JacobiSVD<MatR> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    const VecR phi = svd.solve(v);
    const double vn = v.norm();
    const double resid = vn > 0.0 ? (m * phi - v).norm() / vn : 0.0;
    if (resid > 1e-6) {
        std::ostringstream os;
        os << "covariance derivative outside the range of sigma(x)sigma - Omega(x)Omega "
           << "(relative residual " << resid << "); QFI reduced to the displacement part";
        r.warning = os.str();
        r.lambda_fallback = true;
        r.lambda = 0.0;
    } else {
        r.lambda = 0.5 * v.dot(phi);
    }
    r.total = r.mu + r.lambda;
    return r;
}

QfiResult qfi(const SensorModel& model, double t, double eps0, double step) {
    const double h = step > 0.0 ? step : default_qfi_step(model);
    if (t == 0.0) {
        QfiResult r;
        r.step = h;
        return r;
    }
    const int steps = shared_steps(model, t);
    const Derivative full = central_difference(model, eps0, t, h, steps);
    QfiResult r = gaussian_qfi(full.state, full.dmu, full.dLambda);
    const Derivative half = central_difference(model, eps0, t, h / 2.0, steps);
    const QfiResult rh = gaussian_qfi(half.state, half.dmu, half.dLambda);
    r.step = h;
    r.richardson_rel = rh.total != 0.0 ? std::abs(r.total - rh.total) / std::abs(rh.total) : 0.0;
    return r;
}

Observable optimal_observable(const SensorModel& model, double t) {
    const int steps = shared_steps(model, t);
    const Derivative d = central_difference(model, 0.0, t, default_qfi_step(model), steps);
    Observable o{"optimal", d.state.Lambda.ldlt().solve(d.dmu)};
    if (o.c.norm() == 0.0) throw ContractViolation("optimal observable undefined: displacement does not depend on eps");
    return o;
}

double sql(double n_total, double t) {
    if (!(n_total > 0.0) || !(t > 0.0)) throw ContractViolation("sql: needs N > 0 and t > 0");
    return 1.0 / std::sqrt(n_total * t);
}

double peak_excitation(const SensorModel& model, double t, int samples) {
    if (samples < 2) throw ConfigError("peak_excitation: need at least two samples");
    const SystemConfig& c = model.config;
    GaussianState s = coherent_init(c);
    auto total = [](const GaussianState& st) {
        double n = 0.0;
        for (double x : excitation_numbers(st)) n += x;
        return n;
    };
    double peak = total(s);
    const double dt = t / (samples - 1);
    if (c.lossless()) {
        const GaussianState s0 = s;
        for (int k = 1; k < samples; ++k) peak = std::max(peak, total(evolve(s0, propagator(c, k * dt))));
    } else {
        for (int k = 1; k < samples; ++k) {
            s = evolve_lossy(s, c, dt);
            peak = std::max(peak, total(s));
        }
    }
    return peak;
}

SensitivityReport sensitivity(const SensorModel& model, const Observable& obs, double t,
                              const SensitivityOptions& opt) {
    const SystemConfig& c = model.config;
    SensitivityReport r;
    if (c.m >= 1) r.g = c.g[0];
    if (!c.kappa.empty()) r.kappa = c.kappa[0];
    const double a = sensor_alpha(c);
    r.alpha = std::isfinite(a) ? a : (c.alpha.empty() ? 0.0 : std::abs(c.alpha[0]));
    r.gamma = c.gamma;
    r.Gamma = c.Gamma;
    r.eta = model.eta;
    r.t = t;
    r.observable = obs.name;

    const Spectrum sp = eigensolve(build_system(c));
    r.chi = sp.chi;
    r.valid_regime = sp.phase == Phase::stable;
    if (!r.valid_regime) r.warning = "unperturbed system is not in the stable phase";

    r.susceptibility = susceptibility(model, obs, t, SusceptibilityMethod::finite_difference, opt.fd_step);
    r.noise_var = noise_variance(model, obs, t);
    r.delta_eps = r.susceptibility > 0.0 ? std::sqrt(r.noise_var) / r.susceptibility
                                         : std::numeric_limits<double>::infinity();
    if (opt.with_qfi) {
        const QfiResult q = qfi(model, t);
        r.qfi = q.total;
        r.qfi_mu = q.mu;
        r.qfi_lambda = q.lambda;
        r.qcrb = q.total > 0.0 ? 1.0 / std::sqrt(q.total) : std::numeric_limits<double>::infinity();
        if (!q.warning.empty()) r.warning += (r.warning.empty() ? "" : "; ") + q.warning;
    } else {
        r.qfi = r.qfi_mu = r.qfi_lambda = r.qcrb = kNaN;
    }
    if (opt.with_sql && t > 0.0) {
        r.peak_excitation = peak_excitation(model, t);
        r.sql = sql(r.peak_excitation, t);
    } else {
        r.peak_excitation = r.sql = kNaN;
    }
    return r;
}

double sql_gain_db(const SensitivityReport& r) { return 20.0 * std::log10(r.sql / r.delta_eps); }

ScalingFamily parse_scaling_family(const std::string& s) {
    if (s == "ep2") return ScalingFamily::ep2;
    if (s == "ep3") return ScalingFamily::ep3;
    if (s == "ep4") return ScalingFamily::ep4;
    throw ConfigError("unknown scaling family '" + s + "' (expected ep2, ep3 or ep4)");
}

std::string to_string(ScalingFamily f) {
    switch (f) {
        case ScalingFamily::ep2: return "ep2";
        case ScalingFamily::ep3: return "ep3";
        case ScalingFamily::ep4: return "ep4";
    }
    return "?";
}

std::vector<double> default_chi_grid(int points) {
    if (points < 2) throw ConfigError("default_chi_grid: need at least two points");
    const double hi = std::sqrt(1.0 - 0.9 * 0.9);
    std::vector<double> out(points);
    for (int k = 0; k < points; ++k) out[k] = hi * std::pow(10.0, -1.0 + double(k) / (points - 1));
    return out;
}

namespace {
// two-mode reference: optimal-quadrature sensitivity 1/sqrt(I_mu) with Lambda = I/2
double ep2_delta_eps(double g, double chi, double alpha) {
    const double t = 2.0 * M_PI / chi;
    const double h = 1e-7 * chi * chi * chi;
    auto xbar = [&](double e) {
        const Ep2Coefficients c = ep2_coefficients(1.0, g, e, t);
        VecR x(4);
        x << c.B.real(), c.B.imag(), c.A.real(), c.A.imag();
        return VecR(std::sqrt(2.0) * alpha * x);
    };
    const VecR dx = (xbar(h) - xbar(-h)) / (2.0 * h);
    return 1.0 / std::sqrt(2.0 * dx.squaredNorm());
}
}  // namespace

ScalingResult scaling_fit(ScalingFamily family, const std::vector<double>& chi_grid,
                          const std::string& obs, double alpha, bool with_qfi) {
    if (chi_grid.size() < 2) throw ConfigError("scaling_fit: need at least two grid points");
    for (double x : chi_grid)
        if (!(x > 0.0 && x < 1.0)) throw ConfigError("scaling_fit: chi values must lie in (0, 1)");
    const auto [lo, hi] = std::minmax_element(chi_grid.begin(), chi_grid.end());
    if (*hi / *lo < 10.0 * (1.0 - 1e-9)) throw ContractViolation("scaling_fit: chi grid must span at least one decade");

    ScalingResult res;
    res.family = family;
    std::vector<double> lx, ly, lq;
    for (double chi : chi_grid) {
        ScalingPoint p;
        p.chi = chi;
        p.t = 2.0 * M_PI / chi;
        if (family == ScalingFamily::ep2) {
            p.param = std::sqrt(1.0 - chi * chi);
            p.delta_eps = ep2_delta_eps(p.param, chi, alpha);
        } else if (family == ScalingFamily::ep3) {
            p.param = std::sqrt(1.0 - chi * chi);
            const SensorModel m = ep3_sensor_model(p.param, alpha);
            const Observable o = obs == "optimal" ? optimal_observable(m, p.t) : parse_observable(obs, 3);
            SensitivityOptions so;
            so.with_qfi = with_qfi;
            so.with_sql = false;
            const SensitivityReport r = sensitivity(m, o, p.t, so);
            p.delta_eps = r.delta_eps;
            p.qfi = r.qfi;
        } else {
            SensorModel m;
            m.config = ep4_config(0.2);
            p.param = m.config.g[0] - chi * chi;
            m.config.g[0] = p.param;
            m.config.alpha.assign(3, cplx(0.0, alpha));
            m.direction.assign(3, 1.0);
            const Spectrum sp = eigensolve(build_system(m.config));
            p.stable = sp.phase == Phase::stable;
            if (p.stable) {
                const Observable o = optimal_observable(m, p.t);
                SensitivityOptions so;
                so.with_qfi = with_qfi;
                so.with_sql = false;
                const SensitivityReport r = sensitivity(m, o, p.t, so);
                p.delta_eps = r.delta_eps;
                p.qfi = r.qfi;
            }
        }
        if (!p.stable) {
            std::ostringstream os;
            os << "chi = " << chi << " excluded: dynamically unstable";
            res.warnings.push_back(os.str());
        } else {
            lx.push_back(std::log(chi));
            ly.push_back(std::log(p.delta_eps));
            if (with_qfi && p.qfi > 0.0) lq.push_back(std::log(p.qfi));
        }
        res.points.push_back(p);
    }
    if (lx.size() >= 2) {
        const LinearFit f = linear_fit(lx, ly);
        res.computable = true;
        res.slope = f.slope;
        res.intercept = f.intercept;
        res.r_squared = f.r_squared;
        if (lq.size() == lx.size()) res.qfi_slope = linear_fit(lx, lq).slope;
    } else {
        res.warnings.push_back("fewer than two stable grid points; no exponent");
    }
    return res;
}

FeasibilityReport feasibility(double g, double alpha, double kappa_hz, double target) {
    FeasibilityReport r;
    r.g = g;
    r.alpha = alpha;
    r.kappa_hz = kappa_hz;
    r.target = target;
    const SensorModel m = ep3_sensor_model(g, alpha);
    r.chi = sensor_chi(m);
    r.t = 2.0 * M_PI / r.chi;
    SensitivityOptions so;
    so.with_qfi = false;
    so.with_sql = false;
    r.delta_eps = sensitivity(m, observable_x1_minus_x2(3), r.t, so).delta_eps;

    // eps in units of kappa -> ordinary frequency via kappa/2pi; t in units of 1/kappa -> seconds via kappa in rad/s
    r.eps_hz = r.delta_eps * kappa_hz;
    r.t_seconds = r.t / (2.0 * M_PI * kappa_hz);
    r.value = r.eps_hz * std::sqrt(r.t_seconds);
    r.ratio = r.value / target;
    r.pass = r.ratio >= 1.0 / 3.0 && r.ratio <= 3.0;
    r.convention = "eps[Hz] = delta_eps * kappa/2pi, t[s] = (2pi/chi) / kappa[rad/s]";

    r.alt_t_seconds = 2.0 * M_PI / (r.chi * kappa_hz);
    r.alt_value = r.eps_hz * std::sqrt(r.alt_t_seconds);
    r.alt_ratio = r.alt_value / target;
    r.alt_convention = "eps[Hz] = delta_eps * kappa/2pi, t[s] = 2pi / (chi * kappa/2pi)";
    return r;
}

}  // namespace hoep
