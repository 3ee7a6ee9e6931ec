#include "hoep/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "hoep/gaussian.hpp"
#include "hoep/metrology.hpp"
#include "hoep/model.hpp"
#include "hoep/perturb.hpp"
#include "hoep/spectral.hpp"

namespace hoep {

namespace {

std::string fmt(double v, int prec = 6) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

std::vector<double> geomspace(double a, double b, int n) {
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k) out[k] = a * std::pow(b / a, double(k) / (n - 1));
    out.back() = b;
    return out;
}

struct Ctx {
    double scale = 1.0;
    double tol(double t) const { return t * scale; }
};

CriterionResult c1_ep3_puiseux(const Ctx& x) {
    CriterionResult r;
    r.title = "EP3 Puiseux exponent and 2^(1/3) prefactor";
    const SystemConfig c = ep3_sensor(1.0);
    const auto eps = geomspace(1e-9, 1e-5, 25);
    const PuiseuxFit same = puiseux_fit(c, eps, perturbation_direction(c, PerturbationCase::same));
    const PuiseuxFit diff = puiseux_fit(c, eps, perturbation_direction(c, PerturbationCase::different));
    const double ratio = same.branch_prefactor / diff.branch_prefactor / std::cbrt(2.0);
    const double ts = x.tol(0.02), tr = x.tol(0.01);
    r.pass = std::abs(same.slope - 1.0 / 3.0) <= ts && std::abs(diff.slope - 1.0 / 3.0) <= ts &&
             std::abs(ratio - 1.0) <= tr;
    r.measured = "slope same " + fmt(same.slope) + ", different " + fmt(diff.slope) +
                 ", prefactor ratio / 2^(1/3) = " + fmt(ratio, 8);
    r.tolerance = "slope 1/3 +- " + fmt(ts) + ", ratio +- " + fmt(100 * tr) + "%";
    r.data = {{"slope_same", same.slope}, {"slope_different", diff.slope}, {"r2_same", same.r_squared},
              {"prefactor_ratio", same.branch_prefactor / diff.branch_prefactor}};
    return r;
}

CriterionResult c2_ep4_puiseux(const Ctx& x) {
    CriterionResult r;
    r.title = "EP4 Puiseux exponent and four-fold coalescence at f = 0.2";
    const Ep4Point p = ep4_locus(0.2);
    const double caption[4] = {0.8845, 0.0340, -0.8505, 1.1499};
    const double exact[4] = {p.delta1, p.delta2, p.delta3, p.g};
    double caption_dev = 0.0;
    for (int k = 0; k < 4; ++k) caption_dev = std::max(caption_dev, std::abs(caption[k] - exact[k]));

    const SystemConfig c = ep4_config(0.2);
    const Spectrum sp = eigensolve(build_system(c));
    double spread = 0.0;
    for (const cplx& l : sp.eigenvalues) spread = std::max(spread, std::abs(l - sp.ep_value));
    const auto eps = geomspace(1e-9, 1e-5, 25);
    const PuiseuxFit fit = puiseux_fit(c, eps, perturbation_direction(c, PerturbationCase::same));
    const double ts = x.tol(0.02), tc = x.tol(1e-5);
    const double centroid_dev = std::abs(sp.ep_value - cplx(0.442272, 0.0));
    r.pass = sp.ep_order == 4 && std::abs(fit.slope - 0.25) <= ts && centroid_dev <= tc && caption_dev <= x.tol(5e-5);
    r.measured = "ep_order " + std::to_string(sp.ep_order) + ", centroid " + fmt(sp.ep_value.real(), 10) +
                 " (|dev| " + fmt(centroid_dev, 3) + "), slope " + fmt(fit.slope);
    r.tolerance = "slope 1/4 +- " + fmt(ts) + ", centroid 0.442272 +- " + fmt(tc);
    r.details.push_back("largest single-eigenvalue distance from the centroid " + fmt(spread, 3) +
                        " (double-precision splitting of a four-fold root)");
    r.details.push_back("caption parameters vs closed form: max |difference| " + fmt(caption_dev, 3));
    r.data = {{"ep_order", sp.ep_order}, {"centroid", sp.ep_value.real()}, {"slope", fit.slope},
              {"max_member_deviation", spread}};
    return r;
}

CriterionResult c3_counterexample(const Ctx&) {
    CriterionResult r;
    r.title = "reducible counterexample never exceeds EP2";
    int max_order = 0;
    std::vector<std::string> at_ep;
    for (double e : {0.01, 0.05}) {
        SystemConfig c = ep3_sensor(1.0);
        c.alpha.clear();
        c.epsilon = {e, -e};
        std::vector<double> gs;
        for (int k = 0; k <= 80; ++k) gs.push_back(0.9 + 0.2 * k / 80.0);
        const double gep = std::sqrt(1.0 + e * e / 4.0);
        gs.push_back(gep);
        int order_at_ep = 0;
        for (double g : gs) {
            c.g = {g};
            const Spectrum sp = eigensolve(build_system(c));
            max_order = std::max(max_order, sp.ep_order);
            if (g == gep) order_at_ep = sp.ep_order;
        }
        c.g = {gep};
        const bool reducible = !check_irreducibility(c).pass;
        at_ep.push_back("eps " + fmt(e) + ": order " + std::to_string(order_at_ep) + " at g = " + fmt(gep, 10) +
                        (reducible ? ", irreducibility test fails as expected" : ", irreducibility test passes"));
    }
    r.pass = max_order <= 2;
    r.measured = "max detected EP order " + std::to_string(max_order);
    r.tolerance = "<= 2";
    r.details = at_ep;
    r.data = {{"max_order", max_order}};
    return r;
}

CriterionResult c4_eq7(const Ctx& x) {
    CriterionResult r;
    r.title = "analytic vs finite-difference susceptibility";
    double worst = 0.0;
    for (double g : {0.8, 0.9, 0.95}) {
        const SensorModel m = ep3_sensor_model(g, 2.0);
        const Observable o = observable_x1_minus_x2(3);
        const double period = working_time(m);
        for (int k = 1; k <= 20; ++k) {
            const double t = period * k / 20.0;
            const double a = susceptibility(m, o, t, SusceptibilityMethod::analytic_ep3);
            const double f = susceptibility(m, o, t, SusceptibilityMethod::finite_difference, 1e-9);
            worst = std::max(worst, std::abs(a - f) / std::abs(a));
        }
    }
    const double tol = x.tol(1e-4);
    r.pass = worst <= tol;
    r.measured = "max relative difference " + fmt(worst, 3);
    r.tolerance = "<= " + fmt(tol);
    r.data = {{"max_rel", worst}};
    return r;
}

CriterionResult c5_working_point(const Ctx& x) {
    CriterionResult r;
    r.title = "working-point identities (g = 0.95, alpha = 2, chi t = 2 pi)";
    const double g = 0.95, alpha = 2.0;
    const SensorModel m = ep3_sensor_model(g, alpha);
    const double t = working_time(m);
    const SensitivityReport rep = sensitivity(m, observable_x1_minus_x2(3), t);
    const double chi = std::sqrt(1.0 - g * g);
    const double smax = 3.0 * std::sqrt(2.0) * alpha * (1.0 + g * g) * (1.0 + g) * (1.0 + g) * M_PI / std::pow(chi, 5);
    const double noise_dev = std::abs(rep.noise_var - 1.0);
    const double s_dev = std::abs(rep.susceptibility - smax) / smax;
    const double q = rep.delta_eps / rep.qcrb;
    const double q_mu = rep.delta_eps * std::sqrt(rep.qfi_mu);
    const bool ok_noise = noise_dev <= x.tol(1e-8);
    const bool ok_s = s_dev <= x.tol(1e-4);
    const bool ok_q = std::abs(q - 1.0) <= x.tol(0.01);
    r.pass = ok_noise && ok_s && ok_q;
    r.measured = "noise " + fmt(rep.noise_var, 12) + ", S " + fmt(rep.susceptibility, 9) + " (closed form " +
                 fmt(smax, 9) + "), delta_eps*sqrt(QFI) " + fmt(q, 6);
    r.tolerance = "noise 1 +- 1e-8, S +- 0.01%, QCRB ratio 1 +- 1%";
    r.details.push_back(std::string("noise ") + (ok_noise ? "pass" : "FAIL") + ", susceptibility " +
                        (ok_s ? "pass" : "FAIL") + ", QCRB " + (ok_q ? "pass" : "FAIL"));
    r.details.push_back("QFI split: I_mu " + fmt(rep.qfi_mu, 8) + ", I_Lambda " + fmt(rep.qfi_lambda, 8) +
                        "; delta_eps*sqrt(I_mu) = " + fmt(q_mu, 8));
    r.data = {{"noise", rep.noise_var}, {"susceptibility", rep.susceptibility}, {"closed_form", smax},
              {"qcrb_ratio", q}, {"qcrb_ratio_mu_only", q_mu}};
    return r;
}

CriterionResult c6_scaling(const Ctx& x) {
    CriterionResult r;
    r.title = "scaling laws delta_eps ~ chi^(2n-1), QFI ~ chi^-10";
    const auto grid = default_chi_grid(12);
    const ScalingResult s3 = scaling_fit(ScalingFamily::ep3, grid, "x1_minus_x2", 2.0, true);
    const ScalingResult s2 = scaling_fit(ScalingFamily::ep2, grid);
    const ScalingResult s4 = scaling_fit(ScalingFamily::ep4, grid);
    const bool ok3 = std::abs(s3.slope - 5.0) <= x.tol(0.1);
    const bool ok2 = std::abs(s2.slope - 3.0) <= x.tol(0.1);
    const bool okq = std::abs(s3.qfi_slope + 10.0) <= x.tol(0.2);
    r.pass = ok3 && ok2 && okq;
    r.measured = "EP3 " + fmt(s3.slope, 5) + ", EP2 " + fmt(s2.slope, 5) + ", QFI " + fmt(s3.qfi_slope, 5) +
                 ", EP4 " + (s4.computable ? fmt(s4.slope, 5) : std::string("n/a"));
    r.tolerance = "5 +- 0.1, 3 +- 0.1, -10 +- 0.2; EP4 exploratory";
    r.details.push_back("chi grid " + fmt(grid.front(), 4) + " .. " + fmt(grid.back(), 4) + " (g " +
                        fmt(std::sqrt(1 - grid.back() * grid.back()), 4) + " .. " +
                        fmt(std::sqrt(1 - grid.front() * grid.front()), 6) + ")");
    int excluded = 0;
    for (const auto& p : s4.points) excluded += p.stable ? 0 : 1;
    r.details.push_back("EP4 (exploratory, not gating): " + std::to_string(excluded) + "/" +
                        std::to_string(s4.points.size()) + " grid points dynamically unstable and excluded");
    r.data = {{"ep3", s3.slope}, {"ep2", s2.slope}, {"qfi", s3.qfi_slope}, {"ep4_computable", s4.computable}};
    return r;
}

CriterionResult c7_squeezing(const Ctx& x) {
    CriterionResult r;
    r.title = "X1 + X2 strategy at chi t = (2q+1) pi";
    const double g = 0.95;
    const SensorModel m = ep3_sensor_model(g, 2.0);
    const double closed = std::pow((1 - g) / (1 + g), 2);
    bool ok_noise = true, ok_q = true;
    std::string meas;
    nlohmann::json data = nlohmann::json::array();
    for (double q : {0.5, 1.5}) {
        const double t = working_time(m, q);
        const SensitivityReport rep = sensitivity(m, observable_x1_plus_x2(3), t);
        const double dn = std::abs(rep.noise_var - closed);
        const double ratio = rep.delta_eps / rep.qcrb;
        ok_noise = ok_noise && dn <= x.tol(1e-8);
        ok_q = ok_q && std::abs(ratio - 1.0) <= x.tol(0.01);
        meas += (meas.empty() ? "" : "; ") + std::string("chi t = ") + fmt(2 * q) + "pi: noise " + fmt(rep.noise_var, 10) +
                ", delta_eps*sqrt(QFI) " + fmt(ratio, 6);
        data.push_back({{"chi_t_over_pi", 2 * q}, {"noise", rep.noise_var}, {"qcrb_ratio", ratio}});
    }
    r.pass = ok_noise && ok_q;
    r.measured = meas;
    r.tolerance = "noise (1-g)^2/(1+g)^2 = " + fmt(closed, 10) + " +- 1e-8, QCRB ratio 1 +- 1%";
    r.details.push_back(std::string("noise ") + (ok_noise ? "pass" : "FAIL") + ", QCRB " + (ok_q ? "pass" : "FAIL"));
    r.data = {{"points", data}};
    return r;
}

CriterionResult c8_conservation(const Ctx& x) {
    CriterionResult r;
    r.title = "conservation, symplecticity, purity, uncertainty";
    // N1 - N2 - Na over five periods
    const SensorModel m = ep3_sensor_model(0.95, 2.0);
    const double period = working_time(m);
    const GaussianState s0 = coherent_init(m.config);
    double q0 = 0.0, drift = 0.0;
    for (int k = 0; k <= 200; ++k) {
        const auto n = excitation_numbers(evolve(s0, propagator(m.config, 5.0 * period * k / 200.0)));
        const double q = n[0] - n[1] - n[2];
        if (k == 0) q0 = q;
        drift = std::max(drift, std::abs(q - q0));
    }

    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double symp = 0.0, purity = 0.0, unc = INFINITY;
    int tried = 0, used = 0;
    while (used < 60 && tried < 2000) {
        ++tried;
        SystemConfig c;
        c.n = 3 + static_cast<int>(u(rng) * 4);  // 3..6
        c.m = 1 + static_cast<int>(u(rng) * (c.n - 1));
        c.g.clear();
        c.kappa.clear();
        for (int i = 0; i < c.m; ++i) c.g.push_back(0.3 * u(rng));
        for (int i = 0; i < c.n - c.m - 1; ++i) c.kappa.push_back(0.5 + u(rng));
        c.delta.assign(c.n - 1, 0.0);
        c.epsilon.assign(c.n - 1, 0.0);
        for (double& d : c.delta) d = 4.0 * (u(rng) - 0.5);
        c.alpha.clear();
        for (int i = 0; i < c.n - 1; ++i) c.alpha.emplace_back(2.0 * (u(rng) - 0.5), 2.0 * (u(rng) - 0.5));
        if (eigensolve(build_system(c)).phase != Phase::stable) continue;
        ++used;
        const double t = 20.0 * u(rng);
        const Propagator p = propagator(c, t);
        symp = std::max(symp, symplectic_residual(p.S_quad));
        const GaussianState s = evolve(coherent_init(c), p);
        purity = std::max(purity, std::abs(purity_determinant(s) - 1.0));
        unc = std::min(unc, uncertainty_min_eigenvalue(s));
    }

    // channels on the sensor state
    const double t = period / 4.0;
    const GaussianState ev = evolve(s0, propagator(m.config, t));
    SystemConfig lossy = m.config;
    lossy.gamma = 0.1;
    lossy.Gamma = 0.01;
    const GaussianState lv = evolve_lossy(s0, lossy, t);
    const GaussianState sw = readout_swap(ev, M_PI / 4.0, {0, 1});
    const GaussianState el = apply_external_loss(ev, {0.3, 0.6, 1.0});
    for (const GaussianState* s : {&ev, &lv, &sw, &el}) unc = std::min(unc, uncertainty_min_eigenvalue(*s));

    const bool ok = drift <= x.tol(1e-8) && symp <= x.tol(1e-10) && purity <= x.tol(1e-8) && unc >= -x.tol(1e-10);
    r.pass = ok && used >= 30;
    r.measured = "drift " + fmt(drift, 3) + ", symplectic " + fmt(symp, 3) + ", purity " + fmt(purity, 3) +
                 ", min eig(Lambda + i Omega/2) " + fmt(unc, 3);
    r.tolerance = "1e-8, 1e-10, 1e-8, >= -1e-10";
    r.details.push_back(std::to_string(used) + " random stable configurations (n = 3..6, seed 20240601)");
    r.data = {{"drift", drift}, {"symplectic", symp}, {"purity", purity}, {"min_uncertainty", unc}, {"configs", used}};
    return r;
}

CriterionResult c9_readout(const Ctx& x) {
    CriterionResult r;
    r.title = "readout swap at theta t = pi/2";
    const SensorModel m = ep3_sensor_model(0.95, 2.0);
    const GaussianState pre = evolve(coherent_init(m.config), propagator(m.config, working_time(m, 0.25)));
    const GaussianState post = readout_swap(pre, M_PI / 2.0, {0, 1});
    const GaussianState magnons = marginal(post, {0, 1});
    const GaussianState readout = marginal(post, {3, 4});
    const GaussianState before = marginal(pre, {0, 1});
    const double dv = std::max(max_abs(magnons.mu), max_abs(MatR(magnons.Lambda - MatR::Identity(4, 4) / 2.0)));
    const double dr = std::max(max_abs(VecR(readout.mu - before.mu)), max_abs(MatR(readout.Lambda - before.Lambda)));
    const double tol = x.tol(1e-10);
    r.pass = dv <= tol && dr <= tol;
    r.measured = "magnons vs vacuum " + fmt(dv, 3) + ", read-out vs pre-swap magnons " + fmt(dr, 3);
    r.tolerance = "<= " + fmt(tol);
    r.details.push_back("pre-swap magnon marginal has |mu| up to " + fmt(max_abs(before.mu), 4) +
                        ", Lambda up to " + fmt(max_abs(before.Lambda), 4));
    r.data = {{"vacuum_dev", dv}, {"transfer_dev", dr}};
    return r;
}

CriterionResult c10_losses(const Ctx& x) {
    CriterionResult r;
    r.title = "losses: SQL margin, monotone degradation, external-loss squeezing law";
    auto de = [](double gamma, double Gamma, double eta) {
        const SensorModel m = ep3_sensor_model(0.95, 2.0, gamma, Gamma, eta);
        SensitivityOptions so;
        so.with_qfi = false;
        so.with_sql = false;
        return sensitivity(m, observable_x1_minus_x2(3), working_time(m), so);
    };
    const SensorModel ml = ep3_sensor_model(0.95, 2.0, 0.1, 0.01);
    SensitivityOptions so;
    so.with_qfi = false;
    const SensitivityReport rep = sensitivity(ml, observable_x1_minus_x2(3), working_time(ml), so);
    const double gain = sql_gain_db(rep);

    auto monotone = [](const std::vector<double>& v) {
        for (std::size_t k = 1; k < v.size(); ++k)
            if (v[k] < v[k - 1] * (1.0 - 1e-9)) return false;
        return true;
    };
    std::vector<double> vg, vG, ve;
    for (double g : {0.0, 0.02, 0.05, 0.1, 0.2}) vg.push_back(de(g, 0.01, 1.0).delta_eps);
    for (double G : {0.0, 0.005, 0.01, 0.02, 0.05}) vG.push_back(de(0.1, G, 1.0).delta_eps);
    for (double e : {1.0, 0.9, 0.7, 0.5}) ve.push_back(de(0.1, 0.01, e).delta_eps);
    const bool mono = monotone(vg) && monotone(vG) && monotone(ve);

    double law = 0.0;
    for (double e2r : {0.1, 0.5, 2.0})
        for (double eta : {0.0, 0.25, 0.5, 0.9, 1.0}) {
            GaussianState s = vacuum_state(1);
            s.Lambda(0, 0) = e2r / 2.0;
            s.Lambda(1, 1) = 1.0 / (2.0 * e2r);
            const GaussianState o = apply_external_loss(s, {eta});
            law = std::max(law, std::abs(2.0 * o.Lambda(0, 0) - (eta * e2r + 1.0 - eta)));
        }
    r.pass = gain > 10.0 / x.scale && mono && law <= x.tol(1e-10);
    r.measured = "delta_eps " + fmt(rep.delta_eps, 5) + " vs SQL " + fmt(rep.sql, 5) + " -> " + fmt(gain, 4) +
                 " dB; monotone " + (mono ? "yes" : "no") + "; squeezing law residual " + fmt(law, 3);
    r.tolerance = "> 10 dB, monotone, 1e-10";
    r.details.push_back("SQL = 1/sqrt(N t), N = peak total excitation over [0, t] = " + fmt(rep.peak_excitation, 6) +
                        ", t = 2 pi / chi = " + fmt(rep.t, 6));
    r.data = {{"gain_db", gain}, {"monotone", mono}, {"law_residual", law}};
    return r;
}

CriterionResult c11_first_order(const Ctx& x) {
    CriterionResult r;
    r.title = "first-order propagation coefficients and derivatives";
    double worst = 0.0, worst_ratio = 0.0, worst_g = 0.0;
    bool grows = true;
    for (double g : {0.8, 0.9, 0.95, 0.97}) {
        const double chi = std::sqrt(1 - g * g);
        double prev = 0.0;
        for (double ratio : {0.005, 0.01, 0.02, 0.05, 0.08, 0.099}) {
            const double e = ratio * std::pow(chi, 3);
            double err = 0.0;
            for (const auto& pr : {std::pair{e, e}, std::pair{e, 0.0}, std::pair{e / 1.5, e}})
                for (int k = 1; k <= 40; ++k) {
                    const double t = 2.0 * M_PI / chi * k / 40.0;
                    err = std::max(err, coefficient_error(first_order_propagator(g, pr.first, pr.second, t),
                                                          exact_coefficients(g, pr.first, pr.second, t)));
                }
            if (err < prev) grows = false;
            prev = err;
            if (err > worst) worst = err, worst_ratio = ratio, worst_g = g;
        }
    }
    // boundary of the 5% regime at g = 0.95, equal perturbations, one period
    double boundary = NAN;
    {
        const double g = 0.95, chi = std::sqrt(1 - g * g);
        for (double ratio = 0.002; ratio < 0.1; ratio += 0.001) {
            const double e = ratio * std::pow(chi, 3);
            double err = 0.0;
            for (int k = 1; k <= 40; ++k) {
                const double t = 2.0 * M_PI / chi * k / 40.0;
                err = std::max(err, coefficient_error(first_order_propagator(g, e, e, t), exact_coefficients(g, e, e, t)));
            }
            if (err > 0.05) {
                boundary = ratio;
                break;
            }
        }
    }
    const double fig_err = coefficient_error(first_order_propagator(0.95, 1e-3, 1.5e-3, 20 * M_PI),
                                             exact_coefficients(0.95, 1e-3, 1.5e-3, 20 * M_PI));

    double dworst = 0.0;
    for (double g : {0.8, 0.9, 0.95}) {
        const double chi = std::sqrt(1 - g * g);
        const double h = 1e-8 * std::max(1.0, std::pow(chi, 3));
        for (PerturbationCase pc : {PerturbationCase::same, PerturbationCase::different})
            for (int k = 1; k <= 10; ++k) {
                const double t = 2.0 * M_PI / chi * k / 10.0;
                const double e2 = pc == PerturbationCase::same ? 1.0 : 0.0;
                const auto p = exact_coefficients(g, h, e2 * h, t);
                const auto m = exact_coefficients(g, -h, -e2 * h, t);
                const cplx fa1 = (p.A1 - m.A1) / (2 * h), fa2 = (p.A2 - m.A2) / (2 * h), fc = (p.C - m.C) / (2 * h);
                const CoefficientDerivatives d = susceptibility_derivatives(g, t, pc);
                const double scale = std::max({std::abs(d.dA1), std::abs(d.dA2), std::abs(d.dC)});
                const double err = std::max({std::abs(fa1 - d.dA1), std::abs(fa2 - d.dA2), std::abs(fc - d.dC)});
                dworst = std::max(dworst, err / scale);
            }
    }
    const bool ok_coeff = worst <= x.tol(0.05);
    const bool ok_deriv = dworst <= x.tol(1e-4);
    r.pass = ok_coeff && ok_deriv;
    r.measured = "coefficient error max " + fmt(worst, 4) + " (g " + fmt(worst_g) + ", eps/chi^3 " + fmt(worst_ratio) +
                 "); derivatives max rel " + fmt(dworst, 3);
    r.tolerance = "coefficients < 5% for eps/chi^3 < 0.1, derivatives <= 1e-4";
    r.details.push_back(std::string("coefficients ") + (ok_coeff ? "pass" : "FAIL") + ", derivatives " +
                        (ok_deriv ? "pass" : "FAIL") + ", error grows with eps/chi^3: " + (grows ? "yes" : "no"));
    r.details.push_back("5% is first exceeded at eps/chi^3 ~ " + fmt(boundary, 3) +
                        " (g = 0.95, equal perturbations); the error of a first-order expansion grows ~ (eps/chi^3)^2");
    r.details.push_back("reference point g = 0.95, eps = (1e-3, 1.5e-3), t = 20 pi: error " + fmt(fig_err, 4));
    r.data = {{"max_error", worst}, {"boundary_ratio", boundary}, {"derivative_error", dworst}, {"grows", grows}};
    return r;
}

CriterionResult c12_feasibility(const Ctx& x) {
    CriterionResult r;
    r.title = "experimental-feasibility spot check";
    const FeasibilityReport f = feasibility();
    const double lo = 1.0 / (3.0 * x.scale), hi = 3.0 * x.scale;
    r.pass = f.ratio >= lo && f.ratio <= hi;
    r.measured = "delta_eps*sqrt(t) = " + fmt(f.value, 4) + " Hz/sqrt(Hz), ratio to 5.27e-6 = " + fmt(f.ratio, 4);
    r.tolerance = "within a factor of 3";
    r.details.push_back("delta_eps = " + fmt(f.delta_eps, 5) + " kappa at g = 0.995, alpha = 100, chi = " + fmt(f.chi, 6));
    r.details.push_back("convention: " + f.convention);
    r.details.push_back("alternative " + f.alt_convention + " gives " + fmt(f.alt_value, 4) + " (ratio " +
                        fmt(f.alt_ratio, 4) + ")");
    r.data = {{"value", f.value}, {"ratio", f.ratio}, {"alt_value", f.alt_value}};
    return r;
}

}  // namespace

const std::set<int>& known_unattainable() {
    static const std::set<int> s{5, 7, 11};
    return s;
}

int AcceptanceReport::unexpected() const {
    int n = 0;
    for (const auto& c : criteria) n += (c.pass == c.known_unattainable) ? 1 : 0;
    return n;
}

std::vector<int> AcceptanceReport::documented_failures() const {
    std::vector<int> out;
    for (const auto& c : criteria)
        if (!c.pass && c.known_unattainable) out.push_back(c.id);
    return out;
}

AcceptanceReport run_acceptance(const AcceptanceOptions& opt) {
    using Fn = std::function<CriterionResult(const Ctx&)>;
    const std::vector<Fn> fns{c1_ep3_puiseux, c2_ep4_puiseux, c3_counterexample, c4_eq7,
                              c5_working_point, c6_scaling, c7_squeezing, c8_conservation,
                              c9_readout, c10_losses, c11_first_order, c12_feasibility};
    AcceptanceReport rep;
    for (std::size_t k = 0; k < fns.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!opt.only.empty() && !opt.only.count(id)) continue;
        Ctx ctx;
        const auto it = opt.tolerance_scale.find(id);
        if (it != opt.tolerance_scale.end()) ctx.scale = it->second;
        CriterionResult c;
        try {
            c = fns[k](ctx);
        } catch (const std::exception& e) {
            c.pass = false;
            c.measured = std::string("error: ") + e.what();
        }
        c.id = id;
        c.known_unattainable = known_unattainable().count(id) > 0;
        rep.criteria.push_back(c);
    }
    return rep;
}

std::string format_line(const CriterionResult& c) {
    std::ostringstream os;
    os << (c.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.title << ": " << c.measured << "  (tolerance "
       << c.tolerance << ")";
    if (!c.pass && c.known_unattainable) os << "  [documented]";
    if (c.pass && c.known_unattainable) os << "  [documented failure now passes]";
    return os.str();
}

nlohmann::json to_json(const AcceptanceReport& r) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : r.criteria)
        j.push_back({{"id", c.id},
                     {"title", c.title},
                     {"pass", c.pass},
                     {"known_unattainable", c.known_unattainable},
                     {"measured", c.measured},
                     {"tolerance", c.tolerance},
                     {"details", c.details},
                     {"data", c.data}});
    return {{"criteria", j}, {"unexpected", r.unexpected()}, {"documented_failures", r.documented_failures()}};
}

}  // namespace hoep
