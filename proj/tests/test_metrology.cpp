#include "hoep/gaussian.hpp"
#include "hoep/metrology.hpp"
#include "hoep/spectral.hpp"

#include "support.hpp"

using namespace hoep;

namespace {

const double kG = 0.95;
const double kChi = 0.31224989991991997;
const double kSmax = 64967.8462693942;  // closed form at q = 1, alpha = 2

}  // namespace

TEST_CASE("susceptibility at the working point") {
    const SensorModel m = ep3_sensor_model(kG, 2.0);
    const Observable o = observable_x1_minus_x2(3);
    const double t = working_time(m);
    CHECK(t == doctest::Approx(2 * M_PI / kChi).epsilon(1e-14));
    const double an = susceptibility(m, o, t, SusceptibilityMethod::analytic_ep3);
    const double fd = susceptibility(m, o, t);
    CHECK(an == doctest::Approx(kSmax).epsilon(1e-10));
    CHECK(fd == doctest::Approx(kSmax).epsilon(1e-4));
    CHECK(susceptibility_ep3_analytic(kG, 1.0, 2.0, t) == doctest::Approx(kSmax).epsilon(1e-10));
    CHECK(susceptibility(m, o, 0.0) == 0.0);
}

TEST_CASE("analytic susceptibility agrees with finite differences over time") {
    const SensorModel m = ep3_sensor_model(0.9, 1.5);
    const Observable o = observable_x1_minus_x2(3);
    for (double ct : {0.5, 2.0, 4.0, 6.0, 9.0}) {
        const double t = ct / sensor_chi(m);
        const double an = susceptibility(m, o, t, SusceptibilityMethod::analytic_ep3);
        const double fd = susceptibility(m, o, t);
        CHECK(std::abs(an - fd) <= 1e-4 * std::max(an, 1.0));
    }
}

TEST_CASE("analytic route refuses other configurations") {
    const SensorModel lossy = ep3_sensor_model(kG, 2.0, 0.1, 0.01);
    CHECK_THROWS_AS(susceptibility(lossy, observable_x1_minus_x2(3), 10.0, SusceptibilityMethod::analytic_ep3),
                    Unsupported);
    const SensorModel m = ep3_sensor_model(kG, 2.0);
    CHECK_THROWS_AS(susceptibility(m, observable_x1_plus_x2(3), 10.0, SusceptibilityMethod::analytic_ep3),
                    Unsupported);
}

TEST_CASE("X1 + X2 response scales as chi^-3") {
    std::vector<double> lx, ly;
    for (double chi : {0.05, 0.1, 0.2}) {
        const SensorModel m = ep3_sensor_model(std::sqrt(1 - chi * chi), 2.0);
        const double t = 2 * M_PI / chi;
        const double s = susceptibility(m, observable_x1_plus_x2(3), t, SusceptibilityMethod::finite_difference,
                                        1e-4 * chi * chi * chi);
        // (1 + g^2) (3 chi t / 2) / chi^3 up to the amplitude prefactor
        lx.push_back(std::log(chi));
        ly.push_back(std::log(s));
    }
    CHECK(linear_fit(lx, ly).slope == doctest::Approx(-3.0).epsilon(0.05));
}

TEST_CASE("noise variances") {
    const SensorModel m = ep3_sensor_model(kG, 2.0);
    CHECK(noise_variance(m, observable_x1_minus_x2(3), 2 * M_PI / kChi) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(noise_variance(m, observable_x1_minus_x2(3), M_PI / kChi) == doctest::Approx(1521.0).epsilon(1e-9));
    const double plus = noise_variance(m, observable_x1_plus_x2(3), M_PI / kChi);
    CHECK(plus == doctest::Approx(0.05 * 0.05 / (1.95 * 1.95)).epsilon(1e-8));
    CHECK(plus == doctest::Approx(0.0006574621959316573).epsilon(1e-8));
}

TEST_CASE("sensitivity report at the working point") {
    const SensorModel m = ep3_sensor_model(kG, 2.0);
    const SensitivityReport r = sensitivity(m, observable_x1_minus_x2(3), working_time(m));
    CHECK(r.delta_eps == doctest::Approx(1.0 / kSmax).epsilon(1e-4));
    CHECK(r.delta_eps == doctest::Approx(1.539e-5).epsilon(1e-3));
    CHECK(r.valid_regime);
    // Cramer-Rao: no estimator beats the QFI
    CHECK(r.delta_eps * std::sqrt(r.qfi) >= 1.0 - 1e-6);
    CHECK(r.qcrb == doctest::Approx(1.0 / std::sqrt(r.qfi)));
    CHECK(r.chi == doctest::Approx(kChi));
}

TEST_CASE("Gaussian QFI of reference families") {
    SUBCASE("displaced vacuum") {
        GaussianState s = vacuum_state(1);
        VecR dmu(2);
        dmu << 0.3, -0.4;
        const QfiResult q = gaussian_qfi(s, dmu, MatR::Zero(2, 2));
        CHECK(q.total == doctest::Approx(2 * 0.25).epsilon(1e-12));
        CHECK(q.lambda == 0.0);
    }
    SUBCASE("single-mode squeezed vacuum") {
        const double r = 0.3;
        GaussianState s = vacuum_state(1);
        s.Lambda.diagonal() << 0.5 * std::exp(-2 * r), 0.5 * std::exp(2 * r);
        MatR d = MatR::Zero(2, 2);
        d.diagonal() << -std::exp(-2 * r), std::exp(2 * r);
        const QfiResult q = gaussian_qfi(s, VecR::Zero(2), d);
        CHECK(q.total == doctest::Approx(2.0).epsilon(1e-10));
        CHECK_FALSE(q.lambda_fallback);
    }
    SUBCASE("two-mode squeezed vacuum") {
        const double r = 0.3;
        auto lam = [](double x) {
            const double c = std::cosh(2 * x) / 2, s = std::sinh(2 * x) / 2;
            MatR l = MatR::Zero(4, 4);
            l.diagonal().setConstant(c);
            l(0, 2) = l(2, 0) = s;
            l(1, 3) = l(3, 1) = -s;
            return l;
        };
        const MatR d = (lam(r + 1e-6) - lam(r - 1e-6)) / 2e-6;
        GaussianState s = vacuum_state(2);
        s.Lambda = lam(r);
        CHECK(gaussian_qfi(s, VecR::Zero(4), d).total == doctest::Approx(4.0).epsilon(1e-8));
    }
}

TEST_CASE("sensor QFI") {
    const SensorModel m = ep3_sensor_model(kG, 2.0);
    CHECK(qfi(m, 0.0).total == 0.0);
    const QfiResult q = qfi(m, working_time(m));
    CHECK(q.richardson_rel < 1e-4);
    CHECK(q.mu > 0.0);
    CHECK(q.lambda >= 0.0);
    // the optimal observable attains the displacement part exactly
    const double t = working_time(m);
    const Observable opt = optimal_observable(m, t);
    const double s = susceptibility(m, opt, t);
    const double n = noise_variance(m, opt, t);
    CHECK(std::sqrt(n) / s * std::sqrt(q.mu) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("QCRB bound holds along the evolution") {
    const SensorModel m = ep3_sensor_model(kG, 2.0);
    for (double ct : {1.0, M_PI, 4.0, 2 * M_PI, 3 * M_PI}) {
        const double t = ct / kChi;
        for (const Observable& o : {observable_x1_minus_x2(3), observable_x1_plus_x2(3)}) {
            SensitivityOptions so;
            so.with_sql = false;
            const SensitivityReport r = sensitivity(m, o, t, so);
            CHECK(r.delta_eps * std::sqrt(r.qfi) >= 1.0 - 1e-6);
        }
    }
}

TEST_CASE("standard quantum limit") {
    CHECK(sql(100.0, 1.0) == doctest::Approx(0.1));
    CHECK_THROWS_AS(sql(0.0, 1.0), ContractViolation);
    CHECK_THROWS_AS(sql(10.0, 0.0), ContractViolation);
}

TEST_CASE("lossy sensor") {
    const SensorModel m = ep3_sensor_model(kG, 2.0, 0.1, 0.01);
    const double t = working_time(m);
    const Observable o = observable_x1_minus_x2(3);
    // Van Loan reference at t = 2 pi / chi with the damped chi (tests/oracles/derive.py)
    CHECK(sensor_chi(m) == doctest::Approx(0.3089902911096076).epsilon(1e-13));
    CHECK(noise_variance(m, o, t) == doctest::Approx(255.87715474696418).epsilon(1e-7));
    CHECK(susceptibility(m, o, t) == doctest::Approx(40773.97782663845).epsilon(1e-4));
    SensitivityOptions so;
    so.with_qfi = false;
    const SensitivityReport r = sensitivity(m, o, t, so);
    CHECK(sql_gain_db(r) > 10.0);
    const SensorModel lossless = ep3_sensor_model(kG, 2.0);
    CHECK(r.delta_eps > sensitivity(lossless, o, working_time(lossless), so).delta_eps);
}

TEST_CASE("lossless gain over the SQL grows as chi shrinks") {
    SensitivityOptions so;
    so.with_qfi = false;
    double prev = -INFINITY;
    for (double g : {0.8, 0.9, 0.95, 0.98}) {
        const SensorModel m = ep3_sensor_model(g, 2.0);
        const double gain = sql_gain_db(sensitivity(m, observable_x1_minus_x2(3), working_time(m), so));
        CHECK(gain > prev);
        prev = gain;
    }
}

TEST_CASE("scaling laws") {
    const std::vector<double> grid = default_chi_grid(8);
    CHECK(grid.front() == doctest::Approx(std::sqrt(1 - 0.81) / 10));
    CHECK(grid.back() == doctest::Approx(std::sqrt(1 - 0.81)));
    const ScalingResult ep3 = scaling_fit(ScalingFamily::ep3, grid, "x1_minus_x2", 2.0, true);
    REQUIRE(ep3.computable);
    CHECK(std::abs(ep3.slope - 5.0) < 0.1);
    CHECK(std::abs(ep3.qfi_slope + 10.0) < 0.2);
    const ScalingResult ep2 = scaling_fit(ScalingFamily::ep2, grid);
    CHECK(std::abs(ep2.slope - 3.0) < 0.1);
    CHECK_THROWS_AS(scaling_fit(ScalingFamily::ep3, {0.1, 0.2}), ContractViolation);
}

TEST_CASE("feasibility spot check") {
    const FeasibilityReport f = feasibility();
    CHECK(f.pass);
    CHECK(f.ratio > 1.0 / 3);
    CHECK(f.ratio < 3.0);
    CHECK(f.chi == doctest::Approx(std::sqrt(1 - 0.995 * 0.995)));
    CHECK_FALSE(f.convention.empty());
}

TEST_CASE("observable names") {
    CHECK(parse_observable("x1_plus_x2", 3).c(2) == 1.0);
    CHECK(parse_observable("x1_minus_x2", 3).c(2) == -1.0);
    CHECK_THROWS_AS(parse_observable("x3", 3), ConfigError);
}
