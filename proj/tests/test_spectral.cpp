#include <algorithm>

#include "hoep/model.hpp"
#include "hoep/spectral.hpp"

#include "support.hpp"

using namespace hoep;

namespace {

SystemConfig counterexample(double g, double eps) {
    SystemConfig c = ep3_sensor(g);
    c.epsilon = {eps, -eps};
    return c;
}

}  // namespace

TEST_CASE("exact EP3 coalesces three-fold at zero") {
    const Spectrum s = eigensolve(build_system(ep3_sensor(1.0)));
    CHECK(s.ep_order == 3);
    CHECK(s.phase == Phase::exceptional);
    for (const cplx& l : s.eigenvalues) CHECK(std::abs(l) < 1e-12);
}

TEST_CASE("stable sensor spectrum") {
    const Spectrum s = eigensolve(build_system(ep3_sensor(0.95)));
    const double chi = 0.31224989991991997;
    REQUIRE(s.eigenvalues.size() == 3);
    CHECK(testing::close(s.eigenvalues[0], cplx(-chi, 0), 1e-12));
    CHECK(testing::close(s.eigenvalues[1], cplx(0, 0), 1e-12));
    CHECK(testing::close(s.eigenvalues[2], cplx(chi, 0), 1e-12));
    CHECK(s.ep_order == 1);
    CHECK(s.phase == Phase::stable);
    CHECK(s.chi == doctest::Approx(chi).epsilon(1e-14));
    CHECK(s.cardano_deviation < 1e-12);
    CHECK(s.max_residual < 1e-12);
}

TEST_CASE("reducible counterexample") {
    // lambda_0 = eps, lambda_pm = (eps +- sqrt(4 + eps^2 - 4 g^2)) / 2
    const Spectrum s = eigensolve(build_system(counterexample(1.2, 0.01)));
    CHECK(s.ep_order == 1);
    CHECK(s.phase == Phase::unstable);
    const double im = 0.6633061133443585;
    CHECK(testing::close(s.eigenvalues[0], cplx(0.005, -im), 1e-12));
    CHECK(testing::close(s.eigenvalues[1], cplx(0.005, im), 1e-12));
    CHECK(testing::close(s.eigenvalues[2], cplx(0.01, 0), 1e-12));
}

TEST_CASE("cubic discriminant") {
    const CubicDiscriminant at = cubic_discriminant(ep3_sensor(1.0));
    CHECK(at.x == 0.0);
    CHECK(at.y == 0.0);
    CHECK(at.D == 0.0);
    const CubicDiscriminant lo = cubic_discriminant(ep3_sensor(0.95));
    CHECK(lo.x == doctest::Approx(-0.0325).epsilon(1e-12));
    CHECK(std::abs(lo.y) < 1e-15);
    CHECK(lo.D == doctest::Approx(-3.43281250000002e-05).epsilon(1e-10));
    const CubicDiscriminant hi = cubic_discriminant(ep3_sensor(1.05));
    CHECK(hi.x == doctest::Approx(0.03416666666666676).epsilon(1e-12));
    CHECK(hi.D > 0.0);
    CHECK(eigensolve(build_system(ep3_sensor(1.05))).phase == Phase::unstable);
}

TEST_CASE("discriminant sign agrees with the eigenvalue phase") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ug(0.5, 1.5), ue(-0.3, 0.3);
    int compared = 0;
    for (int k = 0; k < 300; ++k) {
        SystemConfig c = ep3_sensor(ug(rng));
        c.epsilon = {ue(rng), ue(rng)};
        const CubicDiscriminant d = cubic_discriminant(c);
        if (std::abs(d.D) < 1e-10) continue;
        const Spectrum s = eigensolve(build_system(c));
        CHECK((d.D > 0) == (s.phase == Phase::unstable));
        ++compared;
    }
    CHECK(compared > 250);
}

TEST_CASE("phase classification") {
    Spectrum s;
    s.eigenvalues = {cplx(-0.31225, 0), cplx(0, 0), cplx(0.31225, 0)};
    CHECK(classify_phase(s, 1e-9) == Phase::stable);
    s.eigenvalues = {cplx(0.005, -0.66332), cplx(0.005, 0.66332), cplx(0.01, 0)};
    CHECK(classify_phase(s, 1e-9) == Phase::unstable);
    s.eigenvalues = {0.0, 0.0, 0.0};
    s.ep_order = 3;
    CHECK(classify_phase(s, 1e-9) == Phase::exceptional);
}

TEST_CASE("Aberth roots of known polynomials") {
    using cl = std::complex<long double>;
    // (z - 1)(z + 2)(z - 3i)
    const std::vector<cl> p{1.0L, cl(1.0L, -3.0L), cl(-2.0L, -3.0L), cl(0.0L, 6.0L)};
    std::vector<cplx> r = polynomial_roots(p);
    std::vector<cplx> want{1.0, -2.0, cplx(0, 3)};
    sort_eigenvalues(r);
    sort_eigenvalues(want);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(r[k] - want[k]) < 1e-13);
    // exact zero roots
    for (const cplx& z : polynomial_roots({1.0L, 0.0L, 0.0L, 0.0L})) CHECK(std::abs(z) == 0.0);
    const std::vector<cplx> q = polynomial_roots({1.0L, 0.0L, -4.0L, 0.0L});
    CHECK(std::count_if(q.begin(), q.end(), [](cplx z) { return std::abs(z) < 1e-15; }) == 1);
}

TEST_CASE("Cardano and companion roots agree on random cubics") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const cplx c2(n(rng), n(rng)), c1(n(rng), n(rng)), c0(n(rng), n(rng));
        auto a = cardano_roots(c2, c1, c0);
        std::vector<cplx> ca(a.begin(), a.end());
        std::vector<cplx> ab = polynomial_roots({1.0L, std::complex<long double>(c2), std::complex<long double>(c1),
                                                 std::complex<long double>(c0)});
        ab = match_branches(ca, ab);
        for (int j = 0; j < 3; ++j) CHECK(std::abs(ca[j] - ab[j]) < 1e-9);
    }
}

TEST_CASE("eigenvectors satisfy both eigen-equations") {
    std::mt19937_64 rng(3);
    for (int n = 2; n <= 6; ++n)
        for (int rep = 0; rep < 10; ++rep) {
            const SystemConfig c = testing::random_config(rng, n, rep % 2 == 1);
            const DynamicalMatrix dm = build_system(c);
            const Spectrum s = eigensolve(dm);
            CHECK(s.max_residual < 1e-8 * s.scale);
            // trace and determinant invariants
            cplx tr = 0, det = 1;
            for (const cplx& l : s.eigenvalues) tr += l, det *= l;
            CHECK(std::abs(tr - dm.reduced.trace()) < 1e-10 * s.scale * n);
            CHECK(std::abs(det - dm.reduced.determinant()) < 1e-8 * std::pow(s.scale, n));
        }
}

TEST_CASE("biorthonormal eigenvectors away from coalescence") {
    const Spectrum s = eigensolve(build_system(ep3_sensor(0.95)));
    REQUIRE(s.biorthonormal);
    const MatC gram = s.left.adjoint() * s.right;
    CHECK(max_abs(gram - MatC::Identity(3, 3)) < 1e-10);
}

TEST_CASE("EP4 four-fold coalescence") {
    const Spectrum s = eigensolve(build_system(ep4_config(0.2)));
    CHECK(s.ep_order == 4);
    CHECK(std::abs(s.ep_value - cplx(0.4422689813358516, 0.0)) < 1e-5);
}

TEST_CASE("cluster detection uses symmetric functions, not radius") {
    // three roots at u^(1/3) around 1, as produced by rounding at an EP3
    const double r = 5e-6;
    std::vector<cplx> roots;
    for (int k = 0; k < 3; ++k) roots.push_back(1.0 + r * std::polar(1.0, 2 * M_PI * k / 3));
    roots.push_back(3.0);
    CHECK(largest_cluster(roots, 3.0, 1e-6).order() == 3);
    // a well separated pair is not a cluster
    CHECK(largest_cluster({cplx(0.0), cplx(0.1), cplx(2.0)}, 2.0, 1e-6).order() == 1);
}

TEST_CASE("branch matching follows nearest neighbours") {
    const std::vector<cplx> prev{1.0, 2.0, 3.0};
    const std::vector<cplx> next{3.01, 0.99, 2.02};
    const std::vector<cplx> m = match_branches(prev, next);
    CHECK(m[0] == cplx(0.99));
    CHECK(m[1] == cplx(2.02));
    CHECK(m[2] == cplx(3.01));
}

TEST_CASE("Puiseux branches at small eps") {
    // numeric reference: 40-digit eigenvalues, tests/oracles/derive.py
    const auto same = perturbed_eigenvalues_analytic(1e-6, PerturbationCase::same);
    CHECK(same[1].real() == doctest::Approx(0.012599210525405415).epsilon(1e-4));
    CHECK(std::abs(same[1].imag()) < 1e-15);
    const auto diff = perturbed_eigenvalues_analytic(1e-6, PerturbationCase::different);
    CHECK(diff[1].real() == doctest::Approx(0.009999666677777531).epsilon(1e-4));
    for (const cplx& l : perturbed_eigenvalues_analytic(0.0, PerturbationCase::same)) CHECK(std::abs(l) == 0.0);
    // the three branches are rotations of each other
    CHECK(std::abs(same[0] - same[1] * std::polar(1.0, -2 * M_PI / 3)) < 1e-15);
    CHECK(std::abs(same[2] - same[1] * std::polar(1.0, 2 * M_PI / 3)) < 1e-15);
}

TEST_CASE("Puiseux exponents") {
    std::vector<double> eps;
    for (int k = 0; k < 25; ++k) eps.push_back(1e-9 * std::pow(1e4, k / 24.0));
    const SystemConfig ep3 = ep3_sensor(1.0);
    const PuiseuxFit same = puiseux_fit(ep3, eps, perturbation_direction(ep3, PerturbationCase::same));
    const PuiseuxFit diff = puiseux_fit(ep3, eps, perturbation_direction(ep3, PerturbationCase::different));
    CHECK(same.slope == doctest::Approx(1.0 / 3).epsilon(0.06));
    CHECK(diff.slope == doctest::Approx(1.0 / 3).epsilon(0.06));
    CHECK(same.branch_prefactor / diff.branch_prefactor == doctest::Approx(std::cbrt(2.0)).epsilon(0.01));

    const SystemConfig ep4 = ep4_config(0.2);
    const PuiseuxFit f4 = puiseux_fit(ep4, eps, perturbation_direction(ep4, PerturbationCase::same));
    CHECK(std::abs(f4.slope - 0.25) < 0.02);

    // square-root branch point of the reducible system: eps_1 = -eps_2 = e and
    // g = sqrt(1 + e^2/4), moved along the counterexample direction
    const double e = 0.01;
    SystemConfig ep2 = ep3_sensor(std::sqrt(1.0 + e * e / 4.0));
    ep2.epsilon = {e, -e};
    const Spectrum s2 = eigensolve(build_system(ep2));
    CHECK(s2.ep_order == 2);
    const PuiseuxFit f2 = puiseux_fit(ep2, eps, {1.0, -1.0});
    CHECK(std::abs(f2.slope - 0.5) < 0.02);
}

TEST_CASE("linear fit recovers an exact line") {
    const LinearFit f = linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r_squared == doctest::Approx(1.0));
}
