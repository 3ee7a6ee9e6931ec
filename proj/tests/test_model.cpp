#include "hoep/model.hpp"

#include "support.hpp"

using namespace hoep;
using testing::close;

TEST_CASE("three-mode dynamical matrix") {
    SystemConfig c = ep3_sensor(0.7);
    c.epsilon = {0.01, 0.02};
    const MatC h = build_system(c).reduced;
    MatC want(3, 3);
    want << 0.01, 0, 0.7, 0, -0.02, -1, -0.7, -1, 0;
    CHECK(max_abs(h - want) == 0.0);
}

TEST_CASE("two-mode squeezing pair") {
    SystemConfig c;
    c.n = 2;
    c.m = 1;
    c.g = {0.4};
    c.kappa = {};
    c.delta = {0.0};
    c.epsilon = {0.0};
    const MatC h = build_system(c).reduced;
    MatC want(2, 2);
    want << 0, 0.4, -0.4, 0;
    CHECK(max_abs(h - want) == 0.0);
}

TEST_CASE("losses enter the diagonal only") {
    const SystemConfig lossless = ep3_sensor(0.95);
    const SystemConfig lossy = ep3_sensor(0.95, 1.0, 0.0, 0.1, 0.01);
    const MatC d = build_system(lossy).reduced - build_system(lossless).reduced;
    MatC want = MatC::Zero(3, 3);
    want(0, 0) = cplx(0, -0.01);
    want(1, 1) = cplx(0, -0.01);
    want(2, 2) = cplx(0, -0.1);
    CHECK(max_abs(d - want) < 1e-15);
}

TEST_CASE("full matrix holds the reduced one and its conjugate") {
    std::mt19937_64 rng(7);
    for (int n = 2; n <= 6; ++n) {
        const SystemConfig c = testing::random_config(rng, n, true);
        const DynamicalMatrix dm = build_system(c);
        REQUIRE(dm.full.rows() == 2 * (n));
        for (int r = 0; r < n; ++r)
            for (int k = 0; k < n; ++k) {
                CHECK(dm.full(full_index(c.m, r), full_index(c.m, k)) == dm.reduced(r, k));
                // conjugate block is -h^* for the time-reversed partners
                CHECK(std::abs(dm.full(full_conjugate_index(c.m, r), full_conjugate_index(c.m, k)) +
                               std::conj(dm.reduced(r, k))) < 1e-15);
            }
    }
}

TEST_CASE("symmetry residuals") {
    CHECK(check_symmetries(build_system(ep3_sensor(1.0))).particle_hole < 1e-14);
    CHECK(check_symmetries(build_system(ep3_sensor(1.0))).pseudo_hermiticity < 1e-14);
    const SymmetryReport lossy = check_symmetries(build_system(ep3_sensor(0.95, 1.0, 0.0, 0.1, 0.0)));
    CHECK(lossy.pseudo_hermiticity == doctest::Approx(0.2).epsilon(1e-12));
    const SymmetryReport ep4 = check_symmetries(build_system(ep4_config(0.2)));
    CHECK(ep4.particle_hole < 1e-14);
    CHECK(ep4.pseudo_hermiticity < 1e-14);
}

TEST_CASE("irreducibility test") {
    SystemConfig c = ep3_sensor(0.95);
    c.epsilon = {1e-3, 1.5e-3};
    CHECK(check_irreducibility(c).pass);

    c.epsilon = {0.01, -0.01};
    const IrreducibilityReport bad = check_irreducibility(c);
    CHECK_FALSE(bad.pass);
    REQUIRE(bad.violations.size() == 1);
    CHECK(bad.violations[0] == std::pair<int, int>(1, 2));

    SystemConfig two;
    two.n = 2;
    two.m = 1;
    two.kappa = {};
    two.delta = {0.0};
    two.epsilon = {0.0};
    CHECK(check_irreducibility(two).pass);
}

TEST_CASE("EP4 locus closed forms") {
    // reference: 40-digit evaluation in tests/oracles/derive.py
    const Ep4Point a = ep4_locus(0.2);
    CHECK(a.delta1 == doctest::Approx(0.8845379626717031).epsilon(1e-14));
    CHECK(a.delta2 == doctest::Approx(0.034020690871988585).epsilon(1e-14));
    CHECK(a.delta3 == doctest::Approx(-0.8505172717997146).epsilon(1e-14));
    CHECK(a.g == doctest::Approx(1.149899351473214).epsilon(1e-14));
    CHECK(a.lambda == doctest::Approx(0.4422689813358516).epsilon(1e-14));
    // caption values are rounded to four digits
    CHECK(std::abs(a.delta1 - 0.8845) < 5e-5);
    CHECK(std::abs(a.delta2 - 0.0340) < 5e-5);
    CHECK(std::abs(a.delta3 + 0.8505) < 5e-5);
    CHECK(std::abs(a.g - 1.1499) < 5e-5);

    const Ep4Point b = ep4_locus(0.5);
    CHECK(b.delta1 == doctest::Approx(3.849001794597505).epsilon(1e-14));
    CHECK(b.delta2 == doctest::Approx(0.769800358919501).epsilon(1e-14));
    CHECK(b.delta3 == doctest::Approx(-3.079201435678004).epsilon(1e-14));
    CHECK(b.g == doctest::Approx(2.4056261216234405).epsilon(1e-14));

    const Ep4Point z = ep4_locus(1e-9);
    CHECK(std::abs(z.delta1) < 1e-8);
    CHECK(std::abs(z.delta3) < 1e-8);
    CHECK(z.g == doctest::Approx(1.0));

    CHECK_THROWS_AS(ep4_locus(0.0), DomainError);
    CHECK_THROWS_AS(ep4_locus(1.0), DomainError);
}

TEST_CASE("validation rejects malformed configurations") {
    SystemConfig c = ep3_sensor(0.95);
    c.delta = {0.0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ep3_sensor(0.95);
    c.m = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ep3_sensor(0.95);
    c.gamma = -0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ep3_sensor(0.95);
    c.alpha = {1.0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("unit conversion") {
    CHECK(to_physical(0.5, 2.0 * M_PI * 5e5) == doctest::Approx(M_PI * 5e5));
}
