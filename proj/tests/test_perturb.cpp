#include "hoep/model.hpp"
#include "hoep/perturb.hpp"
#include "hoep/spectral.hpp"

#include "support.hpp"

using namespace hoep;

namespace {

std::vector<cplx> exact_eigenvalues(double g, double e1, double e2) {
    SystemConfig c = ep3_sensor(g);
    c.epsilon = {e1, e2};
    return eigensolve(build_system(c)).eigenvalues;
}

cplx nearest(const std::vector<cplx>& v, cplx z) {
    cplx best = v[0];
    for (const cplx& x : v)
        if (std::abs(x - z) < std::abs(best - z)) best = x;
    return best;
}

}  // namespace

TEST_CASE("unperturbed biorthogonal basis") {
    const BiorthogonalBasis b = biorthogonal_basis(0.95);
    const double chi = 0.31224989991991997;
    CHECK(b.chi == doctest::Approx(chi).epsilon(1e-14));
    CHECK(std::abs(b.eigenvalues[kZero]) < 1e-15);
    CHECK(testing::close(b.eigenvalues[kPlus], cplx(chi, 0), 1e-14));
    CHECK(testing::close(b.eigenvalues[kMinus], cplx(-chi, 0), 1e-14));
    // R_0 is along (1, -g, 0)
    const VecC& r0 = b.right[kZero];
    CHECK(std::abs(r0(1) / r0(0) + 0.95) < 1e-14);
    CHECK(std::abs(r0(2)) < 1e-15);
    const MatC h = basis_matrix(0.95, 0.0, 0.0);
    for (int s = 0; s < 3; ++s) {
        CHECK((h * b.right[s] - b.eigenvalues[s] * b.right[s]).norm() < 1e-13);
        for (int q = 0; q < 3; ++q) {
            const cplx ip = b.left[s].dot(b.right[q]);
            CHECK(std::abs(ip - (s == q ? 1.0 : 0.0)) < 1e-13);
        }
    }
}

TEST_CASE("lossy basis") {
    const BiorthogonalBasis b = biorthogonal_basis(0.95, 0.1, 0.01);
    CHECK(b.chi == doctest::Approx(0.30899029110960785).epsilon(1e-12));
    CHECK(testing::close(b.eigenvalues[kPlus], cplx(0.30899029110960785, -0.055), 1e-12));
    CHECK(testing::close(b.eigenvalues[kMinus], cplx(-0.30899029110960785, -0.055), 1e-12));
    CHECK(testing::close(b.eigenvalues[kZero], cplx(0.0, -0.01), 1e-12));
    const MatC h = basis_matrix(0.95, 0.1, 0.01);
    for (int s = 0; s < 3; ++s) {
        CHECK((h * b.right[s] - b.eigenvalues[s] * b.right[s]).norm() < 1e-12);
        CHECK((b.left[s].adjoint() * h - b.eigenvalues[s] * b.left[s].adjoint()).norm() < 1e-12);
    }
}

TEST_CASE("first-order eigenvalues") {
    const BiorthogonalBasis b = biorthogonal_basis(0.95);
    const FirstOrderEigenvalues same = first_order_eigenvalues(b, 1e-5, 1e-5);
    CHECK(same.values[kZero].real() == doctest::Approx(1e-5 * 1.9025 / 0.0975).epsilon(1e-12));
    // exact: 1.9512828113033622e-4 (tests/oracles/derive.py)
    CHECK(std::abs(same.values[kZero].real() - 1.9512828113033622e-4) < 1e-8);

    const FirstOrderEigenvalues zero = first_order_eigenvalues(b, 0.0, 0.0);
    for (int s = 0; s < 3; ++s) CHECK(std::abs(zero.values[s] - b.eigenvalues[s]) < 1e-15);

    // shifts against exact eigenvalues: the remainder is second order
    for (auto [e1, e2] : {std::pair{1e-5, 0.0}, std::pair{1e-5, 1e-5}, std::pair{-2e-5, 1e-5}}) {
        const FirstOrderEigenvalues f = first_order_eigenvalues(b, e1, e2);
        const auto ex = exact_eigenvalues(0.95, e1, e2);
        for (int s = 0; s < 3; ++s) {
            const cplx exact = nearest(ex, f.values[s]);
            const double shift = std::abs(exact - b.eigenvalues[s]);
            CHECK(std::abs(f.values[s] - exact) < 1e-3 * shift + 1e-14);
        }
    }
    CHECK(first_order_eigenvalues(b, 0.01, 0.0).valid == false);
}

TEST_CASE("lossy first-order eigenvalue of the zero mode keeps its damping") {
    const BiorthogonalBasis b = biorthogonal_basis(0.95, 0.1, 0.01);
    const FirstOrderEigenvalues f = first_order_eigenvalues(b, 1e-5, 1e-5);
    CHECK(f.values[kZero].imag() == doctest::Approx(-0.01).epsilon(1e-3));
}

TEST_CASE("propagation coefficients") {
    const double chi = std::sqrt(1 - 0.95 * 0.95);
    const PropagatorCoefficients id = first_order_propagator(0.95, 0.0, 0.0, 2 * M_PI / chi);
    CHECK(std::abs(id.A1 - 1.0) < 1e-12);
    CHECK(std::abs(id.A2 - 1.0) < 1e-12);
    CHECK(std::abs(id.Aa - 1.0) < 1e-12);
    CHECK(std::abs(id.B) < 1e-12);
    CHECK(std::abs(id.C) < 1e-12);
    CHECK(std::abs(id.D) < 1e-12);

    // round trip through the matrix form
    const PropagatorCoefficients ex = exact_coefficients(0.95, 1e-3, 1.5e-3, 3.0);
    const PropagatorCoefficients back = coefficients_from_matrix(matrix_from_coefficients(ex));
    CHECK(coefficient_error(back, ex) < 1e-15);

    // closed form and numeric assembly are the same approximation
    for (double t : {1.0, 10.0, 2 * M_PI / chi}) {
        const auto a = first_order_propagator(0.95, 1e-5, 2e-5, t);
        const auto n = first_order_propagator_numeric(0.95, 1e-5, 2e-5, t);
        CHECK(coefficient_error(a, n) < 1e-4);
    }
}

TEST_CASE("first-order propagator error grows about quadratically in eps/chi^3") {
    const double g = 0.95, chi = std::sqrt(1 - g * g), t = 2 * M_PI / chi;
    const double x3 = std::pow(chi, 3);
    std::vector<double> lx, ly;
    for (double r : {0.001, 0.002, 0.004, 0.008, 0.016, 0.032}) {
        const double e = r * x3;
        lx.push_back(std::log(r));
        ly.push_back(std::log(coefficient_error(first_order_propagator(g, e, e, t), exact_coefficients(g, e, e, t))));
    }
    const double slope = linear_fit(lx, ly).slope;
    CHECK(slope > 1.7);
    CHECK(slope < 2.1);
    CHECK(std::exp(ly.front()) < 1e-4);
}

TEST_CASE("moderate perturbation over ten periods") {
    const double t = 20 * M_PI;
    const double err = coefficient_error(first_order_propagator(0.95, 1e-3, 1.5e-3, t),
                                         exact_coefficients(0.95, 1e-3, 1.5e-3, t));
    CHECK(err < 0.05);
}

TEST_CASE("coefficient derivatives against exact finite differences") {
    const double g = 0.95, chi = std::sqrt(1 - g * g);
    const double h = 1e-8;
    for (double t : {0.0, 3.0, M_PI / chi, 2 * M_PI / chi})
        for (PerturbationCase pc : {PerturbationCase::same, PerturbationCase::different}) {
            const double e2 = pc == PerturbationCase::same ? 1.0 : 0.0;
            const auto p = exact_coefficients(g, h, e2 * h, t);
            const auto m = exact_coefficients(g, -h, -e2 * h, t);
            const CoefficientDerivatives d = susceptibility_derivatives(g, t, pc);
            const cplx fd_a1 = (p.A1 - m.A1) / (2 * h), fd_a2 = (p.A2 - m.A2) / (2 * h), fd_c = (p.C - m.C) / (2 * h);
            const double scale = std::max({1.0, std::abs(fd_a1), std::abs(fd_a2), std::abs(fd_c)});
            CHECK(std::abs(d.dA1 - fd_a1) < 1e-5 * scale);
            CHECK(std::abs(d.dA2 - fd_a2) < 1e-5 * scale);
            CHECK(std::abs(d.dC - fd_c) < 1e-5 * scale);
        }
    const CoefficientDerivatives zero = susceptibility_derivatives(g, 0.0, PerturbationCase::same);
    CHECK(std::abs(zero.dA1) == 0.0);
    CHECK(std::abs(zero.dA2) == 0.0);
    CHECK(std::abs(zero.dC) == 0.0);
    const CoefficientDerivatives wp = susceptibility_derivatives(g, 2 * M_PI / chi, PerturbationCase::same);
    CHECK(testing::close(wp.dC, cplx(0, -3 * M_PI * g * (1 + g * g) / std::pow(chi, 5)), 1e-6));
}
