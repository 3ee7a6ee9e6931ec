#include "hoep/perturb.hpp"

#include <algorithm>
#include <cmath>

namespace hoep {

namespace {
const cplx I(0.0, 1.0);

double chi_of(double g) {
    if (!(g >= 0.0 && g < 1.0)) throw RegimeError("perturbation theory needs 0 <= g < kappa = 1");
    return std::sqrt(1.0 - g * g);
}
}  // namespace

MatC basis_matrix(double g, double gamma, double Gamma) {
    MatC h(3, 3);
    h << -I * Gamma, 0.0, g,
         0.0, -I * Gamma, -1.0,
         -g, -1.0, -I * gamma;
    return h;
}

BiorthogonalBasis biorthogonal_basis(double g, double gamma, double Gamma) {
    if (!(g >= 0.0 && g < 1.0)) throw RegimeError("biorthogonal_basis: needs 0 <= g < 1 (stable side)");
    if (gamma < 0.0 || Gamma < 0.0) throw ConfigError("biorthogonal_basis: decay rates must be >= 0");
    BiorthogonalBasis b;
    b.g = g;
    b.gamma_minus = gamma - Gamma;
    b.gamma_plus = gamma + Gamma;
    const double chi2 = 1.0 - g * g - b.gamma_minus * b.gamma_minus / 4.0;
    if (!(chi2 > 0.0)) throw RegimeError("biorthogonal_basis: chi^2 <= 0, basis undefined at or beyond the EP");
    const double chi = std::sqrt(chi2);
    b.chi = chi;
    const cplx hg = I * b.gamma_minus / 2.0;

    b.eigenvalues[kZero] = -I * Gamma;
    b.eigenvalues[kPlus] = -I * b.gamma_plus / 2.0 + chi;
    b.eigenvalues[kMinus] = -I * b.gamma_plus / 2.0 - chi;

    const double n0 = 1.0 / std::sqrt(chi2 + b.gamma_minus * b.gamma_minus / 4.0);
    b.right[kZero] = VecC(3);
    b.right[kZero] << n0, -g * n0, 0.0;
    b.left[kZero] = VecC(3);
    b.left[kZero] << n0, g * n0, 0.0;

    for (int s : {+1, -1}) {
        const int idx = s > 0 ? kPlus : kMinus;
        const cplx nr = 1.0 / std::sqrt(2.0 * chi * (chi - double(s) * hg));
        const cplx nl = 1.0 / std::sqrt(2.0 * chi * (chi + double(s) * hg));
        b.right[idx] = VecC(3);
        b.right[idx] << g * nr, -nr, (-hg + double(s) * chi) * nr;
        b.left[idx] = VecC(3);
        b.left[idx] << -g * nl, -nl, (hg + double(s) * chi) * nl;
    }
    return b;
}

FirstOrderEigenvalues first_order_eigenvalues(const BiorthogonalBasis& basis, double eps1,
                                              double eps2, double max_ratio) {
    const VecC hp_diag = (VecC(3) << eps1, -eps2, 0.0).finished();
    FirstOrderEigenvalues out;
    for (int s = 0; s < 3; ++s) {
        const cplx shift = basis.left[s].dot(hp_diag.cwiseProduct(basis.right[s]));
        out.values[s] = basis.eigenvalues[s] + shift;
    }
    out.ratio = std::max(std::abs(eps1), std::abs(eps2)) / std::pow(basis.chi, 3);
    out.valid = out.ratio < max_ratio;
    return out;
}

PropagatorCoefficients coefficients_from_matrix(const MatC& k) {
    PropagatorCoefficients c;
    c.A1 = k(0, 0);
    c.C = k(0, 1);
    c.B = I * k(0, 2);
    c.A2 = k(1, 1);
    c.D = -I * k(1, 2);
    c.Aa = k(2, 2);
    return c;
}

MatC matrix_from_coefficients(const PropagatorCoefficients& c) {
    MatC k(3, 3);
    k << c.A1, c.C, -I * c.B,
         -c.C, c.A2, I * c.D,
         I * c.B, I * c.D, c.Aa;
    return k;
}

PropagatorCoefficients first_order_propagator(double g, double e1, double e2, double t,
                                              double max_ratio) {
    const double chi = chi_of(g);
    const double g2 = g * g;
    const double x2 = chi * chi, x3 = x2 * chi, x4 = x2 * x2, x5 = x4 * chi, x6 = x3 * x3;
    const double x7 = x6 * chi, x8 = x4 * x4;
    const double c = std::cos(chi * t), s = std::sin(chi * t);
    // slow phases of the zero mode and of the oscillating pair
    const cplx e0 = std::exp(-I * (e1 + g2 * e2) * t / x2);
    const cplx ep = std::exp(I * (g2 * e1 + e2) * t / (2.0 * x2));
    const double u = g2 * e1 - 4.0 * e1 - 3.0 * e2;
    const double v = g2 * e1 + e2;
    const double w = 3.0 * g2 * e1 + 4.0 * g2 * e2 - e2;
    const double sum = e1 + e2;

    PropagatorCoefficients k;
    k.A1 = e0 / x2 - g2 * ep / (16.0 * x8) * (16.0 * x6 + u * u) * c - I * g2 * ep / (2.0 * x5) * u * s;
    k.Aa = -g2 * sum * sum * e0 / x6 + ep / (16.0 * x6) * (16.0 * x6 + v * v) * c - I * ep / (2.0 * x3) * v * s;
    k.A2 = -g2 * e0 / x2 + ep / (16.0 * x8) * (16.0 * x6 + w * w) * c - I * ep / (2.0 * x5) * w * s;
    k.B = -I * g * sum * e0 / x4 + g * ep / (16.0 * x7) * (16.0 * x6 - v * u) * s + I * g * sum * ep / x4 * c;
    k.C = g * e0 / x2 - g * ep / (16.0 * x8) * (16.0 * x6 - w * u) * c +
          I * g * ep / (2.0 * x5) * (g2 * e1 + 2.0 * g2 * e2 + 2.0 * e1 + e2) * s;
    k.D = -I * g2 * sum * e0 / x4 + ep / (16.0 * x7) * (16.0 * x6 + v * w) * s + I * g2 * sum * ep / x4 * c;
    k.ratio = std::max(std::abs(e1), std::abs(e2)) / x3;
    k.valid = k.ratio < max_ratio;
    return k;
}

PropagatorCoefficients first_order_propagator_numeric(double g, double e1, double e2, double t) {
    const BiorthogonalBasis b = biorthogonal_basis(g);
    const VecC hp = (VecC(3) << e1, -e2, 0.0).finished();
    auto elem = [&](const VecC& l, const VecC& r) { return l.dot(hp.cwiseProduct(r)); };
    const FirstOrderEigenvalues lam = first_order_eigenvalues(b, e1, e2);

    MatC k = MatC::Zero(3, 3);
    for (int s = 0; s < 3; ++s) {
        VecC r = b.right[s];
        VecC l = b.left[s];
        for (int q = 0; q < 3; ++q) {
            if (q == s) continue;
            r += elem(b.left[q], b.right[s]) / (b.eigenvalues[s] - b.eigenvalues[q]) * b.right[q];
            l += std::conj(elem(b.left[s], b.right[q])) /
                 std::conj(b.eigenvalues[s] - b.eigenvalues[q]) * b.left[q];
        }
        k += std::exp(-I * lam.values[s] * t) * r * l.adjoint();
    }
    PropagatorCoefficients c = coefficients_from_matrix(k);
    c.ratio = lam.ratio;
    c.valid = lam.valid;
    return c;
}

PropagatorCoefficients exact_coefficients(double g, double e1, double e2, double t) {
    MatC h = basis_matrix(g, 0.0, 0.0);
    h(0, 0) += e1;
    h(1, 1) -= e2;
    PropagatorCoefficients c = coefficients_from_matrix(expm(MatC(-I * t * h)));
    const double chi2 = 1.0 - g * g;
    c.ratio = chi2 > 0 ? std::max(std::abs(e1), std::abs(e2)) / std::pow(chi2, 1.5) : INFINITY;
    return c;
}

double coefficient_error(const PropagatorCoefficients& a, const PropagatorCoefficients& e) {
    const std::array<cplx, 6> av{a.A1, a.A2, a.Aa, a.B, a.C, a.D};
    const std::array<cplx, 6> ev{e.A1, e.A2, e.Aa, e.B, e.C, e.D};
    double num = 0.0, den = 0.0;
    for (int k = 0; k < 6; ++k) {
        num = std::max(num, std::abs(av[k] - ev[k]));
        den = std::max(den, std::abs(ev[k]));
    }
    return num / den;
}

CoefficientDerivatives susceptibility_derivatives(double g, double t, PerturbationCase pc) {
    const double chi = chi_of(g);
    const double g2 = g * g;
    const double u = chi * t;
    const double c = std::cos(u), s = std::sin(u);
    const double k = 1.0 / std::pow(chi, 5);
    CoefficientDerivatives d;
    if (pc == PerturbationCase::same) {
        const double a = 1.0 + g2;
        d.dA1 = -I * (a * u + g2 * a * u * c / 2.0 + g2 * (g2 - 7.0) * s / 2.0) * k;
        d.dA2 = I * (g2 * a * u + a * u * c / 2.0 + (1.0 - 7.0 * g2) * s / 2.0) * k;
        d.dC = -I * (g * a * u + g * a * u * c / 2.0 - 3.0 * g * a * s / 2.0) * k;
    } else {
        d.dA1 = -I * (u + g2 * g2 * u * c / 2.0 + g2 * (g2 - 4.0) * s / 2.0) * k;
        // sine coefficient is 3g^2: differentiating the A2 closed form with eps_2 = 0
        d.dA2 = I * (g2 * u + g2 * u * c / 2.0 - 3.0 * g2 * s / 2.0) * k;
        d.dC = -I * (g * u + g2 * g * u * c / 2.0 - g * (2.0 + g2) * s / 2.0) * k;
    }
    return d;
}

}  // namespace hoep
