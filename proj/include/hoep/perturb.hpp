#pragma once

#include <array>

#include "hoep/common.hpp"
#include "hoep/spectral.hpp"

namespace hoep {

// Index order used for the three-mode eigenbasis.
enum BasisIndex { kZero = 0, kPlus = 1, kMinus = 2 };

// Unperturbed n=3, m=1 system at delta = 0, kappa = 1 with losses.
// Inner products are <L|R> = L^dagger R.
struct BiorthogonalBasis {
    std::array<VecC, 3> right;
    std::array<VecC, 3> left;
    std::array<cplx, 3> eigenvalues;
    double g = 0;
    double chi = 0;
    double gamma_minus = 0;
    double gamma_plus = 0;
};

BiorthogonalBasis biorthogonal_basis(double g, double gamma = 0.0, double Gamma = 0.0);

// Unperturbed reduced matrix matching the basis above.
MatC basis_matrix(double g, double gamma, double Gamma);

struct FirstOrderEigenvalues {
    std::array<cplx, 3> values;  // (0, +, -)
    double ratio = 0;            // max|eps_i| / chi^3
    bool valid = true;           // ratio below the threshold
};

FirstOrderEigenvalues first_order_eigenvalues(const BiorthogonalBasis& basis, double eps1,
                                              double eps2, double max_ratio = 0.1);

// Propagation coefficients: K = [[A1, C, -iB], [-C, A2, iD], [iB, iD, Aa]]
// in the basis (b1, b2^+, a^+).
struct PropagatorCoefficients {
    cplx A1, A2, Aa, B, C, D;
    double ratio = 0;
    bool valid = true;
};

PropagatorCoefficients coefficients_from_matrix(const MatC& k);
MatC matrix_from_coefficients(const PropagatorCoefficients& c);

// Closed-form lossless first-order coefficients (kappa = 1).
PropagatorCoefficients first_order_propagator(double g, double eps1, double eps2, double t,
                                              double max_ratio = 0.1);

// Same order of approximation assembled numerically from first-order
// perturbed eigenvectors: K ~ sum_s exp(-i lambda'_s t) |R'_s><L'_s|.
PropagatorCoefficients first_order_propagator_numeric(double g, double eps1, double eps2,
                                                      double t);

// Exact coefficients from exp(-i h t) of the perturbed lossless matrix.
PropagatorCoefficients exact_coefficients(double g, double eps1, double eps2, double t);

// max_k |approx_k - exact_k| / max_k |exact_k| over the six coefficients.
double coefficient_error(const PropagatorCoefficients& approx, const PropagatorCoefficients& exact);

struct CoefficientDerivatives {
    cplx dA1, dA2, dC;
};

// d/d eps at eps = 0 for eps_1 = eps_2 = eps (same) or eps_1 = eps, eps_2 = 0 (different).
CoefficientDerivatives susceptibility_derivatives(double g, double t, PerturbationCase pc);

}  // namespace hoep
