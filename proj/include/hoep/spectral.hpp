#pragma once

#include <array>
#include <string>
#include <vector>

#include "hoep/common.hpp"
#include "hoep/model.hpp"

namespace hoep {

enum class Phase { stable, unstable, exceptional };
std::string to_string(Phase p);

// Coalescence test. A group of k roots with centroid c counts as one k-fold
// root when every elementary symmetric function e_j (j >= 2) of the shifted
// roots r_i - c satisfies |e_j| <= tol * scale^j, i.e. when a relative
// coefficient perturbation of size tol could merge them. A plain radius test
// does not work at an EPk: rounding the matrix entries alone splits the
// roots by O(u^(1/k)).
struct Cluster {
    std::vector<int> members;
    cplx centroid{0.0, 0.0};
    int order() const { return static_cast<int>(members.size()); }
};

Cluster largest_cluster(const std::vector<cplx>& roots, double scale, double tol);

struct Spectrum {
    std::vector<cplx> eigenvalues;  // sorted by (Re, Im)
    MatC right;                     // columns: h R = lambda R
    MatC left;                      // columns: h^dagger L = conj(lambda) L, L^dagger R = 1 where defined
    Phase phase = Phase::stable;
    int ep_order = 1;
    cplx ep_value{0.0, 0.0};  // centroid of the largest cluster
    double scale = 1.0;       // max(1, ||h||_2)
    double chi = 0.0;         // sqrt(kappa^2 - g^2 - gamma_-^2/4) for n=3, m=1; NaN otherwise
    double cardano_deviation = 0.0;  // n=3: distance between the analytic and polynomial routes
    double max_residual = 0.0;       // worst ||h R - lambda R|| and ||L^dagger h - lambda L^dagger||
    bool biorthonormal = true;       // false near coalescence where L^dagger R vanishes
};

struct SpectralOptions {
    double cluster_tol = 1e-6;
    double phase_tol = 1e-9;
};

// det(lambda I - h) as monic coefficients, highest degree first.
std::vector<std::complex<long double>> characteristic_polynomial(const MatC& h);

// All roots of a monic polynomial (highest degree first) by Aberth iteration.
std::vector<cplx> polynomial_roots(const std::vector<std::complex<long double>>& coeffs,
                                   int max_iter = 2000);

// Roots of lambda^3 + c2 lambda^2 + c1 lambda + c0 by Cardano's formula.
std::array<cplx, 3> cardano_roots(cplx c2, cplx c1, cplx c0);

void sort_eigenvalues(std::vector<cplx>& ev);

Spectrum eigensolve(const DynamicalMatrix& dm, const SpectralOptions& opt = {});

struct CubicDiscriminant {
    double x = 0, y = 0, D = 0;
};

// Depressed-cubic invariants of the n=3, m=1 characteristic equation.
CubicDiscriminant cubic_discriminant(const SystemConfig& config);

// Stable when no eigenvalue grows (Im lambda < tol); exceptional when a
// coalescence was detected; unstable otherwise.
Phase classify_phase(const Spectrum& spec, double tol);

enum class PerturbationCase { same, different };
PerturbationCase parse_perturbation_case(const std::string& s);

// Leading Puiseux branches at the EP3 for a perturbation of size eps:
// eps_1 = eps_2 = -eps (same) or eps_1 = -eps, eps_2 = 0 (different).
// Ordered {e^{-i2pi/3}, 1, e^{i2pi/3}} times the real branch.
std::array<cplx, 3> perturbed_eigenvalues_analytic(double eps, PerturbationCase pc);

// d epsilon_i / d eps for the named case on a config with n-1 magnons.
std::vector<double> perturbation_direction(const SystemConfig& config, PerturbationCase pc);

struct PuiseuxFit {
    double slope = 0, intercept = 0, r_squared = 0;
    double eps_min = 0, eps_max = 0;
    double branch_prefactor = 0;  // exp(intercept)
    int points = 0;
    cplx ep_value{0.0, 0.0};
    std::vector<double> eps;
    std::vector<double> splitting;  // |lambda(eps) - lambda_EP| of the tracked branch
};

// Log-log least squares of the splitting of the branch with the smallest
// |arg(lambda - lambda_EP)|; the other branches differ only by a phase.
PuiseuxFit puiseux_fit(const SystemConfig& at_ep, const std::vector<double>& eps_grid,
                       const std::vector<double>& direction, const SpectralOptions& opt = {});

// Reorder `next` to follow `prev` by nearest-neighbour matching.
std::vector<cplx> match_branches(const std::vector<cplx>& prev, const std::vector<cplx>& next);

struct LinearFit {
    double slope = 0, intercept = 0, r_squared = 0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hoep
