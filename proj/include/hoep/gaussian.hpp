#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "hoep/common.hpp"
#include "hoep/model.hpp"

namespace hoep {

// Quadratures X = (b + b^+)/sqrt2, P = (b - b^+)/(i sqrt2); vacuum variance 1/2.
// Mode order (b_1, ..., b_{n-1}, a), then any appended read-out modes.
struct GaussianState {
    VecR mu;
    MatR Lambda;
    std::vector<std::string> labels;
    double t = 0.0;

    int modes() const { return static_cast<int>(mu.size() / 2); }
};

GaussianState vacuum_state(int modes);
GaussianState coherent_init(const SystemConfig& config);

struct Propagator {
    MatC K;       // reduced-basis field propagator exp(-i h t)
    MatR S_quad;  // quadrature map mu -> S mu
    double t = 0.0;
    std::string method;  // "eigen" or "expm"
    double condition = 0.0;
};

// Eigendecomposition while the eigenvector matrix has condition number below
// `cond_limit`, scaling-and-squaring exponential otherwise (defective points).
Propagator propagator(const SystemConfig& config, double t, double cond_limit = 1e8);

// Lift a reduced-basis operator map to quadratures.
MatR quadrature_map(const MatC& k_reduced, int n, int m);

// Real drift A with d mu/dt = A mu, including losses.
MatR quadrature_drift(const SystemConfig& config);

GaussianState evolve(const GaussianState& state, const Propagator& p);

struct LossyOptions {
    double rel_tol = 1e-10;
    int max_refinements = 10;
    int fixed_steps = 0;  // > 0 disables refinement; used for finite differences
};

struct LossyDiagnostics {
    int steps = 0;
    double step = 0.0;
    double change_on_halving = 0.0;
};

// RK4 on d mu/dt = A mu, d Lambda/dt = A Lambda + Lambda A^T + D with the
// diffusion D fixed by requiring a decoupled lossy mode to keep vacuum
// covariance I/2; the step is halved until the result is stable.
GaussianState evolve_lossy(const GaussianState& state, const SystemConfig& config, double t,
                           const LossyOptions& opt = {}, LossyDiagnostics* diag = nullptr);

// Diffusion matrix of the system modes implied by the vacuum fixed point.
MatR diffusion_matrix(const SystemConfig& config);

std::vector<double> excitation_numbers(const GaussianState& state);

// Appends one vacuum read-out mode per magnon index in `magnons` (0-based)
// and rotates each pair by the beam-splitter angle theta_t.
GaussianState readout_swap(const GaussianState& state, double theta_t,
                           const std::vector<int>& magnons);

// Beam splitter of transmissivity eta_k mixing mode k with vacuum.
GaussianState apply_external_loss(const GaussianState& state, const std::vector<double>& eta);

// Marginal (mu, Lambda) of a subset of modes.
GaussianState marginal(const GaussianState& state, const std::vector<int>& modes);

double symplectic_residual(const MatR& s);
double purity_determinant(const GaussianState& state);   // det(2 Lambda)
double uncertainty_min_eigenvalue(const GaussianState& state);  // of Lambda + i Omega/2

// Two-mode squeezing reference model (modes a, b) with
// a(t) = A a + B b^+, b(t) = A b + B a^+.
struct Ep2Coefficients {
    cplx A, B;
    double chi;
};
Ep2Coefficients ep2_coefficients(double delta, double g, double eps, double t);
MatR ep2_sigma(cplx A, cplx B);

struct BlochMessiahDecomposition {
    double phi = 0.0;
    double r = 0.0;
    MatR K_passive, L_passive, squeeze, Sigma;
    VecR xbar;
    double reconstruction_error = 0.0;
};

BlochMessiahDecomposition bloch_messiah_2mode(cplx A, cplx B, double alpha);

nlohmann::json state_to_json(const GaussianState& state);
GaussianState state_from_json(const nlohmann::json& j);

}  // namespace hoep
