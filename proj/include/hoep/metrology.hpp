#pragma once

#include <string>
#include <vector>

#include "hoep/common.hpp"
#include "hoep/gaussian.hpp"
#include "hoep/model.hpp"
#include "hoep/spectral.hpp"

namespace hoep {

// O = c . (X1, P1, X2, P2, ...)
struct Observable {
    std::string name;
    VecR c;
};

Observable observable_x1_minus_x2(int n);
Observable observable_x1_plus_x2(int n);
// "x1_minus_x2" or "x1_plus_x2"; "optimal" depends on the state and is built by optimal_observable.
Observable parse_observable(const std::string& name, int n);

// Config at eps = 0, the direction d eps_i / d eps, and the external
// transmissivity applied to every magnon before detection.
struct SensorModel {
    SystemConfig config;
    std::vector<double> direction;
    double eta = 1.0;
};

SensorModel ep3_sensor_model(double g, double alpha, double gamma = 0.0, double Gamma = 0.0,
                             double eta = 1.0, PerturbationCase pc = PerturbationCase::same);

// Oscillation rate of the unperturbed system (n=3, m=1); NaN when chi^2 <= 0.
double sensor_chi(const SensorModel& model);
// t = 2 q pi / chi
double working_time(const SensorModel& model, double q = 1.0);

// State after time t at perturbation eps, external loss included. A positive
// fixed_steps pins the lossy integrator so nearby eps share one grid.
GaussianState final_state(const SensorModel& model, double eps, double t, int fixed_steps = 0);

enum class SusceptibilityMethod { finite_difference, analytic_ep3 };
SusceptibilityMethod parse_susceptibility_method(const std::string& s);

// |d<O>/d eps| at eps = 0.
double susceptibility(const SensorModel& model, const Observable& obs, double t,
                      SusceptibilityMethod method = SusceptibilityMethod::finite_difference,
                      double step = 1e-9);

// Closed form sqrt2 alpha (kappa+g)^2 xi / (2 chi^5) for X1 - X2 at the EP3 sensor.
double susceptibility_ep3_analytic(double g, double kappa, double alpha, double t);

// c^T Lambda c; equals 1 for X1 - X2 on a coherent state.
double noise_variance(const SensorModel& model, const Observable& obs, double t);

struct QfiResult {
    double total = 0.0;
    double mu = 0.0;      // displacement part
    double lambda = 0.0;  // covariance part
    double step = 0.0;
    double richardson_rel = 0.0;  // |I(h) - I(h/2)| / I(h/2)
    bool lambda_fallback = false;  // covariance part dropped, total is a lower bound
    std::string warning;
};

// QFI of a Gaussian family from the state and its parameter derivatives.
// With sigma = 2 Lambda: I_mu = dmu^T Lambda^-1 dmu and
// I_Lambda = 1/2 vec(dsigma)^T (sigma (x) sigma - Omega (x) Omega)^+ vec(dsigma).
QfiResult gaussian_qfi(const GaussianState& state, const VecR& dmu, const MatR& dLambda);

// Central differences around eps0 with step 1e-7 chi^3 unless `step` > 0.
QfiResult qfi(const SensorModel& model, double t, double eps0 = 0.0, double step = 0.0);

// Observable c = Lambda^-1 dmu attaining 1/sqrt(I_mu).
Observable optimal_observable(const SensorModel& model, double t);

// 1/sqrt(N t)
double sql(double n_total, double t);

// Largest total excitation number of the system modes on a uniform grid over [0, t].
double peak_excitation(const SensorModel& model, double t, int samples = 400);

struct SensitivityReport {
    double g = 0, kappa = 0, alpha = 0, gamma = 0, Gamma = 0, eta = 1, t = 0, chi = 0;
    std::string observable;
    double susceptibility = 0, noise_var = 0, delta_eps = 0;
    double qfi = 0, qfi_mu = 0, qfi_lambda = 0, qcrb = 0;
    double peak_excitation = 0, sql = 0;
    bool valid_regime = true;
    std::string warning;
    std::string sql_convention = "N = peak total excitation number over [0, t]";
};

struct SensitivityOptions {
    bool with_qfi = true;
    bool with_sql = true;
    double fd_step = 1e-9;
};

SensitivityReport sensitivity(const SensorModel& model, const Observable& obs, double t,
                              const SensitivityOptions& opt = {});

// Gain of delta_eps over the SQL in dB, 20 log10(sql / delta_eps).
double sql_gain_db(const SensitivityReport& r);

enum class ScalingFamily { ep2, ep3, ep4 };
ScalingFamily parse_scaling_family(const std::string& s);
std::string to_string(ScalingFamily f);

struct ScalingPoint {
    double chi = 0, param = 0, t = 0, delta_eps = 0, qfi = 0;
    bool stable = true;
};

struct ScalingResult {
    ScalingFamily family = ScalingFamily::ep3;
    bool computable = false;
    double slope = NAN, intercept = NAN, r_squared = NAN;
    double qfi_slope = NAN;
    std::vector<ScalingPoint> points;
    std::vector<std::string> warnings;
};

// Geometric grid from chi(g=0.9) down by one decade.
std::vector<double> default_chi_grid(int points = 12);

// Log-log slope of delta_eps_opt against chi at t = 2 pi / chi.
//   ep3: sensor with g = sqrt(1 - chi^2), observable X1 - X2 (or `obs`)
//   ep2: two-mode reference with delta = 1, g = sqrt(1 - chi^2), optimal quadrature
//   ep4: f = 0.2 locus with g_1 lowered by chi^2; unstable points are excluded
ScalingResult scaling_fit(ScalingFamily family, const std::vector<double>& chi_grid,
                          const std::string& obs = "x1_minus_x2", double alpha = 2.0,
                          bool with_qfi = false);

struct FeasibilityReport {
    double g = 0, alpha = 0, kappa_hz = 0, chi = 0;
    double t = 0, delta_eps = 0;  // units of kappa
    double eps_hz = 0, t_seconds = 0, value = 0;
    double target = 0, ratio = 0;
    bool pass = false;
    double alt_t_seconds = 0, alt_value = 0, alt_ratio = 0;
    std::string convention, alt_convention;
};

FeasibilityReport feasibility(double g = 0.995, double alpha = 100.0, double kappa_hz = 5e5,
                              double target = 5.27e-6);

}  // namespace hoep
