#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hoep/common.hpp"

namespace hoep {

// Physical parameters in units of the reference coupling kappa_1.
// Magnons 1..m couple to the cavity through two-mode squeezing (g), magnons
// m+1..n-1 through beam-splitter exchange (kappa). Arrays are 0-based here.
struct SystemConfig {
    int n = 3;
    int m = 1;
    std::vector<double> g{1.0};
    std::vector<double> kappa{1.0};
    std::vector<double> delta{0.0, 0.0};
    std::vector<double> epsilon{0.0, 0.0};
    double gamma = 0.0;  // cavity decay
    double Gamma = 0.0;  // magnon decay
    std::vector<cplx> alpha;  // initial magnon amplitudes, empty means vacuum

    void validate() const;
    int magnons() const { return n - 1; }
    bool su11(int i) const { return i < m; }
    // delta'_i = delta_i + epsilon_i
    double detuning(int i) const { return delta[i] + epsilon[i]; }
    bool lossless() const { return gamma == 0.0 && Gamma == 0.0; }
};

// Three-mode sensor: one squeezing-coupled and one exchange-coupled magnon,
// delta = 0, initial state alpha_1 = -alpha_2 = i*alpha.
SystemConfig ep3_sensor(double g, double kappa = 1.0, double alpha = 0.0, double gamma = 0.0,
                        double Gamma = 0.0);

struct DynamicalMatrix {
    int n = 0;
    int m = 0;
    // basis (b_1..b_m, b_{m+1}^+..b_{n-1}^+, a^+)
    MatC reduced;
    // basis (b_1, b_1^+, ..., b_{n-1}, b_{n-1}^+, a, a^+)
    MatC full;
    std::vector<std::string> reduced_labels;
    std::vector<std::string> full_labels;
};

// Position of reduced-basis entry k inside the full basis, and of its conjugate.
int full_index(int m, int k);
int full_conjugate_index(int m, int k);

DynamicalMatrix build_system(const SystemConfig& config);

struct SymmetryReport {
    double particle_hole = 0.0;       // max |C H C^-1 + H|
    double pseudo_hermiticity = 0.0;  // max |eta H eta^-1 - H^dagger|
};

SymmetryReport check_symmetries(const DynamicalMatrix& dm);

struct IrreducibilityReport {
    bool pass = true;
    std::vector<std::pair<int, int>> violations;  // 1-based magnon indices
};

// Two magnons with coinciding reduced-matrix diagonal entries (delta'_i = delta'_j
// for the same coupling type, delta'_i = -delta'_j for mixed types) can be
// rotated into a decoupled combination.
IrreducibilityReport check_irreducibility(const SystemConfig& config, double tol = 1e-12);

struct Ep4Point {
    double delta1 = 0, delta2 = 0, delta3 = 0, g = 0;
    double lambda = 0;  // common eigenvalue
};

// Fourth-order coalescence of the n=4, m=2 family with g_2 = f, kappa_1 = 1.
Ep4Point ep4_locus(double f);
SystemConfig ep4_config(double f);

// Scale conversion from units of kappa_1 to rad/s.
inline double to_physical(double value, double kappa_rad_per_s) { return value * kappa_rad_per_s; }

}  // namespace hoep
