#include "hoep/model.hpp"

#include <cmath>
#include <string>

namespace hoep {

namespace {

void require_length(const char* name, std::size_t got, std::size_t want) {
    if (got != want) {
        throw ConfigError(std::string(name) + ": expected " + std::to_string(want) +
                          " entries, got " + std::to_string(got));
    }
}

}  // namespace

void SystemConfig::validate() const {
    if (n < 2) throw ConfigError("n: need at least one magnon and the cavity (n >= 2)");
    if (m < 1 || m > n - 1) throw ConfigError("m: must satisfy 1 <= m <= n-1");
    require_length("g", g.size(), static_cast<std::size_t>(m));
    require_length("kappa", kappa.size(), static_cast<std::size_t>(n - m - 1));
    require_length("delta", delta.size(), static_cast<std::size_t>(n - 1));
    require_length("epsilon", epsilon.size(), static_cast<std::size_t>(n - 1));
    if (!alpha.empty()) require_length("alpha", alpha.size(), static_cast<std::size_t>(n - 1));
    for (double v : g)
        if (!(v >= 0.0)) throw ConfigError("g: couplings must be >= 0");
    for (double v : kappa)
        if (!(v >= 0.0)) throw ConfigError("kappa: couplings must be >= 0");
    for (double v : delta)
        if (!std::isfinite(v)) throw ConfigError("delta: non-finite entry");
    for (double v : epsilon)
        if (!std::isfinite(v)) throw ConfigError("epsilon: non-finite entry");
    if (!(gamma >= 0.0)) throw ConfigError("gamma: must be >= 0");
    if (!(Gamma >= 0.0)) throw ConfigError("Gamma: must be >= 0");
}

SystemConfig ep3_sensor(double g, double kappa, double alpha, double gamma, double Gamma) {
    SystemConfig c;
    c.n = 3;
    c.m = 1;
    c.g = {g};
    c.kappa = {kappa};
    c.delta = {0.0, 0.0};
    c.epsilon = {0.0, 0.0};
    c.gamma = gamma;
    c.Gamma = Gamma;
    c.alpha = {cplx(0.0, alpha), cplx(0.0, -alpha)};
    return c;
}

int full_index(int m, int k) {
    // b_i for i < m, b_j^+ for m <= j < n-1, a^+ last
    return 2 * k + (k >= m ? 1 : 0);
}

int full_conjugate_index(int m, int k) { return 2 * k + (k >= m ? 0 : 1); }

DynamicalMatrix build_system(const SystemConfig& config) {
    config.validate();
    const int n = config.n;
    const int m = config.m;

    DynamicalMatrix dm;
    dm.n = n;
    dm.m = m;
    dm.reduced = MatC::Zero(n, n);
    const cplx i(0.0, 1.0);
    for (int k = 0; k < n - 1; ++k) {
        const double d = config.detuning(k);
        if (config.su11(k)) {
            dm.reduced(k, k) = d - i * config.Gamma;
            dm.reduced(k, n - 1) = config.g[k];
            dm.reduced(n - 1, k) = -config.g[k];
        } else {
            const double kap = config.kappa[k - m];
            dm.reduced(k, k) = -d - i * config.Gamma;
            dm.reduced(k, n - 1) = -kap;
            dm.reduced(n - 1, k) = -kap;
        }
    }
    dm.reduced(n - 1, n - 1) = -i * config.gamma;

    // Conjugate operators evolve with -h^*; the loss terms keep their sign.
    dm.full = MatC::Zero(2 * n, 2 * n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const cplx h = dm.reduced(r, c);
            if (h == cplx(0.0)) continue;
            dm.full(full_index(m, r), full_index(m, c)) = h;
            dm.full(full_conjugate_index(m, r), full_conjugate_index(m, c)) = -std::conj(h);
        }
    }

    for (int k = 0; k < n; ++k) {
        const std::string base = k == n - 1 ? std::string("a") : "b" + std::to_string(k + 1);
        dm.full_labels.push_back(base);
        dm.full_labels.push_back(base + "^+");
        dm.reduced_labels.push_back(k < m ? base : base + "^+");
    }
    return dm;
}

SymmetryReport check_symmetries(const DynamicalMatrix& dm) {
    const int dim = static_cast<int>(dm.full.rows());
    MatC c = MatC::Zero(dim, dim);
    MatC eta = MatC::Zero(dim, dim);
    for (int k = 0; k < dim / 2; ++k) {
        c(2 * k, 2 * k + 1) = 1.0;
        c(2 * k + 1, 2 * k) = 1.0;
        eta(2 * k, 2 * k) = 1.0;
        eta(2 * k + 1, 2 * k + 1) = -1.0;
    }
    // both C and eta are their own inverses
    const MatC& h = dm.full;
    SymmetryReport rep;
    rep.particle_hole = max_abs(MatC(c * h * c + h));
    rep.pseudo_hermiticity = max_abs(MatC(eta * h * eta - h.adjoint()));
    return rep;
}

IrreducibilityReport check_irreducibility(const SystemConfig& config, double tol) {
    config.validate();
    IrreducibilityReport rep;
    const int nb = config.magnons();
    auto diag = [&](int k) { return config.su11(k) ? config.detuning(k) : -config.detuning(k); };
    for (int a = 0; a < nb; ++a) {
        for (int b = a + 1; b < nb; ++b) {
            const double da = diag(a);
            const double db = diag(b);
            if (std::abs(da - db) <= tol * std::max(1.0, std::max(std::abs(da), std::abs(db)))) {
                rep.violations.emplace_back(a + 1, b + 1);
            }
        }
    }
    rep.pass = rep.violations.empty();
    return rep;
}

Ep4Point ep4_locus(double f) {
    if (!(f > 0.0 && f < 1.0)) throw DomainError("ep4_locus: f must lie in (0, 1)");
    const double s = std::pow(1.0 - f * f, 1.5);
    Ep4Point p;
    p.delta1 = 4.0 * f * (1.0 + f * f) / s;
    p.delta2 = 4.0 * f * f * f / s;
    p.delta3 = -4.0 * f / s;
    p.g = (1.0 + f * f) * (1.0 + f * f) / s;
    p.lambda = 2.0 * f * (1.0 + f * f) / s;
    return p;
}

SystemConfig ep4_config(double f) {
    const Ep4Point p = ep4_locus(f);
    SystemConfig c;
    c.n = 4;
    c.m = 2;
    c.g = {p.g, f};
    c.kappa = {1.0};
    c.delta = {p.delta1, p.delta2, p.delta3};
    c.epsilon = {0.0, 0.0, 0.0};
    return c;
}

}  // namespace hoep
