#include "hoep/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hoep/spectral.hpp"

namespace hoep {

namespace {
const cplx I(0.0, 1.0);

// (c, c^+) -> (X, P) for every mode
MatC field_to_quadrature(int modes) {
    MatC t = MatC::Zero(2 * modes, 2 * modes);
    const double r = 1.0 / std::sqrt(2.0);
    for (int k = 0; k < modes; ++k) {
        t(2 * k, 2 * k) = r;
        t(2 * k, 2 * k + 1) = r;
        t(2 * k + 1, 2 * k) = -I * r;
        t(2 * k + 1, 2 * k + 1) = I * r;
    }
    return t;
}

MatC field_from_quadrature(int modes) {
    MatC t = MatC::Zero(2 * modes, 2 * modes);
    const double r = 1.0 / std::sqrt(2.0);
    for (int k = 0; k < modes; ++k) {
        t(2 * k, 2 * k) = r;
        t(2 * k, 2 * k + 1) = I * r;
        t(2 * k + 1, 2 * k) = r;
        t(2 * k + 1, 2 * k + 1) = -I * r;
    }
    return t;
}

std::vector<std::string> system_labels(int n) {
    std::vector<std::string> out;
    for (int k = 0; k < n - 1; ++k) out.push_back("b" + std::to_string(k + 1));
    out.push_back("a");
    return out;
}
}  // namespace

GaussianState vacuum_state(int modes) {
    GaussianState s;
    s.mu = VecR::Zero(2 * modes);
    s.Lambda = MatR::Identity(2 * modes, 2 * modes) / 2.0;
    for (int k = 0; k < modes; ++k) s.labels.push_back("m" + std::to_string(k + 1));
    return s;
}

GaussianState coherent_init(const SystemConfig& config) {
    config.validate();
    GaussianState s = vacuum_state(config.n);
    s.labels = system_labels(config.n);
    for (std::size_t k = 0; k < config.alpha.size(); ++k) {
        s.mu(2 * k) = std::sqrt(2.0) * config.alpha[k].real();
        s.mu(2 * k + 1) = std::sqrt(2.0) * config.alpha[k].imag();
    }
    return s;
}

MatR quadrature_map(const MatC& k, int n, int m) {
    MatC u = MatC::Zero(2 * n, 2 * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            u(full_index(m, r), full_index(m, c)) = k(r, c);
            u(full_conjugate_index(m, r), full_conjugate_index(m, c)) = std::conj(k(r, c));
        }
    const MatC s = field_to_quadrature(n) * u * field_from_quadrature(n);
    return s.real();
}

MatR quadrature_drift(const SystemConfig& config) {
    const DynamicalMatrix dm = build_system(config);
    const MatC a = field_to_quadrature(config.n) * (-I * dm.full) * field_from_quadrature(config.n);
    return a.real();
}

Propagator propagator(const SystemConfig& config, double t, double cond_limit) {
    const DynamicalMatrix dm = build_system(config);
    const int n = config.n;
    Propagator p;
    p.t = t;
    const Spectrum sp = eigensolve(dm);
    p.condition = condition_number(sp.right);
    if (p.condition < cond_limit) {
        VecC ph(n);
        for (int k = 0; k < n; ++k) ph(k) = std::exp(-I * sp.eigenvalues[k] * t);
        p.K = sp.right * ph.asDiagonal() * sp.right.inverse();
        p.method = "eigen";
    } else {
        p.K = expm(MatC(-I * t * dm.reduced));
        p.method = "expm";
    }
    p.S_quad = quadrature_map(p.K, n, config.m);
    return p;
}

GaussianState evolve(const GaussianState& state, const Propagator& p) {
    if (state.mu.size() != p.S_quad.rows())
        throw ConfigError("evolve: state and propagator dimensions differ");
    GaussianState out = state;
    out.mu = p.S_quad * state.mu;
    out.Lambda = p.S_quad * state.Lambda * p.S_quad.transpose();
    out.t = state.t + p.t;
    return out;
}

MatR diffusion_matrix(const SystemConfig& config) {
    const int n = config.n;
    MatR d = MatR::Zero(2 * n, 2 * n);
    for (int k = 0; k < n; ++k) {
        const double rate = k == n - 1 ? config.gamma : config.Gamma;
        d(2 * k, 2 * k) = rate;
        d(2 * k + 1, 2 * k + 1) = rate;
    }
    return d;
}

GaussianState evolve_lossy(const GaussianState& state, const SystemConfig& config, double t,
                           const LossyOptions& opt, LossyDiagnostics* diag) {
    config.validate();
    if (state.mu.size() != 2 * config.n) throw ConfigError("evolve_lossy: state dimension mismatch");
    if (t < 0) throw ConfigError("evolve_lossy: negative time");
    const MatR a = quadrature_drift(config);
    const MatR d = diffusion_matrix(config);

    struct Run {
        VecR mu;
        MatR lam;
        double peak;
    };
    auto run = [&](int steps) {
        const double h = t / steps;
        VecR mu = state.mu;
        MatR lam = state.Lambda;
        double peak = std::max(max_abs(mu), max_abs(lam));
        auto flam = [&](const MatR& l) -> MatR { return a * l + l * a.transpose() + d; };
        for (int s = 0; s < steps; ++s) {
            const VecR m1 = a * mu;
            const MatR l1 = flam(lam);
            const VecR m2 = a * (mu + 0.5 * h * m1);
            const MatR l2 = flam(lam + 0.5 * h * l1);
            const VecR m3 = a * (mu + 0.5 * h * m2);
            const MatR l3 = flam(lam + 0.5 * h * l2);
            const VecR m4 = a * (mu + h * m3);
            const MatR l4 = flam(lam + h * l3);
            mu += h / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
            lam += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
            peak = std::max({peak, max_abs(mu), max_abs(lam)});
        }
        lam = 0.5 * (lam + lam.transpose());
        return Run{mu, lam, peak};
    };

    GaussianState out = state;
    out.t = state.t + t;
    if (t == 0.0) return out;

    int steps;
    if (opt.fixed_steps > 0) {
        steps = opt.fixed_steps;
    } else {
        const Spectrum sp = eigensolve(build_system(config));
        double rho = 0.0;
        for (const cplx& l : sp.eigenvalues) rho = std::max(rho, std::abs(l));
        const double period = rho > 0.0 ? 2.0 * M_PI / rho : INFINITY;
        const double h0 = std::min(period, 1.0 / std::max({config.gamma, config.Gamma, 1.0})) / 200.0;
        steps = std::max(1, static_cast<int>(std::ceil(t / h0)));
    }

    auto result = run(steps);
    double change = 0.0;
    if (opt.fixed_steps <= 0) {
        int refinements = 0;
        while (true) {
            auto finer = run(2 * steps);
            // relative to the largest moment along the path: the covariance can pass
            // through large values and return to O(1), leaving a rounding floor
            const double scale = std::max(1.0, finer.peak);
            change = std::max(max_abs(VecR(finer.mu - result.mu)), max_abs(MatR(finer.lam - result.lam))) / scale;
            result = finer;
            steps *= 2;
            if (change <= opt.rel_tol) break;
            if (++refinements >= opt.max_refinements) {
                std::ostringstream os;
                os << "evolve_lossy: step halving did not converge (steps " << steps
                   << ", relative change " << change << ", tolerance " << opt.rel_tol << ")";
                throw NumericalError(os.str());
            }
        }
    }
    if (diag) {
        diag->steps = steps;
        diag->step = t / steps;
        diag->change_on_halving = change;
    }
    out.mu = result.mu;
    out.Lambda = result.lam;
    return out;
}

std::vector<double> excitation_numbers(const GaussianState& state) {
    std::vector<double> n(state.modes());
    for (int k = 0; k < state.modes(); ++k) {
        const double x = state.mu(2 * k), p = state.mu(2 * k + 1);
        n[k] = 0.5 * (x * x + p * p) + 0.5 * (state.Lambda(2 * k, 2 * k) + state.Lambda(2 * k + 1, 2 * k + 1) - 1.0);
    }
    return n;
}

GaussianState readout_swap(const GaussianState& state, double theta_t, const std::vector<int>& magnons) {
    const int base = state.modes();
    const int extra = static_cast<int>(magnons.size());
    const int total = base + extra;
    GaussianState out;
    out.t = state.t;
    out.labels = state.labels;
    out.mu = VecR::Zero(2 * total);
    out.mu.head(2 * base) = state.mu;
    out.Lambda = MatR::Identity(2 * total, 2 * total) / 2.0;
    out.Lambda.topLeftCorner(2 * base, 2 * base) = state.Lambda;

    MatR s = MatR::Identity(2 * total, 2 * total);
    const double c = std::cos(theta_t), sn = std::sin(theta_t);
    for (int j = 0; j < extra; ++j) {
        const int b = magnons[j];
        if (b < 0 || b >= base) throw ConfigError("readout_swap: magnon index out of range");
        const int d = base + j;
        out.labels.push_back("d" + std::to_string(j + 1));
        for (int q = 0; q < 2; ++q) {
            s(2 * b + q, 2 * b + q) = c;
            s(2 * b + q, 2 * d + q) = -sn;
            s(2 * d + q, 2 * b + q) = sn;
            s(2 * d + q, 2 * d + q) = c;
        }
    }
    out.mu = s * out.mu;
    out.Lambda = s * out.Lambda * s.transpose();
    return out;
}

GaussianState apply_external_loss(const GaussianState& state, const std::vector<double>& eta) {
    if (static_cast<int>(eta.size()) != state.modes())
        throw ConfigError("apply_external_loss: need one transmissivity per mode");
    MatR s = MatR::Zero(state.mu.size(), state.mu.size());
    MatR noise = MatR::Zero(state.mu.size(), state.mu.size());
    for (int k = 0; k < state.modes(); ++k) {
        if (!(eta[k] >= 0.0 && eta[k] <= 1.0)) throw ConfigError("apply_external_loss: eta must lie in [0, 1]");
        const double r = std::sqrt(eta[k]);
        s(2 * k, 2 * k) = s(2 * k + 1, 2 * k + 1) = r;
        noise(2 * k, 2 * k) = noise(2 * k + 1, 2 * k + 1) = (1.0 - eta[k]) / 2.0;
    }
    GaussianState out = state;
    out.mu = s * state.mu;
    out.Lambda = s * state.Lambda * s + noise;
    return out;
}

GaussianState marginal(const GaussianState& state, const std::vector<int>& modes) {
    const int k = static_cast<int>(modes.size());
    GaussianState out;
    out.t = state.t;
    out.mu = VecR(2 * k);
    out.Lambda = MatR(2 * k, 2 * k);
    for (int i = 0; i < k; ++i) {
        out.labels.push_back(state.labels.at(modes[i]));
        for (int p = 0; p < 2; ++p) {
            out.mu(2 * i + p) = state.mu(2 * modes[i] + p);
            for (int j = 0; j < k; ++j)
                for (int q = 0; q < 2; ++q)
                    out.Lambda(2 * i + p, 2 * j + q) = state.Lambda(2 * modes[i] + p, 2 * modes[j] + q);
        }
    }
    return out;
}

double symplectic_residual(const MatR& s) {
    const MatR om = symplectic_form(static_cast<int>(s.rows() / 2));
    return max_abs(MatR(s * om * s.transpose() - om));
}

double purity_determinant(const GaussianState& state) { return (2.0 * state.Lambda).determinant(); }

double uncertainty_min_eigenvalue(const GaussianState& state) {
    const MatC m = state.Lambda.cast<cplx>() + 0.5 * I * symplectic_form(state.modes()).cast<cplx>();
    Eigen::SelfAdjointEigenSolver<MatC> es(m);
    return es.eigenvalues().minCoeff();
}

Ep2Coefficients ep2_coefficients(double delta, double g, double eps, double t) {
    const double d = delta + eps;
    const cplx chi = std::sqrt(cplx(d * d - g * g, 0.0));
    const cplx sinc = std::abs(chi) < 1e-300 ? cplx(t) : std::sin(chi * t) / chi;
    Ep2Coefficients c;
    c.A = std::cos(chi * t) - I * d * sinc;
    c.B = g * sinc;
    c.chi = chi.real();
    return c;
}

MatR ep2_sigma(cplx A, cplx B) {
    MatR s(4, 4);
    // c -> z c and c -> z c^+ in quadrature form
    const MatR same = (MatR(2, 2) << A.real(), -A.imag(), A.imag(), A.real()).finished();
    const MatR cross = (MatR(2, 2) << B.real(), B.imag(), B.imag(), -B.real()).finished();
    s << same, cross, cross, same;
    return s;
}

BlochMessiahDecomposition bloch_messiah_2mode(cplx A, cplx B, double alpha) {
    const double norm = std::norm(A) - std::norm(B);
    if (std::abs(norm - 1.0) > 1e-8)
        throw ContractViolation("bloch_messiah_2mode: |A|^2 - |B|^2 must equal 1");
    if (std::abs(B.imag()) > 1e-12 * (1.0 + std::abs(B)))
        throw ContractViolation("bloch_messiah_2mode: B must be real for this parametrization");

    BlochMessiahDecomposition bm;
    bm.phi = std::atan2(A.imag(), A.real());
    bm.r = std::asinh(B.real());
    const double c = std::cos(bm.phi), s = std::sin(bm.phi);
    MatR rot(2, 2);
    rot << c, -s, s, c;
    const MatR id = MatR::Identity(2, 2);
    const double h = 1.0 / std::sqrt(2.0);
    bm.K_passive = MatR(4, 4);
    bm.K_passive << id, -id, rot, rot;
    bm.K_passive *= h;
    bm.L_passive = MatR(4, 4);
    bm.L_passive << rot, id, -rot, id;
    bm.L_passive *= h;
    bm.squeeze = MatR::Zero(4, 4);
    bm.squeeze.diagonal() << std::exp(bm.r), std::exp(-bm.r), std::exp(-bm.r), std::exp(bm.r);
    bm.Sigma = ep2_sigma(A, B);
    bm.xbar = VecR(4);
    bm.xbar << B.real(), B.imag(), A.real(), A.imag();
    bm.xbar *= std::sqrt(2.0) * alpha;
    bm.reconstruction_error = max_abs(MatR(bm.K_passive * bm.squeeze * bm.L_passive - bm.Sigma));
    return bm;
}

nlohmann::json state_to_json(const GaussianState& state) {
    nlohmann::json j;
    j["t"] = state.t;
    j["labels"] = state.labels;
    j["mu"] = std::vector<double>(state.mu.data(), state.mu.data() + state.mu.size());
    std::vector<double> lam;
    for (int r = 0; r < state.Lambda.rows(); ++r)
        for (int c = 0; c < state.Lambda.cols(); ++c) lam.push_back(state.Lambda(r, c));
    j["Lambda"] = lam;
    j["quadrature_order"] = "X1,P1,X2,P2,...";
    return j;
}

GaussianState state_from_json(const nlohmann::json& j) {
    GaussianState s;
    s.t = j.at("t").get<double>();
    s.labels = j.at("labels").get<std::vector<std::string>>();
    const auto mu = j.at("mu").get<std::vector<double>>();
    const auto lam = j.at("Lambda").get<std::vector<double>>();
    const int d = static_cast<int>(mu.size());
    if (static_cast<int>(lam.size()) != d * d) throw ConfigError("state_from_json: Lambda size mismatch");
    s.mu = Eigen::Map<const VecR>(mu.data(), d);
    s.Lambda = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(lam.data(), d, d);
    return s;
}

}  // namespace hoep
