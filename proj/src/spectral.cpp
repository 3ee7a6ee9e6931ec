#include "hoep/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace hoep {

using cld = std::complex<long double>;

std::string to_string(Phase p) {
    switch (p) {
        case Phase::stable: return "stable";
        case Phase::unstable: return "unstable";
        case Phase::exceptional: return "exceptional";
    }
    return "unknown";
}

std::vector<cld> characteristic_polynomial(const MatC& h) {
    // Berkowitz: division-free, built up from the trailing principal submatrices.
    const int n = static_cast<int>(h.rows());
    if (n == 0) return {cld(1)};
    auto at = [&](int r, int c) { return cld(h(r, c).real(), h(r, c).imag()); };

    std::vector<cld> poly{cld(1), -at(n - 1, n - 1)};
    for (int k = n - 2; k >= 0; --k) {
        const int s = n - k - 1;
        // q = (1, -a, -R C, -R M C, ..., -R M^{s-1} C)
        std::vector<cld> q(s + 2);
        q[0] = 1;
        q[1] = -at(k, k);
        std::vector<cld> v(s);
        for (int i = 0; i < s; ++i) v[i] = at(k + 1 + i, k);
        for (int j = 0; j < s; ++j) {
            cld rc = 0;
            for (int i = 0; i < s; ++i) rc += at(k, k + 1 + i) * v[i];
            q[j + 2] = -rc;
            std::vector<cld> w(s, cld(0));
            for (int r = 0; r < s; ++r)
                for (int c = 0; c < s; ++c) w[r] += at(k + 1 + r, k + 1 + c) * v[c];
            v.swap(w);
        }
        std::vector<cld> next(s + 2, cld(0));
        for (int i = 0; i < s + 2; ++i)
            for (int j = 0; j <= std::min(i, s); ++j) next[i] += q[i - j] * poly[j];
        poly.swap(next);
    }
    return poly;
}

std::vector<cplx> polynomial_roots(const std::vector<cld>& coeffs, int max_iter) {
    const int n = static_cast<int>(coeffs.size()) - 1;
    if (n < 1) return {};
    if (coeffs[0] == cld(0)) throw NumericalError("polynomial_roots: leading coefficient is zero");
    std::vector<cld> a(coeffs.size());
    for (std::size_t k = 0; k < coeffs.size(); ++k) a[k] = coeffs[k] / coeffs[0];
    // exact zero roots (the unperturbed EP3 gives lambda^3 = 0) deflate away;
    // iterating on them converges only linearly
    if (a.back() == cld(0)) {
        a.pop_back();
        std::vector<cld> rest(a.begin(), a.end());
        std::vector<cplx> out = polynomial_roots(rest, max_iter);
        out.push_back(cplx(0.0, 0.0));
        return out;
    }

    const long double eps = std::numeric_limits<long double>::epsilon();
    const cld center = -a[1] / static_cast<long double>(n);
    long double radius = 0;
    for (int k = 1; k <= n; ++k)
        radius = std::max(radius, std::pow(std::abs(a[k]), 1.0L / k));
    const long double root_scale = radius;
    radius = 2 * radius + eps;

    std::vector<cld> z(n);
    const long double two_pi = 6.283185307179586476925286766559L;
    for (int k = 0; k < n; ++k)
        z[k] = center + std::polar(radius, two_pi * k / n + 0.4L);

    std::vector<bool> done(n, false);
    int iter = 0;
    long double worst = 0;
    for (; iter < max_iter; ++iter) {
        bool all = true;
        worst = 0;
        for (int i = 0; i < n; ++i) {
            if (done[i]) continue;
            cld p = a[0], dp = 0;
            long double bound = std::abs(a[0]);
            const long double az = std::abs(z[i]);
            for (int k = 1; k <= n; ++k) {
                dp = dp * z[i] + p;
                p = p * z[i] + a[k];
                bound = bound * az + std::abs(a[k]);
            }
            // stop once the residual is at the rounding level of the evaluation
            if (std::abs(p) <= 8 * n * eps * bound) {
                done[i] = true;
                continue;
            }
            all = false;
            if (dp == cld(0)) {
                z[i] += cld(eps * (1 + az), eps * (1 + az));
                continue;
            }
            const cld ratio = p / dp;
            cld sum = 0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const cld d = z[i] - z[j];
                if (d != cld(0)) sum += cld(1) / d;
            }
            const cld w = ratio / (cld(1) - ratio * sum);
            z[i] -= w;
            worst = std::max(worst, std::abs(p) / bound);
            if (std::abs(w) <= eps * (std::abs(z[i]) + root_scale)) done[i] = true;
        }
        if (all) break;
    }
    if (iter == max_iter) {
        std::ostringstream os;
        os << "polynomial_roots: Aberth iteration did not converge after " << max_iter
           << " iterations (degree " << n << ", worst relative residual "
           << static_cast<double>(worst) << ")";
        throw NumericalError(os.str());
    }
    std::vector<cplx> out(n);
    for (int k = 0; k < n; ++k)
        out[k] = cplx(static_cast<double>(z[k].real()), static_cast<double>(z[k].imag()));
    return out;
}

std::array<cplx, 3> cardano_roots(cplx c2, cplx c1, cplx c0) {
    const cplx s = -c2 / 3.0;
    const cplx p = c1 - c2 * c2 / 3.0;
    const cplx q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    const cplx x = p / 3.0;
    const cplx y = -q / 2.0;
    const cplx sq = std::sqrt(x * x * x + y * y);
    cplx zp = std::pow(y + sq, 1.0 / 3.0);
    if (std::abs(zp) < std::abs(std::pow(y - sq, 1.0 / 3.0))) zp = std::pow(y - sq, 1.0 / 3.0);
    const cplx zm = zp == cplx(0.0) ? cplx(0.0) : -x / zp;
    const cplx w = std::polar(1.0, M_PI / 3.0);
    return {s - w * zp - std::conj(w) * zm, s + zp + zm, s - std::conj(w) * zp - w * zm};
}

void sort_eigenvalues(std::vector<cplx>& ev) {
    std::sort(ev.begin(), ev.end(), [](const cplx& a, const cplx& b) {
        const double tie = 1e-12 * (1.0 + std::abs(a) + std::abs(b));
        if (std::abs(a.real() - b.real()) > tie) return a.real() < b.real();
        return a.imag() < b.imag();
    });
}

Cluster largest_cluster(const std::vector<cplx>& roots, double scale, double tol) {
    const int n = static_cast<int>(roots.size());
    Cluster best;
    if (n == 0) return best;
    best.members = {0};
    best.centroid = roots[0];
    if (n > 16) throw ConfigError("largest_cluster: more than 16 roots");

    for (int k = n; k >= 2; --k) {
        double best_ratio = std::numeric_limits<double>::infinity();
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            if (__builtin_popcount(mask) != k) continue;
            std::vector<int> idx;
            cplx c = 0.0;
            for (int i = 0; i < n; ++i)
                if (mask & (1u << i)) {
                    idx.push_back(i);
                    c += roots[i];
                }
            c /= static_cast<double>(k);
            // coefficients of prod (x - (r_i - c)); e_j is the x^{k-j} coefficient up to sign
            std::vector<cplx> e(k + 1, 0.0);
            e[0] = 1.0;
            for (int i : idx) {
                const cplx r = roots[i] - c;
                for (int j = static_cast<int>(e.size()) - 1; j >= 1; --j) e[j] -= r * e[j - 1];
            }
            double ratio = 0.0;
            for (int j = 2; j <= k; ++j)
                ratio = std::max(ratio, std::abs(e[j]) / (tol * std::pow(scale, j)));
            if (ratio <= 1.0 && ratio < best_ratio) {
                best_ratio = ratio;
                best.members = idx;
                best.centroid = c;
            }
        }
        if (best_ratio <= 1.0) return best;
    }
    // no coalescence: report the first root as a trivial cluster
    best.members = {0};
    best.centroid = roots[0];
    return best;
}

Phase classify_phase(const Spectrum& spec, double tol) {
    if (spec.ep_order >= 2) return Phase::exceptional;
    for (const cplx& l : spec.eigenvalues)
        if (l.imag() > tol) return Phase::unstable;
    return Phase::stable;
}

namespace {

double match_distance(const std::array<cplx, 3>& a, const std::vector<cplx>& b) {
    std::array<int, 3> perm{0, 1, 2};
    double best = std::numeric_limits<double>::infinity();
    do {
        double d = 0.0;
        for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(a[i] - b[perm[i]]));
        best = std::min(best, d);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

struct Roots {
    std::vector<cplx> values;
    double cardano_deviation = 0.0;
};

Roots spectrum_roots(const MatC& h) {
    Roots r;
    const auto poly = characteristic_polynomial(h);
    r.values = polynomial_roots(poly);
    if (h.rows() == 3) {
        auto c = [&](int k) {
            return cplx(static_cast<double>(poly[k].real()), static_cast<double>(poly[k].imag()));
        };
        const auto cr = cardano_roots(c(1), c(2), c(3));
        r.cardano_deviation = match_distance(cr, r.values);
        r.values.assign(cr.begin(), cr.end());
    }
    sort_eigenvalues(r.values);
    return r;
}

double spectral_norm(const MatC& h) {
    Eigen::JacobiSVD<MatC> svd(h);
    return svd.singularValues()(0);
}

}  // namespace

Spectrum eigensolve(const DynamicalMatrix& dm, const SpectralOptions& opt) {
    const MatC& h = dm.reduced;
    const int n = static_cast<int>(h.rows());
    Spectrum s;
    auto roots = spectrum_roots(h);
    s.eigenvalues = roots.values;
    s.cardano_deviation = roots.cardano_deviation;
    s.scale = std::max(1.0, spectral_norm(h));

    const Cluster cl = largest_cluster(s.eigenvalues, s.scale, opt.cluster_tol);
    s.ep_order = cl.order();
    s.ep_value = cl.centroid;
    s.phase = classify_phase(s, opt.phase_tol);

    s.right = MatC::Zero(n, n);
    s.left = MatC::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const cplx lam = s.eigenvalues[k];
        const MatC shifted = h - lam * MatC::Identity(n, n);
        Eigen::JacobiSVD<MatC> svd(shifted, Eigen::ComputeFullU | Eigen::ComputeFullV);
        VecC r = svd.matrixV().col(n - 1);
        VecC l = svd.matrixU().col(n - 1);
        // fix the phase of R so the largest component is real positive
        Eigen::Index imax = 0;
        r.cwiseAbs().maxCoeff(&imax);
        r *= std::abs(r(imax)) / r(imax);
        const cplx overlap = l.dot(r);  // L^dagger R
        if (std::abs(overlap) > 1e-12) {
            l /= std::conj(overlap);
        } else {
            s.biorthonormal = false;
        }
        s.right.col(k) = r;
        s.left.col(k) = l;
        const double rr = (h * r - lam * r).norm() / r.norm();
        const double lr = (h.adjoint() * l - std::conj(lam) * l).norm() / l.norm();
        s.max_residual = std::max({s.max_residual, rr, lr});
    }

    s.chi = std::numeric_limits<double>::quiet_NaN();
    if (dm.n == 3 && dm.m == 1) {
        const double g = h(0, 2).real();
        const double kap = -h(1, 2).real();
        const double gm = -h(2, 2).imag() - (-h(0, 0).imag());  // gamma - Gamma
        const double c2 = kap * kap - g * g - gm * gm / 4.0;
        s.chi = c2 >= 0.0 ? std::sqrt(c2) : std::numeric_limits<double>::quiet_NaN();
    }
    return s;
}

CubicDiscriminant cubic_discriminant(const SystemConfig& config) {
    config.validate();
    if (config.n != 3 || config.m != 1)
        throw ConfigError("cubic_discriminant: requires n = 3, m = 1");
    if (!config.lossless()) throw Unsupported("cubic_discriminant: lossless configurations only");
    const double a = config.detuning(0);
    const double b = -config.detuning(1);
    const double g = config.g[0];
    const double k = config.kappa[0];
    const double c2 = -(a + b);
    const double c1 = a * b - k * k + g * g;
    const double c0 = a * k * k - g * g * b;
    const double p = c1 - c2 * c2 / 3.0;
    const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    CubicDiscriminant d;
    d.x = p / 3.0;
    d.y = -q / 2.0;
    d.D = d.x * d.x * d.x + d.y * d.y;
    return d;
}

PerturbationCase parse_perturbation_case(const std::string& s) {
    if (s == "same") return PerturbationCase::same;
    if (s == "different") return PerturbationCase::different;
    throw ConfigError("perturbation: expected 'same' or 'different', got '" + s + "'");
}

std::array<cplx, 3> perturbed_eigenvalues_analytic(double eps, PerturbationCase pc) {
    const double base = std::cbrt(pc == PerturbationCase::same ? 2.0 * eps : eps);
    const cplx w = std::polar(1.0, 2.0 * M_PI / 3.0);
    return {std::conj(w) * base, cplx(base, 0.0), w * base};
}

std::vector<double> perturbation_direction(const SystemConfig& config, PerturbationCase pc) {
    std::vector<double> d(config.n - 1, 0.0);
    if (pc == PerturbationCase::same) {
        std::fill(d.begin(), d.end(), -1.0);
    } else {
        d[0] = -1.0;
    }
    return d;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw ConfigError("linear_fit: need at least two paired points");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

PuiseuxFit puiseux_fit(const SystemConfig& at_ep, const std::vector<double>& eps_grid,
                       const std::vector<double>& direction, const SpectralOptions& opt) {
    at_ep.validate();
    if (eps_grid.size() < 8) throw ConfigError("puiseux_fit: need at least 8 grid points");
    if (direction.size() != static_cast<std::size_t>(at_ep.n - 1))
        throw ConfigError("puiseux_fit: direction needs one entry per magnon");
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        if (!(eps_grid[i] > 0.0)) throw ConfigError("puiseux_fit: eps grid must be positive");
        if (i > 0 && !(eps_grid[i] > eps_grid[i - 1]))
            throw ConfigError("puiseux_fit: eps grid must be strictly increasing");
    }
    if (std::log10(eps_grid.back() / eps_grid.front()) < 3.0 - 1e-9)
        throw ConfigError("puiseux_fit: eps grid must span at least three decades");

    const Spectrum s0 = eigensolve(build_system(at_ep), opt);
    if (s0.ep_order < 2) throw ContractViolation("puiseux_fit: configuration is not at an EP");
    const cplx lep = s0.ep_value;
    const int k = s0.ep_order;

    PuiseuxFit fit;
    fit.ep_value = lep;
    std::vector<double> lx, ly;
    for (double e : eps_grid) {
        SystemConfig c = at_ep;
        for (std::size_t i = 0; i < direction.size(); ++i) c.epsilon[i] += e * direction[i];
        std::vector<cplx> ev = spectrum_roots(build_system(c).reduced).values;
        std::sort(ev.begin(), ev.end(),
                  [&](const cplx& a, const cplx& b) { return std::abs(a - lep) < std::abs(b - lep); });
        ev.resize(k);
        const cplx* pick = &ev[0];
        for (const cplx& l : ev)
            if (std::abs(std::arg(l - lep)) < std::abs(std::arg(*pick - lep))) pick = &l;
        const double d = std::abs(*pick - lep);
        if (!(d > 1e-300) || !std::isfinite(d)) {
            std::ostringstream os;
            os << "puiseux_fit: eigenvalue splitting vanished at eps = " << e;
            throw NumericalError(os.str());
        }
        fit.eps.push_back(e);
        fit.splitting.push_back(d);
        lx.push_back(std::log(e));
        ly.push_back(std::log(d));
    }
    const LinearFit lf = linear_fit(lx, ly);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.r_squared = lf.r_squared;
    fit.branch_prefactor = std::exp(lf.intercept);
    fit.eps_min = eps_grid.front();
    fit.eps_max = eps_grid.back();
    fit.points = static_cast<int>(eps_grid.size());
    return fit;
}

std::vector<cplx> match_branches(const std::vector<cplx>& prev, const std::vector<cplx>& next) {
    if (prev.size() != next.size()) return next;
    const std::size_t n = next.size();
    std::vector<cplx> out(n);
    std::vector<bool> used_p(n, false), used_n(n, false);
    // greedy on globally closest pairs
    for (std::size_t step = 0; step < n; ++step) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (used_p[i]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (used_n[j]) continue;
                const double d = std::abs(prev[i] - next[j]);
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        used_p[bi] = used_n[bj] = true;
        out[bi] = next[bj];
    }
    return out;
}

}  // namespace hoep
