#pragma once

#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "hoep/common.hpp"

namespace testing {

inline bool close(double a, double b, double rel, double abs = 0.0) {
    return std::abs(a - b) <= std::max(abs, rel * std::max(std::abs(a), std::abs(b)));
}

inline bool close(std::complex<double> a, std::complex<double> b, double abs) {
    return std::abs(a - b) <= abs;
}

// Random lossless or lossy configuration with valid array lengths.
inline hoep::SystemConfig random_config(std::mt19937_64& rng, int n, bool lossy) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> mm(1, n - 1);
    hoep::SystemConfig c;
    c.n = n;
    c.m = mm(rng);
    c.g.clear();
    c.kappa.clear();
    for (int k = 0; k < c.m; ++k) c.g.push_back(0.3 * std::abs(u(rng)));
    for (int k = 0; k < n - c.m - 1; ++k) c.kappa.push_back(1.0 + 0.5 * u(rng));
    c.delta.assign(n - 1, 0.0);
    c.epsilon.assign(n - 1, 0.0);
    for (auto& d : c.delta) d = u(rng);
    if (lossy) {
        c.gamma = 0.1 * std::abs(u(rng));
        c.Gamma = 0.05 * std::abs(u(rng));
    }
    for (int k = 0; k < n - 1; ++k) c.alpha.push_back({u(rng), u(rng)});
    return c;
}

}  // namespace testing
