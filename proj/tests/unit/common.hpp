// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fimisac/model.hpp"

#include <doctest.h>

#include <random>

namespace testutil {

using namespace fimisac;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline CMat random_cmat(std::mt19937_64& rng, int r, int c) {
    std::normal_distribution<double> g;
    CMat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = cd(g(rng), g(rng));
    return m;
}

inline CVec random_cvec(std::mt19937_64& rng, int n) { return random_cmat(rng, n, 1).col(0); }

inline SurfaceShape random_shape(std::mt19937_64& rng, int n, double lo, double hi) {
    Vec y(n);
    for (int i = 0; i < n; ++i) y(i) = uniform(rng, lo, hi);
    return {y};
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Default scenario: 8x8 arrays, lambda = 1 cm, 26 dBm, -80 dBm noise.
inline SystemConfig default_config() { return SystemConfig{}; }

inline std::vector<TargetPrior> default_targets(const SystemConfig& cfg) {
    return {TargetPrior{kPi / 4, default_prior_stddev(cfg.n_tx, kPi / 4)}};
}

}  // namespace testutil
