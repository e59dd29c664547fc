// SPDX-License-Identifier: Apache-2.0
//
// Gauss-Hermite rules and prior-weighted averaging over the target angle.

#pragma once

#include "fimisac/model.hpp"

#include <functional>
#include <vector>

namespace fimisac {

struct GaussHermiteRule {
    int order = 0;
    Vec nodes;        // roots of H_U, ascending
    Vec raw_weights;  // integrate against exp(-z^2); sum to sqrt(pi)
    Vec weights;      // raw_weights / sqrt(pi); sum to 1
};

// Nodes from the symmetric tridiagonal Jacobi matrix of the Hermite recurrence,
// weights from w_u = 2^(U-1) U! sqrt(pi) / (U^2 H_{U-1}(z_u)^2). 1 <= order <= 50.
GaussHermiteRule gh_rule(int order);

// Physicists' Hermite polynomial H_n(z) by three-term recurrence.
double hermite(int n, double z);

// theta_u = mean + sqrt(2) * stddev * z_u
std::vector<double> nodes_to_angles(const GaussHermiteRule& rule, const TargetPrior& prior);

// Sum_u weights[u] * f(theta_u): a constant averages to itself.
double gh_average(const std::function<double(double)>& f, const GaussHermiteRule& rule,
                  const TargetPrior& prior);

// Same sum with the raw (un-normalized) weights, i.e. sqrt(pi) times gh_average.
double gh_sum_raw(const std::function<double(double)>& f, const GaussHermiteRule& rule,
                  const TargetPrior& prior);

}  // namespace fimisac
