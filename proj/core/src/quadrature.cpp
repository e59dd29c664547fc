// SPDX-License-Identifier: Apache-2.0

#include "fimisac/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace fimisac {

double hermite(int n, double z) {
    if (n < 0) throw std::invalid_argument("hermite: negative degree");
    if (n == 0) return 1.0;
    double prev = 1.0, cur = 2.0 * z;
    for (int k = 1; k < n; ++k) {
        const double next = 2.0 * z * cur - 2.0 * k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

GaussHermiteRule gh_rule(int order) {
    if (order < 1 || order > 50) throw std::invalid_argument("gh_rule: order must lie in [1, 50]");

    // Jacobi matrix of the monic Hermite recurrence: off-diagonal sqrt(k/2).
    Mat jacobi = Mat::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(0.5 * k);
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(jacobi, Eigen::EigenvaluesOnly);

    GaussHermiteRule rule;
    rule.order = order;
    rule.nodes = eig.eigenvalues();
    // Exact symmetry about zero.
    for (int i = 0; i < order / 2; ++i) {
        const double m = 0.5 * (rule.nodes(order - 1 - i) - rule.nodes(i));
        rule.nodes(i) = -m;
        rule.nodes(order - 1 - i) = m;
    }
    if (order % 2 == 1) rule.nodes(order / 2) = 0.0;

    // 2^(U-1) U! sqrt(pi) / (U^2 H_{U-1}(z)^2), evaluated in log space to avoid overflow.
    const double log_num = (order - 1) * std::log(2.0) + std::lgamma(order + 1.0) +
                           0.5 * std::log(kPi) - 2.0 * std::log(static_cast<double>(order));
    rule.raw_weights.resize(order);
    for (int u = 0; u < order; ++u) {
        const double h = hermite(order - 1, rule.nodes(u));
        rule.raw_weights(u) = std::exp(log_num - 2.0 * std::log(std::abs(h)));
    }
    rule.weights = rule.raw_weights / std::sqrt(kPi);
    return rule;
}

std::vector<double> nodes_to_angles(const GaussHermiteRule& rule, const TargetPrior& prior) {
    std::vector<double> out(static_cast<std::size_t>(rule.order));
    for (int u = 0; u < rule.order; ++u)
        out[u] = prior.mean + std::sqrt(2.0) * prior.stddev * rule.nodes(u);
    return out;
}

double gh_average(const std::function<double(double)>& f, const GaussHermiteRule& rule,
                  const TargetPrior& prior) {
    const auto angles = nodes_to_angles(rule, prior);
    double acc = 0.0;
    for (int u = 0; u < rule.order; ++u) acc += rule.weights(u) * f(angles[u]);
    return acc;
}

double gh_sum_raw(const std::function<double(double)>& f, const GaussHermiteRule& rule,
                  const TargetPrior& prior) {
    const auto angles = nodes_to_angles(rule, prior);
    double acc = 0.0;
    for (int u = 0; u < rule.order; ++u) acc += rule.raw_weights(u) * f(angles[u]);
    return acc;
}

}  // namespace fimisac
