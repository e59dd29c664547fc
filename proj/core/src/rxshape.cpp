// SPDX-License-Identifier: Apache-2.0

#include "fimisac/rxshape.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace fimisac {

RxObjectiveData RxObjectiveData::make(double eta1, double eta2, const Vec& x, double wavenumber) {
    RxObjectiveData d;
    d.eta1 = eta1;
    d.eta2 = eta2;
    d.wavenumber = wavenumber;
    d.x = x;
    const int n = static_cast<int>(x.size());
    const double d2 = wavenumber * wavenumber;
    const Mat p = d2 * (Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / n));
    d.q_mat = eta2 * p;
    d.q_vec = eta1 * (p * x);
    return d;
}

RxObjectiveData rx_objective_data(const CMat& cov, const std::vector<SensingNode>& nodes,
                                  const Vec& rx_x, double wavenumber) {
    double eta1 = 0.0;
    double eta2 = 0.0;
    for (const auto& node : nodes) {
        const double p = node.a.dot(cov * node.a).real();
        eta1 += node.weight * p * std::sin(node.angle) * std::cos(node.angle);
        eta2 += node.weight * p * std::cos(node.angle) * std::cos(node.angle);
    }
    return RxObjectiveData::make(eta1, eta2, rx_x, wavenumber);
}

double rx_objective(const Vec& y, const RxObjectiveData& data) {
    return y.dot(data.q_mat * y) - 2.0 * data.q_vec.dot(y);
}

namespace {

VertexSolution from_indicator(std::vector<int> j, const RxObjectiveData& data, double y_min, double y_max) {
    VertexSolution s;
    const int n = data.size();
    s.shape.y = Vec::Constant(n, y_min);
    for (int i = 0; i < n; ++i)
        if (j[i]) s.shape.y(i) = y_max;
    s.m = std::accumulate(j.begin(), j.end(), 0);
    s.eta_star = n > 0 ? s.m * (y_max - y_min) / n : 0.0;
    s.indicator = std::move(j);
    s.objective = rx_objective(s.shape.y, data);
    return s;
}

}  // namespace

VertexSolution solve_fixed_point(const RxObjectiveData& data, double y_min, double y_max) {
    const int n = data.size();
    const double dy = y_max - y_min;
    if (n == 0 || dy <= 0.0) return from_indicator(std::vector<int>(n, 0), data, y_min, y_max);

    // On a vertex y = y_min 1 + d_y J the objective is sum_{J} c_n - A (sum J)^2.
    const double d2 = data.wavenumber * data.wavenumber;
    const double xbar = data.x.mean();
    const double a = data.eta2 * d2 * dy * dy / n;
    Vec c(n);
    for (int i = 0; i < n; ++i)
        c(i) = d2 * (data.eta2 * dy * dy - 2.0 * data.eta1 * dy * (data.x(i) - xbar));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int l, int r) { return c(l) > c(r); });

    VertexSolution best;
    bool have = false;
    std::vector<int> j(n, 0);
    for (int m = 0; m <= n; ++m) {
        if (m > 0) j[order[m - 1]] = 1;
        VertexSolution cand = from_indicator(j, data, y_min, y_max);
        if (!have || cand.objective > best.objective) {
            best = std::move(cand);
            have = true;
        }
    }

    // Thresholds tau_n = beta_n / (2 d_y), beta_n = eta2 d_y^2 - 2 eta1 d_y x_n + 2 eta2 d_y y_min.
    for (int i = 0; i < n; ++i)
        best.tau.push_back(0.5 * data.eta2 * dy - data.eta1 * data.x(i) + data.eta2 * y_min);
    std::sort(best.tau.begin(), best.tau.end());

    // Single-flip optimality: marginal gain of adding n is c_n - A(2m+1), of removing n is A(2m-1) - c_n.
    best.saddle = true;
    for (int i = 0; i < n; ++i) {
        const double gain = best.indicator[i] ? a * (2 * best.m - 1) - c(i) : c(i) - a * (2 * best.m + 1);
        if (gain > 1e-12 * (std::abs(c(i)) + a * (2 * best.m + 1))) best.saddle = false;
    }
    return best;
}

VertexSolution brute_force_rxshape(const RxObjectiveData& data, double y_min, double y_max) {
    const int n = data.size();
    if (n > 20) throw std::invalid_argument("brute_force_rxshape: at most 20 elements");
    Vec y(n);
    double best_val = 0.0;
    unsigned long best_mask = 0;
    for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
        for (int i = 0; i < n; ++i) y(i) = (mask >> i) & 1ul ? y_max : y_min;
        const double v = rx_objective(y, data);
        if (mask == 0 || v > best_val) {
            best_val = v;
            best_mask = mask;
        }
    }
    std::vector<int> j(n);
    for (int i = 0; i < n; ++i) j[i] = static_cast<int>((best_mask >> i) & 1ul);
    return from_indicator(std::move(j), data, y_min, y_max);
}

}  // namespace fimisac
