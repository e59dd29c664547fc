// SPDX-License-Identifier: Apache-2.0
//
// Receive-surface shape: maximize y^T Q y - 2 q^T y over the box. With Q >= 0 the
// maximum sits on a vertex, found by a sorted threshold scan.

#pragma once

#include "fimisac/fisher.hpp"
#include "fimisac/model.hpp"

#include <vector>

namespace fimisac {

struct RxObjectiveData {
    double eta1 = 0.0;  // sum_u w_u p_u sin cos
    double eta2 = 0.0;  // sum_u w_u p_u cos^2
    double wavenumber = 0.0;
    Vec x;              // receive element abscissas
    Mat q_mat;          // eta2 * P
    Vec q_vec;          // eta1 * P x

    static RxObjectiveData make(double eta1, double eta2, const Vec& x, double wavenumber);
    int size() const { return static_cast<int>(x.size()); }
};

// p_u = a_u^H E a_u from the transmit side; nodes carry weights and angles.
RxObjectiveData rx_objective_data(const CMat& cov, const std::vector<SensingNode>& nodes,
                                  const Vec& rx_x, double wavenumber);

double rx_objective(const Vec& y, const RxObjectiveData& data);

struct VertexSolution {
    std::vector<int> indicator;  // J_n in {0, 1}
    double eta_star = 0.0;       // m * d_y / N_r
    std::vector<double> tau;     // thresholds, ascending
    int m = 0;                   // sum of J
    bool saddle = false;         // no single flip improves the chosen vertex
    SurfaceShape shape;
    double objective = 0.0;
};

VertexSolution solve_fixed_point(const RxObjectiveData& data, double y_min, double y_max);

// Exhaustive search over the 2^N vertices, N <= 20. Ties keep the smaller binary value.
VertexSolution brute_force_rxshape(const RxObjectiveData& data, double y_min, double y_max);

}  // namespace fimisac
