// SPDX-License-Identifier: Apache-2.0
//
// Transmit-surface shape: projected gradient ascent on the average Fisher
// information, with projection onto {box} x {SINR targets} by increasing
// penalty dual decomposition (IPDD).

#pragma once

#include "fimisac/fisher.hpp"
#include "fimisac/model.hpp"
#include "fimisac/quadrature.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace fimisac {

class ProjectionFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConstraintInfeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Gradient of avg_fisher with respect to the transmit displacements (same units as avg_fisher per metre).
Vec grad_avg_fisher_yt(const CMat& w, const SurfaceShape& y_t, const ArrayGeometry& rx,
                       const GaussHermiteRule& rule, std::span<const TargetPrior> targets,
                       const SystemConfig& cfg);

struct HAuxResult {
    CVec h;
    double multiplier = 0.0;
    double constraint = 0.0;  // <= 0 when feasible
};

// min ||h - c||^2  s.t.  2 Re{h_hat^H w_k w_k^H h} - |h_hat^H w_k|^2 >= r (sum_{i != k} |h^H w_i|^2 + sigma2)
// by bisection on the multiplier. Throws ConstraintInfeasible.
HAuxResult h_aux_update(const CVec& c, const CMat& w, int k, const CVec& h_hat, double r, double sigma2);

// Residual of the linearized SINR constraint (positive = violated).
double linearized_sinr_residual(const CVec& h, const CMat& w, int k, const CVec& h_hat, double r,
                                double sigma2);

struct IpddState {
    double mu = 1.0;
    std::vector<CVec> h_aux;
    std::vector<CVec> upsilon;
    std::vector<CVec> h_hat;
    double violation = 0.0;
};

struct ProjectionReport {
    SurfaceShape shape;
    bool short_circuit = false;   // the clamped point was already feasible
    int rounds = 0;
    double violation = 0.0;
    std::vector<double> distances;  // ||y - xi|| after each round, metres
};

struct IpddOptions {
    double mu0 = 1.0;
    double mu_shrink = 0.8;
    int inner_steps = 30;
    int max_rounds = 200;
    int stall_rounds = 20;
    double violation_tol = 1e-6;
    double sinr_margin = 1e-5;  // IPDD aims at r (1 + margin) so the realized channel clears r
};

// Nearest point to xi in the box whose realized channels keep every SINR >= thresholds[k]
// (default r_th). `anchor` is a feasible shape used to start the linearizations.
ProjectionReport project_feasible(const SurfaceShape& xi, const BeamformerSet& bf,
                                  const std::vector<UserChannel>& users, const SystemConfig& cfg,
                                  const SurfaceShape* anchor = nullptr,
                                  const std::vector<double>* thresholds = nullptr,
                                  const IpddOptions& opts = {});

struct PgaOptions {
    double step0 = 0.05;       // wavelengths; the largest component of a step moves this far
    double min_step = 1e-6;    // wavelengths
    int max_iter = 50;
    double rel_tol = 1e-6;
    IpddOptions ipdd;
};

struct PgaResult {
    SurfaceShape shape;
    double objective = 0.0;
    double initial_objective = 0.0;
    int iterations = 0;
    int projection_failures = 0;
    std::vector<double> trace;  // accepted objective values
};

// Starts from a feasible y_init; only improving projected points are accepted.
PgaResult pga(const BeamformerSet& bf, const SurfaceShape& y_init, const std::vector<UserChannel>& users,
              const ArrayGeometry& rx, const GaussHermiteRule& rule,
              std::span<const TargetPrior> targets, const SystemConfig& cfg, const PgaOptions& opts = {});

}  // namespace fimisac
