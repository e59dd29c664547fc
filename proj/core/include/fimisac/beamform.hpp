// SPDX-License-Identifier: Apache-2.0
//
// Beamformer design at fixed array shapes: semidefinite relaxation with
// Schur-complement Fisher blocks, a rank-one penalty linearized around the
// dominant eigenvector, and beam extraction.

#pragma once

#include "fimisac/conic.hpp"
#include "fimisac/fisher.hpp"
#include "fimisac/model.hpp"

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fimisac {

struct SdrOptions {
    bool per_column_sensing = false;  // one penalized block per sensing column instead of one aggregate
    double rho0_factor = 10.0;        // rho_0 = rho0_factor * P_max
    double rho_shrink = 0.5;
    int max_outer = 15;
    double ratio_target = 0.999;
    double objective_tol = 1e-5;
    double solver_tol = conic::kDefaultTol;
};

// Column/row bookkeeping of an assembled SDR. Covariances are in units of P_max.
struct SdrLayout {
    int n_tx = 0;
    int power_row = -1;
    std::vector<int> sinr_rows;
    std::vector<int> comm_offsets;
    std::vector<int> sensing_offsets;
    std::vector<int> schur_offsets;
    int gamma_offset = -1;
    int slack_offset = -1;
    std::vector<double> derivative_scale;  // per node; adot is multiplied by this inside the LMI

    int power_rows() const { return power_row >= 0 ? 1 : 0; }
    int sinr_count() const { return static_cast<int>(sinr_rows.size()); }
    int schur_blocks() const { return static_cast<int>(schur_offsets.size()); }
};

// Linearized rank penalty (1/rho) * sum_k tr((I - v_k v_k^H) E_k).
struct RankPenalty {
    double inv_rho = 0.0;
    std::vector<CVec> directions;  // one per penalized block (comm blocks first)
};

struct SdrProblem {
    conic::ConicProblem problem;
    SdrLayout layout;
};

SdrProblem build_sdr(const std::vector<SensingNode>& nodes, const std::vector<CVec>& channels,
                     const SystemConfig& cfg, const SdrOptions& opts = {},
                     const RankPenalty* penalty = nullptr);

struct SdrIterate {
    std::vector<CMat> comm;     // E_k, watts
    std::vector<CMat> sensing;  // E_R (or one per column)
    Vec gamma;
    double rho = 0.0;
    double objective = 0.0;        // surrogate (average Fisher information) of the relaxed solution
    double plain_objective = 0.0;  // same for the penalty-free relaxation
    std::vector<double> ratios;    // lambda_max / trace per comm block
    int outer_iterations = 0;
    int solves = 0;
    bool rank_one = false;         // false = RankOneFailure
    double max_kkt = 0.0;          // worst KKT residual across all solves
    bool solver_ok = true;         // every solve reported Optimal
};

class InfeasibleSdr : public std::runtime_error {
public:
    explicit InfeasibleSdr(double min_power)
        : std::runtime_error("SINR targets need " + std::to_string(min_power) + " W, above the budget"),
          min_power_(min_power) {}
    double min_power() const noexcept { return min_power_; }

private:
    double min_power_;
};

class ValidationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RankOneFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Smallest total power (watts) meeting every SINR target with communication beams only;
// 0 when K = 0. The fixed-point iteration increases monotonically, so it stops as soon as the
// running total passes `budget` and returns that (lower) bound.
double min_sinr_power(const std::vector<CVec>& channels, const SystemConfig& cfg,
                      double budget = std::numeric_limits<double>::infinity());

// Penalty-free solve followed by the shrinking-rho SCA rounds. Throws InfeasibleSdr.
SdrIterate penalty_sca_loop(const std::vector<SensingNode>& nodes, const std::vector<CVec>& channels,
                            const SystemConfig& cfg, const SdrOptions& opts = {});

// w_k = E_k h_k / sqrt(h_k^H E_k h_k) (equal to sqrt(lambda_max) v_max for rank-one E_k); whatever
// E_k - w_k w_k^H leaves behind joins the sensing covariance, which is factored into n_rx columns.
// Throws ValidationFailure if the result misses power or SINR by more than the tolerances.
BeamformerSet extract_beams(const SdrIterate& it, const std::vector<CVec>& channels,
                            const SystemConfig& cfg, double sinr_rel_tol = 1e-4,
                            double power_rel_tol = 1e-6);

struct BeamformResult {
    BeamformerSet w;
    SdrIterate sdr;
};

BeamformResult design_beamformer(const std::vector<SensingNode>& nodes,
                                 const std::vector<CVec>& channels, const SystemConfig& cfg,
                                 const SdrOptions& opts = {});

}  // namespace fimisac
