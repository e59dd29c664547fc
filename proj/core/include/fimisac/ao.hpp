// SPDX-License-Identifier: Apache-2.0
//
// Alternating optimization over the beamformer and the two surface shapes.

#pragma once

#include "fimisac/beamform.hpp"
#include "fimisac/fisher.hpp"
#include "fimisac/model.hpp"
#include "fimisac/txshape.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fimisac {

// RA keeps both arrays flat; RxOnly / TxOnly reshape one side; Joint reshapes both, running
// the RxOnly schedule to convergence before the transmit shape joins in.
enum class AoMode { RA, RxOnly, TxOnly, Joint };

const char* to_string(AoMode m);
std::optional<AoMode> parse_mode(const std::string& s);

struct AoOptions {
    int max_iter = 30;
    double rel_tol = 1e-4;
    SdrOptions sdr;
    PgaOptions pga;
};

struct StageTimings {
    double beamform = 0.0;
    double rx = 0.0;
    double tx = 0.0;
};

struct AoResult {
    AoMode mode = AoMode::RA;
    bool feasible = false;
    std::string infeasible_reason;
    BeamformerSet w;
    SurfaceShape y_r, y_t;
    std::vector<double> trace;        // surrogate at the end of each outer iteration
    std::vector<double> stage_trace;  // surrogate after every stage
    int iterations = 0;
    StageTimings timings;
    double max_kkt = 0.0;
    bool rank_one = true;
    int projection_failures = 0;
    int rejected_stages = 0;
    std::vector<double> sdr_kkt;  // worst KKT residual of every beamforming stage
};

// Surrogate = sum over targets of the prior-averaged Fisher information.
AoResult optimize(const SystemConfig& cfg, const std::vector<UserChannel>& users,
                  std::span<const TargetPrior> targets, AoMode mode, const AoOptions& opts = {});

}  // namespace fimisac
