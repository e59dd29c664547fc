// SPDX-License-Identifier: Apache-2.0

#include "fimisac/ao.hpp"

#include "fimisac/quadrature.hpp"
#include "fimisac/rxshape.hpp"

#include <chrono>
#include <cmath>

namespace fimisac {

const char* to_string(AoMode m) {
    switch (m) {
        case AoMode::RA: return "RA";
        case AoMode::RxOnly: return "RXonly";
        case AoMode::TxOnly: return "TXonly";
        case AoMode::Joint: return "Joint";
    }
    return "?";
}

std::optional<AoMode> parse_mode(const std::string& s) {
    for (AoMode m : {AoMode::RA, AoMode::RxOnly, AoMode::TxOnly, AoMode::Joint})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

namespace {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

namespace {

struct Context {
    const SystemConfig& cfg;
    const std::vector<UserChannel>& users;
    std::span<const TargetPrior> targets;
    const GaussHermiteRule& rule;
    const AoOptions& opts;

    double surrogate(const CMat& w, const SurfaceShape& yt, const SurfaceShape& yr) const {
        return avg_fisher(w, ArrayGeometry::transmit(cfg, yt), ArrayGeometry::receive(cfg, yr), rule,
                          targets, cfg);
    }
};

// One alternating phase; returns false if the very first beamforming stage is infeasible.
bool run_phase(const Context& ctx, AoResult& res, double& f, bool move_rx, bool move_tx, bool first) {
    const auto& cfg = ctx.cfg;
    for (int iter = 1; iter <= ctx.opts.max_iter; ++iter) {
        const double f_start = f;
        const bool initial = first && iter == 1;
        const auto tx = ArrayGeometry::transmit(cfg, res.y_t);
        const auto rx = ArrayGeometry::receive(cfg, res.y_r);
        const auto channels = realize_all(ctx.users, tx);

        {
            Stopwatch sw;
            try {
                const auto nodes = sensing_nodes(tx, rx, ctx.rule, ctx.targets, cfg.derivative);
                auto bf = design_beamformer(nodes, channels, cfg, ctx.opts.sdr);
                res.max_kkt = std::max(res.max_kkt, bf.sdr.max_kkt);
                res.sdr_kkt.push_back(bf.sdr.max_kkt);
                const double fb = ctx.surrogate(bf.w.w, res.y_t, res.y_r);
                if (initial || fb >= f) {
                    res.w = std::move(bf.w);
                    res.rank_one = res.rank_one && bf.sdr.rank_one;
                    f = fb;
                } else {
                    ++res.rejected_stages;
                }
            } catch (const std::runtime_error& e) {
                if (!dynamic_cast<const InfeasibleSdr*>(&e) && !dynamic_cast<const ValidationFailure*>(&e) &&
                    !dynamic_cast<const conic::NumericalBreakdown*>(&e))
                    throw;
                if (initial) {
                    res.infeasible_reason = e.what();
                    return false;
                }
                ++res.rejected_stages;
            }
            res.timings.beamform += sw.seconds();
            res.stage_trace.push_back(f);
        }

        if (move_rx) {
            Stopwatch sw;
            const auto nodes = sensing_nodes(tx, rx, ctx.rule, ctx.targets, cfg.derivative);
            const auto data = rx_objective_data(res.w.covariance(), nodes, rx.x, cfg.wavenumber());
            const auto sol = solve_fixed_point(data, cfg.y_min, cfg.y_max);
            const double fr = ctx.surrogate(res.w.w, res.y_t, sol.shape);
            if (fr >= f) {
                res.y_r = sol.shape;
                f = fr;
            } else {
                ++res.rejected_stages;
            }
            res.timings.rx += sw.seconds();
            res.stage_trace.push_back(f);
        }

        if (move_tx) {
            Stopwatch sw;
            const auto rx_now = ArrayGeometry::receive(cfg, res.y_r);
            const auto out = pga(res.w, res.y_t, ctx.users, rx_now, ctx.rule, ctx.targets, cfg, ctx.opts.pga);
            res.projection_failures += out.projection_failures;
            if (out.objective >= f) {
                res.y_t = out.shape;
                f = out.objective;
            } else {
                ++res.rejected_stages;
            }
            res.timings.tx += sw.seconds();
            res.stage_trace.push_back(f);
        }

        res.trace.push_back(f);
        ++res.iterations;
        if (!move_rx && !move_tx) break;
        if (iter > 1 && std::abs(f - f_start) <= ctx.opts.rel_tol * std::abs(f_start)) break;
    }
    return true;
}

}  // namespace

AoResult optimize(const SystemConfig& cfg, const std::vector<UserChannel>& users,
                  std::span<const TargetPrior> targets, AoMode mode, const AoOptions& opts) {
    cfg.validate();
    const auto rule = gh_rule(cfg.quad_order);
    const Context ctx{cfg, users, targets, rule, opts};

    AoResult res;
    res.mode = mode;
    res.y_t = SurfaceShape::flat(cfg.n_tx, cfg.y_min);
    res.y_r = SurfaceShape::flat(cfg.n_rx, cfg.y_min);
    double f = 0.0;
    bool ok = false;
    switch (mode) {
        case AoMode::RA: ok = run_phase(ctx, res, f, false, false, true); break;
        case AoMode::RxOnly: ok = run_phase(ctx, res, f, true, false, true); break;
        case AoMode::TxOnly: ok = run_phase(ctx, res, f, false, true, true); break;
        case AoMode::Joint:
            // Receive phase first (identical to RxOnly), then all three blocks.
            ok = run_phase(ctx, res, f, true, false, true) && run_phase(ctx, res, f, true, true, false);
            break;
    }
    res.feasible = ok;
    return res;
}

}  // namespace fimisac
