// SPDX-License-Identifier: Apache-2.0
#include "fimisac/ao.hpp"
#include "fimisac/experiment.hpp"

#include "common.hpp"

#include <map>

using namespace fimisac;
using namespace testutil;

TEST_CASE("mode names") {
    for (auto m : {AoMode::RA, AoMode::RxOnly, AoMode::TxOnly, AoMode::Joint}) CHECK(parse_mode(to_string(m)) == m);
    CHECK(!parse_mode("joint").has_value());
}

TEST_CASE("alternating optimization on one scenario") {
    SystemConfig cfg;
    cfg.rate_threshold = 3;
    auto users = generate_scenario(cfg, 2).users;
    auto targets = default_targets(cfg);
    std::map<AoMode, AoResult> res;
    for (auto m : {AoMode::RA, AoMode::RxOnly, AoMode::TxOnly, AoMode::Joint}) {
        res[m] = optimize(cfg, users, targets, m);
        const auto& r = res[m];
        REQUIRE(r.feasible);
        CHECK(experiment::trace_non_decreasing(r.stage_trace));
        CHECK(r.max_kkt <= 1e-6);
        CHECK(r.rank_one);
        CHECK(r.y_r.within(cfg.y_min, cfg.y_max));
        CHECK(r.y_t.within(cfg.y_min, cfg.y_max));
        auto tx = ArrayGeometry::transmit(cfg, r.y_t);
        for (int k = 0; k < cfg.n_users; ++k)
            CHECK(sinr(r.w, channel_realize(users[k], tx), k, cfg.sigma_k2) >= cfg.sinr_threshold() * (1 - 1e-4));
        CHECK(r.w.power() <= cfg.p_max * (1 + 1e-6));
    }
    CHECK(res[AoMode::RA].iterations == 1);
    CHECK((res[AoMode::RA].y_t.y.array() == cfg.y_min).all());
    CHECK((res[AoMode::RxOnly].y_t.y.array() == cfg.y_min).all());
    CHECK((res[AoMode::TxOnly].y_r.y.array() == cfg.y_min).all());
    const double ra = res[AoMode::RA].trace.back();
    CHECK(res[AoMode::RxOnly].trace.back() >= ra);
    CHECK(res[AoMode::TxOnly].trace.back() >= ra);
    CHECK(res[AoMode::Joint].trace.back() >= res[AoMode::RxOnly].trace.back());
}

TEST_CASE("degenerate morphing range collapses every mode onto the rigid array") {
    SystemConfig cfg;
    cfg.y_min = cfg.y_max = 0.0;
    auto users = generate_scenario(cfg, 1).users;
    auto targets = default_targets(cfg);
    const double ra = optimize(cfg, users, targets, AoMode::RA).trace.back();
    const double joint = optimize(cfg, users, targets, AoMode::Joint).trace.back();
    CHECK(rel_err(joint, ra) <= 1e-8);
}

TEST_CASE("infeasible QoS is reported, not thrown") {
    SystemConfig cfg;
    cfg.rate_threshold = 30;
    auto users = generate_scenario(cfg, 1).users;
    auto targets = default_targets(cfg);
    auto r = optimize(cfg, users, targets, AoMode::Joint);
    CHECK(!r.feasible);
    CHECK(!r.infeasible_reason.empty());
}
