// SPDX-License-Identifier: Apache-2.0

#include "fimisac/beamform.hpp"
#include "fimisac/fisher.hpp"
#include "fimisac/quadrature.hpp"
#include "fimisac/rxshape.hpp"
#include "fimisac/txshape.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace fimisac;

namespace {

SurfaceShape bumpy(int n, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, hi);
    Vec y(n);
    for (auto& v : y) v = u(rng);
    return {y};
}

CMat random_beams(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    CMat w(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) w(i, j) = cd(g(rng), g(rng));
    return w;
}

void BM_Efim(benchmark::State& st) {
    SystemConfig cfg;
    cfg.n_tx = cfg.n_rx = static_cast<int>(st.range(0));
    auto tx = ArrayGeometry::transmit(cfg, bumpy(cfg.n_tx, cfg.y_max, 1));
    auto rx = ArrayGeometry::receive(cfg, bumpy(cfg.n_rx, cfg.y_max, 2));
    CMat w = random_beams(cfg.n_tx, cfg.n_tx + 2, 3);
    double th = 0.7;
    for (auto _ : st) {
        benchmark::DoNotOptimize(efim_theta(w, tx, rx, th, cfg.alpha_r, cfg.block_length, cfg.sigma_r2));
        th += 1e-9;
    }
}
BENCHMARK(BM_Efim)->Arg(8)->Arg(16)->Arg(32);

void BM_RxScan(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = i * 0.005;
    auto data = RxObjectiveData::make(0.3, 0.8, x, 2 * kPi / 0.01);
    for (auto _ : st) benchmark::DoNotOptimize(solve_fixed_point(data, 0.0, 0.02));
}
BENCHMARK(BM_RxScan)->Arg(8)->Arg(64)->Arg(512);

void BM_TxGradient(benchmark::State& st) {
    SystemConfig cfg;
    std::vector<TargetPrior> t{{kPi / 4, default_prior_stddev(cfg.n_tx, kPi / 4)}};
    auto rx = ArrayGeometry::receive(cfg, bumpy(cfg.n_rx, cfg.y_max, 4));
    auto y = bumpy(cfg.n_tx, cfg.y_max, 5);
    CMat w = random_beams(cfg.n_tx, cfg.n_users + cfg.n_rx, 6);
    const auto rule = gh_rule(cfg.quad_order);
    for (auto _ : st) benchmark::DoNotOptimize(grad_avg_fisher_yt(w, y, rx, rule, t, cfg));
}
BENCHMARK(BM_TxGradient);

// one full beamforming design (penalty loop of conic solves) on the default scenario
void BM_BeamformSdr(benchmark::State& st) {
    SystemConfig cfg;
    cfg.n_users = static_cast<int>(st.range(0));
    std::vector<TargetPrior> t{{kPi / 4, default_prior_stddev(cfg.n_tx, kPi / 4)}};
    auto tx = ArrayGeometry::transmit(cfg, SurfaceShape::flat(cfg.n_tx, 0.0));
    auto rx = ArrayGeometry::receive(cfg, SurfaceShape::flat(cfg.n_rx, 0.0));
    auto nodes = sensing_nodes(tx, rx, gh_rule(cfg.quad_order), t, cfg.derivative);
    auto h = realize_all(generate_scenario(cfg, 7001).users, tx);
    for (auto _ : st) benchmark::DoNotOptimize(design_beamformer(nodes, h, cfg));
}
BENCHMARK(BM_BeamformSdr)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
