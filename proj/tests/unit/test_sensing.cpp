// SPDX-License-Identifier: Apache-2.0
#include "fimisac/sensing.hpp"

#include "common.hpp"

using namespace fimisac;
using namespace testutil;

namespace {

ArrayGeometry flat_tx(const SystemConfig& c) { return ArrayGeometry::transmit(c, SurfaceShape::flat(c.n_tx, 0.0)); }
ArrayGeometry flat_rx(const SystemConfig& c) { return ArrayGeometry::receive(c, SurfaceShape::flat(c.n_rx, 0.0)); }

double deg(double d) { return d * kPi / 180; }

}  // namespace

TEST_CASE("signal block is unit power and nearly orthogonal") {
    auto s = make_signals(2, 6, 4096, 3);
    CMat g = s.s * s.s.adjoint() / 4096.0;
    CHECK((g - CMat::Identity(8, 8)).cwiseAbs().maxCoeff() < 5.0 / std::sqrt(4096.0));
    for (int t = 0; t < 20; ++t) CHECK(std::abs(s.s(0, t)) == doctest::Approx(1.0));
}

TEST_CASE("echo synthesis") {
    SystemConfig cfg;
    std::mt19937_64 rng(71);
    BeamformerSet bf{random_cmat(rng, cfg.n_tx, 4), 2};
    auto tx = flat_tx(cfg), rx = flat_rx(cfg);
    SUBCASE("silent target, no noise") {
        std::vector<EchoTarget> t{{0.5, 0.0}};
        CHECK(synthesize_echo(bf, tx, rx, t, 64, 0.0, 1).y.norm() == 0.0);
    }
    SUBCASE("single noiseless target is rank one") {
        std::vector<EchoTarget> t{{0.5, cd(0.3, 0.2)}};
        auto e = synthesize_echo(bf, tx, rx, t, 64, 0.0, 1);
        Eigen::JacobiSVD<CMat> svd(e.y);
        CHECK(svd.singularValues()(1) < 1e-12 * svd.singularValues()(0));
        CVec b = steering(rx, 0.5);
        CHECK((e.y - b * (b.adjoint() * e.y) / b.squaredNorm()).norm() < 1e-10 * e.y.norm());
    }
    SUBCASE("linear in the reflection and in W") {
        std::vector<EchoTarget> t1{{0.5, cd(0.3, 0.2)}}, t2{{0.5, cd(0.6, 0.4)}};
        auto a = synthesize_echo(bf, tx, rx, t1, 64, 0.0, 1);
        CHECK((synthesize_echo(bf, tx, rx, t2, 64, 0.0, 1).y - 2.0 * a.y).norm() < 1e-12 * a.y.norm());
        BeamformerSet bf3{bf.w * 3.0, 2};
        CHECK((synthesize_echo(bf3, tx, rx, t1, 64, 0.0, 1).y - 3.0 * a.y).norm() < 1e-12 * a.y.norm());
    }
    SUBCASE("pure noise covariance") {
        BeamformerSet zero{CMat::Zero(cfg.n_tx, 4), 2};
        std::vector<EchoTarget> t{{0.5, cd(1, 0)}};
        auto e = synthesize_echo(zero, tx, rx, t, 10000, 2.0, 5);
        CMat r = e.y * e.y.adjoint() / 10000.0;
        CHECK((r - 2.0 * CMat::Identity(cfg.n_rx, cfg.n_rx)).norm() <= 0.05 * 2.0 * std::sqrt(double(cfg.n_rx)));
    }
}

TEST_CASE("beampattern") {
    SystemConfig cfg;
    auto tx = flat_tx(cfg);
    SUBCASE("matched beam peaks at its angle") {
        const double th0 = deg(30);
        CMat w = std::sqrt(cfg.p_max / cfg.n_tx) * steering(tx, th0);
        auto bp = beampattern(w, tx, angle_grid(0.0, kPi, deg(0.1)));
        auto it = std::max_element(bp.gain.begin(), bp.gain.end());
        CHECK(std::abs(bp.angles[it - bp.gain.begin()] - th0) <= deg(0.1));
        CHECK(*std::max_element(bp.gain_db.begin(), bp.gain_db.end()) == doctest::Approx(0.0));
    }
    SUBCASE("average over cos(theta) recovers the radiated power") {
        std::mt19937_64 rng(72);
        CMat w = random_cmat(rng, cfg.n_tx, 3);
        std::vector<double> grid;
        const int n = 20000;
        for (int i = 0; i < n; ++i) grid.push_back(std::acos(-1.0 + 2.0 * (i + 0.5) / n));
        auto bp = beampattern(w, tx, grid);
        double mean = 0.0;
        for (double g : bp.gain) mean += g / n;
        CHECK(std::abs(mean - w.squaredNorm()) <= 0.02 * w.squaredNorm());
    }
    SUBCASE("real weights on a symmetric array give a symmetric pattern") {
        SystemConfig c;
        // centre the array so it is symmetric about broadside
        auto g = flat_tx(c);
        g.x.array() -= g.x.mean();
        std::mt19937_64 rng(73);
        Vec v = Vec::Random(c.n_tx);
        CMat w = (v + v.reverse()).cast<cd>();
        auto bp = beampattern(w, g, angle_grid(0.0, kPi, deg(1)));
        for (std::size_t i = 0; i < bp.gain.size(); ++i)
            CHECK(std::abs(bp.gain[i] - bp.gain[bp.gain.size() - 1 - i]) <= 1e-9 * (1 + bp.gain[i]));
    }
    SUBCASE("grid helpers") {
        auto g = angle_grid(0.0, 1.0, 0.25);
        CHECK(g.size() == 5);
        CHECK(g.back() == doctest::Approx(1.0));
        Beampattern bp{{0.0, 0.5, 1.0}, {1.0, 2.0, 4.0}, {}};
        std::vector<std::pair<double, double>> reg{{0.4, 1.1}};
        CHECK(integrated_gain(bp, reg) == 6.0);
    }
}

TEST_CASE("MUSIC") {
    SystemConfig cfg;
    auto tx = flat_tx(cfg), rx = flat_rx(cfg);
    std::mt19937_64 rng(74);
    BeamformerSet bf{random_cmat(rng, cfg.n_tx, cfg.n_rx), 0};
    const auto grid = angle_grid(0.0, kPi, deg(0.1));
    SUBCASE("noiseless single target") {
        std::vector<EchoTarget> t{{deg(40), cd(1, 0)}};
        auto e = synthesize_echo(bf, tx, rx, t, 256, 1e-9, 3);
        auto m = music_estimate(e.y, rx, 1, grid);
        REQUIRE(m.estimates.size() == 1);
        CHECK(std::abs(m.estimates[0] - deg(40)) <= deg(0.1) + 1e-12);
    }
    SUBCASE("two targets and global phase") {
        std::vector<EchoTarget> t{{deg(35), cd(1, 0)}, {deg(120), cd(0, 1)}};
        auto e = synthesize_echo(bf, tx, rx, t, 256, 1e-3, 4);
        auto m = music_estimate(e.y, rx, 2, grid);
        REQUIRE(m.estimates.size() == 2);
        CHECK(std::abs(m.estimates[0] - deg(35)) <= deg(0.5));
        CHECK(std::abs(m.estimates[1] - deg(120)) <= deg(0.5));
        auto rotated = music_estimate(e.y * std::polar(1.0, 0.7), rx, 2, grid);
        for (std::size_t i = 0; i < grid.size(); i += 97)
            CHECK(rel_err(rotated.spectrum[i], m.spectrum[i]) < 1e-8);
    }
    SUBCASE("boundary subspace dimension") {
        std::vector<EchoTarget> t{{deg(100), cd(1, 0)}};
        auto e = synthesize_echo(bf, tx, rx, t, 256, 1.0, 5);
        auto m = music_estimate(e.y, rx, cfg.n_rx - 1, grid);
        CHECK(m.estimates.size() == static_cast<std::size_t>(cfg.n_rx - 1));
    }
    SUBCASE("degenerate data") {
        CHECK_THROWS_AS(music_estimate(CMat::Zero(cfg.n_rx, 64), rx, 1, grid), DegenerateSubspace);
    }
}
