// SPDX-License-Identifier: Apache-2.0

#include "fimisac/sensing.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace fimisac {

SignalBlock make_signals(int n_users, int n_sensing, int block_length, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> bit(0, 1);
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    SignalBlock out;
    out.n_users = n_users;
    out.s.resize(n_users + n_sensing, block_length);
    const double q = std::sqrt(0.5);
    for (int t = 0; t < block_length; ++t) {
        for (int k = 0; k < n_users; ++k) out.s(k, t) = cd(bit(rng) ? q : -q, bit(rng) ? q : -q);
        for (int r = 0; r < n_sensing; ++r) {
            const double re = g(rng);
            out.s(n_users + r, t) = cd(re, g(rng));
        }
    }
    return out;
}

EchoBlock synthesize_echo(const BeamformerSet& bf, const ArrayGeometry& tx, const ArrayGeometry& rx,
                          std::span<const EchoTarget> targets, int block_length, double sigma_r2,
                          std::uint64_t seed) {
    const auto sig = make_signals(bf.n_users, static_cast<int>(bf.w.cols()) - bf.n_users, block_length, seed);
    const CMat x = bf.w * sig.s;  // N_t x T
    EchoBlock out;
    out.targets.assign(targets.begin(), targets.end());
    out.y = CMat::Zero(rx.size(), block_length);
    for (const auto& t : targets) {
        const CVec a = steering(tx, t.angle);
        const CVec b = steering(rx, t.angle);
        out.y += t.reflection * b * (a.adjoint() * x);
    }
    if (sigma_r2 > 0.0) {
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
        std::normal_distribution<double> g(0.0, std::sqrt(0.5 * sigma_r2));
        for (int t = 0; t < block_length; ++t)
            for (int i = 0; i < rx.size(); ++i) {
                const double re = g(rng);
                out.y(i, t) += cd(re, g(rng));
            }
    }
    return out;
}

Beampattern beampattern(const CMat& w, const ArrayGeometry& tx, const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("beampattern: empty grid");
    Beampattern bp;
    bp.angles = grid;
    for (double th : grid) bp.gain.push_back((steering(tx, th).adjoint() * w).squaredNorm());
    const double peak = *std::max_element(bp.gain.begin(), bp.gain.end());
    for (double g : bp.gain) bp.gain_db.push_back(10.0 * std::log10(std::max(g, 1e-300) / std::max(peak, 1e-300)));
    return bp;
}

double integrated_gain(const Beampattern& bp, std::span<const std::pair<double, double>> regions) {
    double acc = 0.0;
    for (std::size_t i = 0; i < bp.angles.size(); ++i)
        for (const auto& [lo, hi] : regions)
            if (bp.angles[i] >= lo && bp.angles[i] <= hi) {
                acc += bp.gain[i];
                break;
            }
    return acc;
}

std::vector<double> angle_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw std::invalid_argument("angle_grid: bad range");
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + i * step;
    return g;
}

MusicResult music_estimate(const CMat& y, const ArrayGeometry& rx, int n_targets,
                           const std::vector<double>& grid) {
    const int n = rx.size();
    if (y.rows() != n) throw std::invalid_argument("music_estimate: echo rows != receive elements");
    if (n_targets < 1 || n_targets >= n) throw std::invalid_argument("music_estimate: need 1 <= targets < N_r");
    if (grid.empty()) throw std::invalid_argument("music_estimate: empty grid");
    const CMat r = (y * y.adjoint()) / static_cast<double>(y.cols());
    Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (r + r.adjoint()));
    const Vec& lam = eig.eigenvalues();  // ascending
    const int n_noise = n - n_targets;
    const double scale = std::max(std::abs(lam(n - 1)), 1e-300);
    if ((lam(n_noise) - lam(n_noise - 1)) / scale < 1e-12)
        throw DegenerateSubspace("signal and noise eigenvalues are not separated");
    const CMat en = eig.eigenvectors().leftCols(n_noise);

    MusicResult out;
    out.grid = grid;
    for (double th : grid) out.spectrum.push_back(1.0 / std::max((en.adjoint() * steering(rx, th)).squaredNorm(), 1e-300));
    const double peak = *std::max_element(out.spectrum.begin(), out.spectrum.end());
    for (double v : out.spectrum) out.spectrum_db.push_back(10.0 * std::log10(v / peak));

    // Local maxima first, then any remaining points, each at least two grid steps apart.
    const int m = static_cast<int>(grid.size());
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    auto is_peak = [&](int i) {
        return (i == 0 || out.spectrum[i] >= out.spectrum[i - 1]) &&
               (i == m - 1 || out.spectrum[i] >= out.spectrum[i + 1]);
    };
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        const bool pa = is_peak(a), pb = is_peak(b);
        if (pa != pb) return pa;
        return out.spectrum[a] > out.spectrum[b];
    });
    std::vector<int> chosen;
    for (int i : idx) {
        if (static_cast<int>(chosen.size()) == n_targets) break;
        bool far = true;
        for (int c : chosen)
            if (std::abs(c - i) <= 1) far = false;
        if (far) chosen.push_back(i);
    }
    for (int c : chosen) out.estimates.push_back(grid[c]);
    std::sort(out.estimates.begin(), out.estimates.end());
    return out;
}

}  // namespace fimisac
