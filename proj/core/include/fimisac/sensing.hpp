// SPDX-License-Identifier: Apache-2.0
//
// Echo synthesis, transmit beampattern and MUSIC angle estimation.

#pragma once

#include "fimisac/model.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace fimisac {

// Rows 0..n_users-1 are unit-power QPSK, the rest unit-power circular Gaussian.
struct SignalBlock {
    CMat s;
    int n_users = 0;
};
SignalBlock make_signals(int n_users, int n_sensing, int block_length, std::uint64_t seed);

struct EchoTarget {
    double angle = 0.0;
    cd reflection{0.0, 0.0};
};

struct EchoBlock {
    CMat y;  // N_r x T
    std::vector<EchoTarget> targets;
};

// Y = sum_t alpha_t b(theta_t) a(theta_t)^H W S + N with N ~ CN(0, sigma_r2).
EchoBlock synthesize_echo(const BeamformerSet& bf, const ArrayGeometry& tx, const ArrayGeometry& rx,
                          std::span<const EchoTarget> targets, int block_length, double sigma_r2,
                          std::uint64_t seed);

struct Beampattern {
    std::vector<double> angles;   // rad
    std::vector<double> gain;     // ||a^H W||^2
    std::vector<double> gain_db;  // relative to the peak
};

Beampattern beampattern(const CMat& w, const ArrayGeometry& tx, const std::vector<double>& grid);

// Sum of linear gain over the grid points inside any [lo, hi] interval.
double integrated_gain(const Beampattern& bp, std::span<const std::pair<double, double>> regions);

// Evenly spaced angles from lo to hi inclusive.
std::vector<double> angle_grid(double lo, double hi, double step);

class DegenerateSubspace : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MusicResult {
    std::vector<double> grid;
    std::vector<double> spectrum;     // 1 / ||E_n^H b||^2
    std::vector<double> spectrum_db;  // relative to the peak
    std::vector<double> estimates;    // ascending
};

MusicResult music_estimate(const CMat& y, const ArrayGeometry& rx, int n_targets,
                           const std::vector<double>& grid);

}  // namespace fimisac
