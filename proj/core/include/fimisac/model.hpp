// SPDX-License-Identifier: Apache-2.0
//
// Scenario configuration, deformable-array geometry, steering vectors and
// user channels for a flexible-surface ISAC transceiver.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fimisac {

using cd = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

// Raised when a configuration value breaks an invariant. `field` names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Convention used for the angle-derivative of the transmit steering vector.
//  Exact        - d/dtheta of exp(j*delta*(x cos + y sin)), including the y term.
//  Axial        - -j*delta*x*sin(theta)*a_n, i.e. the y term of the prefactor dropped.
enum class DerivativeConvention { Exact, Axial };

struct SystemConfig {
    int n_tx = 8;
    int n_rx = 8;
    int n_users = 2;
    int block_length = 128;          // T, symbols per block
    double wavelength = 0.01;        // m
    double spacing = 0.005;          // d_x, m
    double y_min = 0.0;              // m
    double y_max = 0.02;             // m
    double p_max = dbm_to_watt(26);  // W
    double sigma_r2 = dbm_to_watt(-80);
    double sigma_k2 = dbm_to_watt(-80);
    double rate_threshold = 4.0;     // bps/Hz
    cd alpha_r = default_reflection(50.0);
    int quad_order = 5;
    std::uint64_t seed = 1;
    DerivativeConvention derivative = DerivativeConvention::Exact;

    double wavenumber() const { return 2.0 * kPi / wavelength; }
    double sinr_threshold() const { return std::pow(2.0, rate_threshold) - 1.0; }
    double morph_range() const { return y_max - y_min; }

    // Throws ConfigError naming the first violated field.
    void validate() const;

    // |alpha|^2 = 1e-3 * d^-2.2 with zero phase.
    static cd default_reflection(double range_m);
};

struct TargetPrior {
    double mean = kPi / 4;   // rad
    double stddev = 0.0;     // rad

    void validate() const;
};

// Prior width used by the simulation presets: 0.4 * 0.886 / (N_t cos(mean)).
double default_prior_stddev(int n_tx, double mean);

struct SurfaceShape {
    Vec y;

    static SurfaceShape flat(int n, double value) { return {Vec::Constant(n, value)}; }
    int size() const { return static_cast<int>(y.size()); }
    bool within(double lo, double hi, double slack = 0.0) const;
    SurfaceShape clamped(double lo, double hi) const;
};

// Linear array along x with per-element transverse displacement y.
struct ArrayGeometry {
    Vec x;
    SurfaceShape shape;
    double wavenumber = 0.0;

    static ArrayGeometry linear(int n, double spacing, SurfaceShape shape, double wavenumber);
    static ArrayGeometry transmit(const SystemConfig& cfg, const SurfaceShape& shape);
    static ArrayGeometry receive(const SystemConfig& cfg, const SurfaceShape& shape);

    int size() const { return static_cast<int>(x.size()); }
    const Vec& y() const { return shape.y; }
};

CVec steering(const ArrayGeometry& geom, double theta);
CVec steering_derivative(const ArrayGeometry& geom, double theta,
                         DerivativeConvention conv = DerivativeConvention::Exact);

struct PathComponent {
    cd gain;
    double angle;  // rad
};

struct UserChannel {
    std::vector<PathComponent> paths;
    double distance = 0.0;  // m
};

// h_k = sum_l alpha_l a(y^t, theta_l). Depends on the current transmit shape.
CVec channel_realize(const UserChannel& user, const ArrayGeometry& tx);
std::vector<CVec> realize_all(const std::vector<UserChannel>& users, const ArrayGeometry& tx);

// Dual-function beamformer: first n_users columns serve users, the rest are sensing streams.
struct BeamformerSet {
    CMat w;
    int n_users = 0;

    auto comm() const { return w.leftCols(n_users); }
    auto sensing() const { return w.rightCols(w.cols() - n_users); }
    double power() const { return w.squaredNorm(); }
    CMat covariance() const { return w * w.adjoint(); }
};

// SINR of user k (0-based); interference sums over every other column of W.
double sinr(const CMat& w, const CVec& h, int k, int n_users, double sigma2);
inline double sinr(const BeamformerSet& bf, const CVec& h, int k, double sigma2) {
    return sinr(bf.w, h, k, bf.n_users, sigma2);
}

struct Scenario {
    std::vector<UserChannel> users;
    std::vector<TargetPrior> targets;
};

// Users: distance ~ U[30, 80] m, one path, angle ~ U[-pi/3, pi/3],
// amplitude sqrt(1e-3 d^-2.2) with uniform phase. Users are drawn in sequence,
// so the first k users of a draw do not depend on cfg.n_users.
Scenario generate_scenario(const SystemConfig& cfg, std::uint64_t seed);

double path_amplitude(double distance_m);

}  // namespace fimisac
