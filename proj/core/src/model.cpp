// SPDX-License-Identifier: Apache-2.0

#include "fimisac/model.hpp"

#include <random>

namespace fimisac {

void SystemConfig::validate() const {
    if (n_tx < 1) throw ConfigError("n_tx", "must be >= 1");
    if (n_rx < n_tx) throw ConfigError("n_rx", "must satisfy n_rx >= n_tx");
    if (n_users < 0) throw ConfigError("n_users", "must be >= 0");
    if (block_length <= n_tx) throw ConfigError("block_length", "must exceed n_tx");
    if (!(wavelength > 0.0)) throw ConfigError("wavelength", "must be positive");
    if (!(spacing > 0.0)) throw ConfigError("spacing", "must be positive");
    if (!(y_min <= y_max)) throw ConfigError("y_min", "must not exceed y_max");
    if (!(p_max > 0.0)) throw ConfigError("p_max", "must be positive");
    if (!(sigma_r2 > 0.0)) throw ConfigError("sigma_r2", "must be positive");
    if (!(sigma_k2 > 0.0)) throw ConfigError("sigma_k2", "must be positive");
    if (!std::isfinite(rate_threshold) || rate_threshold < 0.0)
        throw ConfigError("rate_threshold", "must be finite and non-negative");
    if (!std::isfinite(alpha_r.real()) || !std::isfinite(alpha_r.imag()))
        throw ConfigError("alpha_r", "must be finite");
    if (quad_order < 1 || quad_order > 50) throw ConfigError("quad_order", "must lie in [1, 50]");
}

cd SystemConfig::default_reflection(double range_m) {
    return {std::sqrt(1e-3 * std::pow(range_m, -2.2)), 0.0};
}

void TargetPrior::validate() const {
    if (!std::isfinite(mean)) throw ConfigError("target.mean", "must be finite");
    if (!(stddev > 0.0) || !std::isfinite(stddev))
        throw ConfigError("target.stddev", "must be positive");
}

double default_prior_stddev(int n_tx, double mean) {
    return 0.4 * 0.886 / (n_tx * std::cos(mean));
}

bool SurfaceShape::within(double lo, double hi, double slack) const {
    return (y.array() >= lo - slack).all() && (y.array() <= hi + slack).all();
}

SurfaceShape SurfaceShape::clamped(double lo, double hi) const {
    return {y.cwiseMax(lo).cwiseMin(hi)};
}

ArrayGeometry ArrayGeometry::linear(int n, double spacing, SurfaceShape shape, double wavenumber) {
    if (shape.size() != n) throw std::invalid_argument("ArrayGeometry: shape length mismatch");
    ArrayGeometry g;
    g.x = Vec::LinSpaced(n, 0.0, spacing * (n - 1));
    if (n == 1) g.x(0) = 0.0;
    g.shape = std::move(shape);
    g.wavenumber = wavenumber;
    return g;
}

ArrayGeometry ArrayGeometry::transmit(const SystemConfig& cfg, const SurfaceShape& shape) {
    return linear(cfg.n_tx, cfg.spacing, shape, cfg.wavenumber());
}

ArrayGeometry ArrayGeometry::receive(const SystemConfig& cfg, const SurfaceShape& shape) {
    return linear(cfg.n_rx, cfg.spacing, shape, cfg.wavenumber());
}

CVec steering(const ArrayGeometry& geom, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const int n = geom.size();
    CVec a(n);
    for (int i = 0; i < n; ++i)
        a(i) = std::polar(1.0, geom.wavenumber * (geom.x(i) * c + geom.y()(i) * s));
    return a;
}

CVec steering_derivative(const ArrayGeometry& geom, double theta, DerivativeConvention conv) {
    const double c = std::cos(theta), s = std::sin(theta);
    const int n = geom.size();
    CVec a = steering(geom, theta);
    CVec d(n);
    for (int i = 0; i < n; ++i) {
        double rate = -geom.x(i) * s;
        if (conv == DerivativeConvention::Exact) rate += geom.y()(i) * c;
        d(i) = cd(0.0, geom.wavenumber * rate) * a(i);
    }
    return d;
}

CVec channel_realize(const UserChannel& user, const ArrayGeometry& tx) {
    CVec h = CVec::Zero(tx.size());
    for (const auto& p : user.paths) h += p.gain * steering(tx, p.angle);
    return h;
}

std::vector<CVec> realize_all(const std::vector<UserChannel>& users, const ArrayGeometry& tx) {
    std::vector<CVec> out;
    out.reserve(users.size());
    for (const auto& u : users) out.push_back(channel_realize(u, tx));
    return out;
}

double sinr(const CMat& w, const CVec& h, int k, int n_users, double sigma2) {
    if (k < 0 || k >= n_users) throw std::out_of_range("sinr: user index out of range");
    if (w.rows() != h.size()) throw std::invalid_argument("sinr: dimension mismatch");
    const Eigen::RowVectorXcd proj = h.adjoint() * w;
    const double signal = std::norm(proj(k));
    const double interference = proj.squaredNorm() - signal;
    return signal / (interference + sigma2);
}

double path_amplitude(double distance_m) { return std::sqrt(1e-3 * std::pow(distance_m, -2.2)); }

Scenario generate_scenario(const SystemConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(30.0, 80.0);
    std::uniform_real_distribution<double> angle(-kPi / 3, kPi / 3);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);

    Scenario sc;
    sc.users.reserve(static_cast<std::size_t>(cfg.n_users));
    for (int k = 0; k < cfg.n_users; ++k) {
        UserChannel u;
        u.distance = dist(rng);
        const double th = angle(rng);
        const double ph = phase(rng);
        u.paths.push_back({std::polar(path_amplitude(u.distance), ph), th});
        sc.users.push_back(std::move(u));
    }
    sc.targets.push_back({kPi / 4, default_prior_stddev(cfg.n_tx, kPi / 4)});
    return sc;
}

}  // namespace fimisac
