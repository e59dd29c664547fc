// SPDX-License-Identifier: Apache-2.0

#include "fimisac/fisher.hpp"

#include <algorithm>
#include <random>

namespace fimisac {

EfimContext make_efim_context(const ArrayGeometry& rx, double theta) {
    const int n = rx.size();
    const double d2 = rx.wavenumber * rx.wavenumber;
    EfimContext ctx;
    ctx.zeta = std::sin(theta) * rx.x - std::cos(theta) * rx.y();
    ctx.projector = d2 * (Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / n));
    ctx.kappa = ctx.zeta.dot(ctx.projector * ctx.zeta);
    return ctx;
}

double receive_kappa(const ArrayGeometry& rx, double theta) {
    const Vec zeta = std::sin(theta) * rx.x - std::cos(theta) * rx.y();
    const double mean = zeta.mean();
    return rx.wavenumber * rx.wavenumber * (zeta.array() - mean).square().sum();
}

std::vector<SensingNode> sensing_nodes(const ArrayGeometry& tx, const ArrayGeometry& rx,
                                       const GaussHermiteRule& rule,
                                       std::span<const TargetPrior> targets,
                                       DerivativeConvention conv) {
    std::vector<SensingNode> nodes;
    nodes.reserve(targets.size() * static_cast<std::size_t>(rule.order));
    for (const auto& t : targets) {
        const auto angles = nodes_to_angles(rule, t);
        for (int u = 0; u < rule.order; ++u) {
            SensingNode n;
            n.angle = angles[u];
            n.weight = rule.weights(u);
            n.a = steering(tx, n.angle);
            n.adot = steering_derivative(tx, n.angle, conv);
            n.kappa = receive_kappa(rx, n.angle);
            nodes.push_back(std::move(n));
        }
    }
    return nodes;
}

double fisher_scale(cd alpha, int block_length, double sigma_r2) {
    return 2.0 * block_length * std::norm(alpha) / sigma_r2;
}

double node_information(const CMat& cov, const SensingNode& node, int n_rx) {
    const CVec ea = cov * node.a;
    const double p = node.a.dot(ea).real();
    if (!(p >= 1e-30)) throw SignalNullError(node.angle);
    const double d = node.adot.dot(cov * node.adot).real();
    const cd g = ea.dot(node.adot);  // a^H E adot
    return node.kappa * p + n_rx * d - n_rx * std::norm(g) / p;
}

FisherMatrix fim_full(const CMat& w, const ArrayGeometry& tx, const ArrayGeometry& rx,
                      const TargetParameters& params, int block_length, double sigma_r2) {
    if (w.rows() != tx.size()) throw std::invalid_argument("fim_full: W rows must equal N_t");
    if (block_length <= 0) throw std::invalid_argument("fim_full: block length must be positive");

    const double th = params.angle;
    const CVec a = steering(tx, th);
    const CVec ad = steering_derivative(tx, th, DerivativeConvention::Exact);
    const CVec b = steering(rx, th);
    const CVec bd = steering_derivative(rx, th, DerivativeConvention::Exact);

    const CMat A = b * a.adjoint();
    const CMat Ad = bd * a.adjoint() + b * ad.adjoint();
    const CMat E = w * w.adjoint();

    const double c = 2.0 * block_length / sigma_r2;
    const cd alpha = params.reflection;
    const double tr_aa = (A * E * A.adjoint()).trace().real();
    const double tr_dd = (Ad * E * Ad.adjoint()).trace().real();
    const cd tr_ad = (A * E * Ad.adjoint()).trace();

    FisherMatrix f;
    f(0, 0) = c * std::norm(alpha) * tr_dd;
    const cd t = std::conj(alpha) * tr_ad;
    f(0, 1) = f(1, 0) = c * t.real();
    f(0, 2) = f(2, 0) = c * (t * cd(0.0, 1.0)).real();
    f(1, 1) = f(2, 2) = c * tr_aa;
    f(1, 2) = f(2, 1) = 0.0;
    return f;
}

double schur_theta(const FisherMatrix& f) {
    const Eigen::Matrix2d faa = f.bottomRightCorner<2, 2>();
    const Eigen::RowVector2d fta = f.block<1, 2>(0, 1);
    return f(0, 0) - (fta * faa.inverse() * fta.transpose())(0, 0);
}

double efim_theta_cov(const CMat& cov, const ArrayGeometry& tx, const ArrayGeometry& rx,
                      double theta, cd alpha, int block_length, double sigma_r2,
                      DerivativeConvention conv) {
    if (cov.rows() != tx.size() || cov.cols() != tx.size())
        throw std::invalid_argument("efim_theta: covariance must be N_t x N_t");
    SensingNode node;
    node.angle = theta;
    node.a = steering(tx, theta);
    node.adot = steering_derivative(tx, theta, conv);
    node.kappa = receive_kappa(rx, theta);
    return fisher_scale(alpha, block_length, sigma_r2) * node_information(cov, node, rx.size());
}

double efim_theta(const CMat& w, const ArrayGeometry& tx, const ArrayGeometry& rx, double theta,
                  cd alpha, int block_length, double sigma_r2, DerivativeConvention conv) {
    if (w.rows() != tx.size()) throw std::invalid_argument("efim_theta: W rows must equal N_t");
    const CVec a = steering(tx, theta);
    const CVec ad = steering_derivative(tx, theta, conv);
    const Eigen::RowVectorXcd aw = a.adjoint() * w;
    const Eigen::RowVectorXcd dw = ad.adjoint() * w;
    const double p = aw.squaredNorm();
    if (!(p >= 1e-30)) throw SignalNullError(theta);
    const double d = dw.squaredNorm();
    const cd g = aw.dot(dw);  // a^H W W^H adot
    const int nr = rx.size();
    const double info = receive_kappa(rx, theta) * p + nr * d - nr * std::norm(g) / p;
    return fisher_scale(alpha, block_length, sigma_r2) * info;
}

double trace_identities_check(const CMat& w, const ArrayGeometry& tx, const ArrayGeometry& rx,
                              double theta) {
    const CVec a = steering(tx, theta);
    const CVec ad = steering_derivative(tx, theta, DerivativeConvention::Exact);
    const CVec b = steering(rx, theta);
    const CVec bd = steering_derivative(rx, theta, DerivativeConvention::Exact);
    const CMat A = b * a.adjoint();
    const CMat Ad = bd * a.adjoint() + b * ad.adjoint();
    const CMat E = w * w.adjoint();

    const double delta = rx.wavenumber;
    const int nr = rx.size();
    const Vec zeta = std::sin(theta) * rx.x - std::cos(theta) * rx.y();
    const double sum_zeta = zeta.sum();
    const double p = a.dot(E * a).real();
    const cd g = a.dot(E * ad);
    const double d = ad.dot(E * ad).real();

    const cd lhs1 = (A * E * A.adjoint()).trace();
    const cd rhs1 = nr * p;
    const cd lhs2 = (A * E * Ad.adjoint()).trace();
    const cd rhs2 = cd(0.0, delta) * p * sum_zeta + static_cast<double>(nr) * g;
    const cd lhs3 = (Ad * E * Ad.adjoint()).trace();
    const cd rhs3 = delta * delta * p * zeta.squaredNorm() + nr * d + 2.0 * delta * g.imag() * sum_zeta;

    auto rel = [](cd l, cd r) {
        const double scale = std::max(std::abs(l), std::abs(r));
        return scale == 0.0 ? 0.0 : std::abs(l - r) / scale;
    };
    return std::max({rel(lhs1, rhs1), rel(lhs2, rhs2), rel(lhs3, rhs3)});
}

double avg_fisher_cov(const CMat& cov, const ArrayGeometry& tx, const ArrayGeometry& rx,
                      const GaussHermiteRule& rule, std::span<const TargetPrior> targets,
                      const SystemConfig& cfg) {
    const auto nodes = sensing_nodes(tx, rx, rule, targets, cfg.derivative);
    double acc = 0.0;
    for (const auto& n : nodes) acc += n.weight * node_information(cov, n, rx.size());
    return fisher_scale(cfg.alpha_r, cfg.block_length, cfg.sigma_r2) * acc;
}

double avg_fisher(const CMat& w, const ArrayGeometry& tx, const ArrayGeometry& rx,
                  const GaussHermiteRule& rule, std::span<const TargetPrior> targets,
                  const SystemConfig& cfg) {
    return avg_fisher_cov(w * w.adjoint(), tx, rx, rule, targets, cfg);
}

std::vector<double> truncated_normal_samples(const TargetPrior& prior, int n, std::uint64_t seed,
                                             double truncation_sigmas) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    while (static_cast<int>(out.size()) < n) {
        const double v = z(rng);
        if (std::abs(v) <= truncation_sigmas) out.push_back(prior.mean + prior.stddev * v);
    }
    return out;
}

CrbEstimate avg_crb_mc(const CMat& w, const ArrayGeometry& tx, const ArrayGeometry& rx,
                       const TargetPrior& prior, int n_samples, std::uint64_t seed,
                       const SystemConfig& cfg) {
    if (n_samples < 100) throw std::invalid_argument("avg_crb_mc: need at least 100 samples");
    const auto thetas = truncated_normal_samples(prior, n_samples, seed);
    const CMat cov = w * w.adjoint();

    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const double f = efim_theta_cov(cov, tx, rx, thetas[i], cfg.alpha_r, cfg.block_length,
                                        cfg.sigma_r2, cfg.derivative);
        if (!(f > 0.0)) throw SignalNullError(thetas[i]);
        const double v = 1.0 / f;
        const double delta = v - mean;
        mean += delta / (i + 1);
        m2 += delta * (v - mean);
    }
    CrbEstimate est;
    est.value = mean;
    est.n_samples = n_samples;
    est.std_error = std::sqrt(m2 / (n_samples - 1) / n_samples);
    return est;
}

}  // namespace fimisac
