// SPDX-License-Identifier: Apache-2.0

#include "fimisac/txshape.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fimisac {

Vec grad_avg_fisher_yt(const CMat& w, const SurfaceShape& y_t, const ArrayGeometry& rx,
                       const GaussHermiteRule& rule, std::span<const TargetPrior> targets,
                       const SystemConfig& cfg) {
    const auto tx = ArrayGeometry::transmit(cfg, y_t);
    const auto nodes = sensing_nodes(tx, rx, rule, targets, cfg.derivative);
    const CMat cov = w * w.adjoint();
    const int n = tx.size();
    const double nr = rx.size();
    const double delta = tx.wavenumber;
    Vec grad = Vec::Zero(n);
    for (const auto& node : nodes) {
        const CVec ea = cov * node.a;
        const CVec ed = cov * node.adot;
        const double p = node.a.dot(ea).real();
        if (!(p >= 1e-30)) throw SignalNullError(node.angle);
        const cd g = ea.dot(node.adot);
        const double s = std::sin(node.angle), c = std::cos(node.angle);
        for (int i = 0; i < n; ++i) {
            const cd alpha = cd(0, delta * s) * node.a(i);  // d a_i / d y_i
            cd beta = cd(0, delta * s) * node.adot(i);      // d adot_i / d y_i
            if (cfg.derivative == DerivativeConvention::Exact) beta += cd(0, delta * c) * node.a(i);
            const double dp = 2.0 * (std::conj(alpha) * ea(i)).real();
            const double dd = 2.0 * (std::conj(beta) * ed(i)).real();
            const cd dg = std::conj(alpha) * ed(i) + std::conj(ea(i)) * beta;
            const double dgn = 2.0 * (std::conj(g) * dg).real();
            grad(i) += node.weight *
                       (node.kappa * dp + nr * dd - nr * (dgn / p - std::norm(g) * dp / (p * p)));
        }
    }
    return fisher_scale(cfg.alpha_r, cfg.block_length, cfg.sigma_r2) * grad;
}

double linearized_sinr_residual(const CVec& h, const CMat& w, int k, const CVec& h_hat, double r,
                                double sigma2) {
    const cd sk = w.col(k).dot(h_hat);  // w_k^H h_hat
    const cd lin = std::conj(sk) * w.col(k).dot(h);  // h_hat^H w_k w_k^H h
    double interference = 0.0;
    for (int i = 0; i < w.cols(); ++i)
        if (i != k) interference += std::norm(w.col(i).dot(h));
    return r * (interference + sigma2) - (2.0 * lin.real() - std::norm(sk));
}

HAuxResult h_aux_update(const CVec& c, const CMat& w, int k, const CVec& h_hat, double r, double sigma2) {
    HAuxResult out;
    out.h = c;
    out.constraint = linearized_sinr_residual(c, w, k, h_hat, r, sigma2);
    if (out.constraint <= 0.0) return out;

    // Constraint r h^H B h - 2 Re{v^H h} + const <= 0 with B the interference covariance.
    const int n = static_cast<int>(c.size());
    CMat b = w * w.adjoint() - w.col(k) * w.col(k).adjoint();
    b = 0.5 * (b + b.adjoint());
    const cd sk = w.col(k).dot(h_hat);
    const CVec v = w.col(k) * sk;  // w_k w_k^H h_hat
    const double constant = std::norm(sk) + r * sigma2;
    Eigen::SelfAdjointEigenSolver<CMat> eig(b);
    const Vec lam = eig.eigenvalues().cwiseMax(0.0);
    const CVec zc = eig.eigenvectors().adjoint() * c;
    const CVec zv = eig.eigenvectors().adjoint() * v;
    auto coords = [&](double mult) {
        CVec z(n);
        for (int i = 0; i < n; ++i) z(i) = (zc(i) + mult * zv(i)) / (1.0 + mult * r * lam(i));
        return z;
    };
    auto phi = [&](double mult) {
        const CVec z = coords(mult);
        double q = 0.0;
        for (int i = 0; i < n; ++i) q += lam(i) * std::norm(z(i));
        return r * q - 2.0 * zv.dot(z).real() + constant;
    };
    double hi = 1.0;
    while (phi(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e30) throw ConstraintInfeasible("linearized SINR constraint cannot be met");
    }
    double lo = 0.0;
    for (int it = 0; it < 300 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (phi(mid) > 0.0 ? lo : hi) = mid;
    }
    out.multiplier = hi;
    out.h = eig.eigenvectors() * coords(hi);
    out.constraint = linearized_sinr_residual(out.h, w, k, h_hat, r, sigma2);
    return out;
}

namespace {

// Channel entry i of a user at displacement y (normalized units: positions in wavelengths).
struct NormUser {
    std::vector<cd> gain;
    std::vector<double> cosv, sinv;
};

void entry(const NormUser& u, double x, double y, cd& h, cd& dh) {
    h = 0.0;
    dh = 0.0;
    for (std::size_t l = 0; l < u.gain.size(); ++l) {
        const cd e = u.gain[l] * std::polar(1.0, 2.0 * kPi * (x * u.cosv[l] + y * u.sinv[l]));
        h += e;
        dh += cd(0, 2.0 * kPi * u.sinv[l]) * e;
    }
}

CVec realize(const NormUser& u, const Vec& x, const Vec& y) {
    CVec h(x.size());
    cd d;
    for (int i = 0; i < x.size(); ++i) entry(u, x(i), y(i), h(i), d);
    return h;
}

bool sinr_ok(const BeamformerSet& bf, const std::vector<UserChannel>& users, const SystemConfig& cfg,
             const SurfaceShape& y, const std::vector<double>& thr) {
    const auto tx = ArrayGeometry::transmit(cfg, y);
    for (std::size_t k = 0; k < users.size(); ++k)
        if (sinr(bf, channel_realize(users[k], tx), static_cast<int>(k), cfg.sigma_k2) < thr[k]) return false;
    return true;
}

}  // namespace

ProjectionReport project_feasible(const SurfaceShape& xi, const BeamformerSet& bf,
                                  const std::vector<UserChannel>& users, const SystemConfig& cfg,
                                  const SurfaceShape* anchor, const std::vector<double>* thresholds,
                                  const IpddOptions& opts) {
    const int k_users = static_cast<int>(users.size());
    const int n = xi.size();
    ProjectionReport rep;
    rep.shape = xi.clamped(cfg.y_min, cfg.y_max);
    std::vector<double> thr(k_users, cfg.sinr_threshold());
    if (thresholds) thr = *thresholds;
    if (k_users == 0 || sinr_ok(bf, users, cfg, rep.shape, thr)) {
        rep.short_circuit = true;
        rep.distances.push_back((rep.shape.y - xi.y).norm());
        return rep;
    }

    // Normalized units: positions in wavelengths, channels in units of the strongest path gain,
    // beams in units of sqrt(P_max).
    const double lam = cfg.wavelength;
    double gscale = 0.0;
    for (const auto& u : users)
        for (const auto& p : u.paths) gscale = std::max(gscale, std::abs(p.gain));
    if (gscale <= 0.0) throw ProjectionFailure("all user channels are zero");
    std::vector<NormUser> nu(k_users);
    for (int k = 0; k < k_users; ++k)
        for (const auto& p : users[k].paths) {
            nu[k].gain.push_back(p.gain / gscale);
            nu[k].cosv.push_back(std::cos(p.angle));
            nu[k].sinv.push_back(std::sin(p.angle));
        }
    const CMat wn = bf.w / std::sqrt(cfg.p_max);
    const double sigma2 = cfg.sigma_k2 / (cfg.p_max * gscale * gscale);
    const Vec x = ArrayGeometry::transmit(cfg, rep.shape).x / lam;
    const Vec target = xi.y / lam;
    const double lo = cfg.y_min / lam, hi = cfg.y_max / lam;

    IpddState st;
    st.mu = opts.mu0;
    Vec y = rep.shape.y / lam;
    const Vec y_anchor = anchor ? Vec(anchor->y / lam) : y;
    for (int k = 0; k < k_users; ++k) {
        st.h_aux.push_back(realize(nu[k], x, y_anchor));
        st.upsilon.push_back(CVec::Zero(n));
        st.h_hat.push_back(st.h_aux.back());
    }

    double best_violation = std::numeric_limits<double>::infinity();
    int last_progress = 0;
    for (int round = 1; round <= opts.max_rounds; ++round) {
        // (b) auxiliary channels, SCA point = previous auxiliary channel.
        for (int k = 0; k < k_users; ++k) {
            const CVec c = realize(nu[k], x, y) - st.mu * st.upsilon[k];
            st.h_hat[k] = st.h_aux[k];
            try {
                st.h_aux[k] = h_aux_update(c, wn, k, st.h_hat[k], thr[k] * (1.0 + opts.sinr_margin), sigma2).h;
            } catch (const ConstraintInfeasible& e) {
                throw ProjectionFailure(e.what());
            }
        }
        // (a) shape: separable per element, projected gradient with backtracking.
        std::vector<CVec> t(k_users);
        for (int k = 0; k < k_users; ++k) t[k] = st.h_aux[k] + st.mu * st.upsilon[k];
        for (int i = 0; i < n; ++i) {
            auto f = [&](double yi, double* grad) {
                double val = (yi - target(i)) * (yi - target(i));
                double g = 2.0 * (yi - target(i));
                for (int k = 0; k < k_users; ++k) {
                    cd h, dh;
                    entry(nu[k], x(i), yi, h, dh);
                    const cd res = t[k](i) - h;
                    val += std::norm(res) / (2.0 * st.mu);
                    g -= (std::conj(res) * dh).real() / st.mu;
                }
                if (grad) *grad = g;
                return val;
            };
            double step = 1.0;
            double gi = 0.0;
            double fi = f(y(i), &gi);
            for (int it = 0; it < opts.inner_steps; ++it) {
                bool moved = false;
                while (step > 1e-14) {
                    const double cand = std::clamp(y(i) - step * gi, lo, hi);
                    const double dyi = cand - y(i);
                    if (dyi == 0.0) break;
                    double gc = 0.0;
                    const double fc = f(cand, &gc);
                    if (fc <= fi + gi * dyi + dyi * dyi / (2.0 * step)) {
                        y(i) = cand;
                        fi = fc;
                        gi = gc;
                        moved = true;
                        step *= 2.0;
                        break;
                    }
                    step *= 0.5;
                }
                if (!moved) break;
            }
        }
        // (c) duals.
        st.violation = 0.0;
        for (int k = 0; k < k_users; ++k) {
            const CVec hk = realize(nu[k], x, y);
            st.upsilon[k] += (st.h_aux[k] - hk) / st.mu;
            st.violation = std::max(st.violation, (st.h_aux[k] - hk).norm());
        }
        rep.rounds = round;
        rep.violation = st.violation;
        rep.distances.push_back((y - target).norm() * lam);
        SurfaceShape cand{y * lam};
        cand = cand.clamped(cfg.y_min, cfg.y_max);
        if (st.violation <= opts.violation_tol && sinr_ok(bf, users, cfg, cand, thr)) {
            rep.shape = cand;
            return rep;
        }
        if (st.violation < 0.99 * best_violation) {
            best_violation = st.violation;
            last_progress = round;
        } else if (round - last_progress >= opts.stall_rounds) {
            break;
        }
        st.mu *= opts.mu_shrink;
    }
    throw ProjectionFailure("IPDD projection stalled with violation " + std::to_string(st.violation));
}

PgaResult pga(const BeamformerSet& bf, const SurfaceShape& y_init, const std::vector<UserChannel>& users,
              const ArrayGeometry& rx, const GaussHermiteRule& rule,
              std::span<const TargetPrior> targets, const SystemConfig& cfg, const PgaOptions& opts) {
    const CMat cov = bf.covariance();
    auto objective = [&](const SurfaceShape& y) {
        return avg_fisher_cov(cov, ArrayGeometry::transmit(cfg, y), rx, rule, targets, cfg);
    };
    // Users already below r_th at the start keep their current SINR as the floor.
    std::vector<double> thr;
    {
        const auto tx = ArrayGeometry::transmit(cfg, y_init);
        for (std::size_t k = 0; k < users.size(); ++k)
            thr.push_back(std::min(cfg.sinr_threshold(),
                                   sinr(bf, channel_realize(users[k], tx), static_cast<int>(k), cfg.sigma_k2)));
    }
    PgaResult res;
    res.shape = y_init;
    res.objective = res.initial_objective = objective(y_init);
    res.trace.push_back(res.objective);
    const double lam = cfg.wavelength;
    double step = opts.step0 * lam;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        res.iterations = iter + 1;
        const Vec g = grad_avg_fisher_yt(bf.w, res.shape, rx, rule, targets, cfg);
        const double gmax = g.cwiseAbs().maxCoeff();
        if (!(gmax > 0.0)) break;
        bool accepted = false;
        while (step >= opts.min_step * lam) {
            SurfaceShape xi{res.shape.y + step * g / gmax};
            SurfaceShape cand;
            try {
                cand = project_feasible(xi, bf, users, cfg, &res.shape, &thr, opts.ipdd).shape;
            } catch (const ProjectionFailure&) {
                ++res.projection_failures;
                step *= 0.5;
                continue;
            }
            const double f = objective(cand);
            if (f > res.objective) {
                const double change = (f - res.objective) / std::abs(res.objective);
                res.shape = cand;
                res.objective = f;
                res.trace.push_back(f);
                accepted = true;
                step = std::min(2.0 * step, opts.step0 * lam);
                if (change <= opts.rel_tol) return res;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    return res;
}

}  // namespace fimisac
