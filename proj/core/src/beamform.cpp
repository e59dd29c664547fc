// SPDX-License-Identifier: Apache-2.0

#include "fimisac/beamform.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace fimisac {

namespace {

using conic::ConeKind;
using conic::ConicProblem;

// Adds Re tr(H E) for the Hermitian-embedded block at `offset` to `row`.
void add_herm(ConicProblem& p, int row, int offset, int n, const CMat& h, double scale) {
    p.add_psd_term(row, offset, 2 * n, 0.5 * conic::hermitian_embed(h), scale);
}

void add_herm_objective(ConicProblem& p, int offset, int n, const CMat& h, double scale) {
    p.add_psd_objective(offset, 2 * n, 0.5 * conic::hermitian_embed(h), scale);
}

CMat herm_part(const CMat& m) { return 0.5 * (m + m.adjoint()); }

CMat block_value(const conic::Vec& x, int offset, int n) {
    const int order = 2 * n;
    return conic::hermitian_extract(conic::smat(x.segment(offset, order * (order + 1) / 2), order));
}

CVec dominant_vector(const CMat& e, double* ratio = nullptr) {
    Eigen::SelfAdjointEigenSolver<CMat> eig(herm_part(e));
    const int n = static_cast<int>(e.rows());
    if (ratio) {
        const double tr = eig.eigenvalues().cwiseMax(0.0).sum();
        *ratio = tr > 0.0 ? std::max(eig.eigenvalues()(n - 1), 0.0) / tr : 1.0;
    }
    return eig.eigenvectors().col(n - 1);
}

double surrogate(const CMat& cov, const std::vector<SensingNode>& nodes, const SystemConfig& cfg) {
    double f = 0.0;
    for (const auto& node : nodes) f += node.weight * node_information(cov, node, cfg.n_rx);
    return fisher_scale(cfg.alpha_r, cfg.block_length, cfg.sigma_r2) * f;
}

}  // namespace

SdrProblem build_sdr(const std::vector<SensingNode>& nodes, const std::vector<CVec>& channels,
                     const SystemConfig& cfg, const SdrOptions& opts, const RankPenalty* penalty) {
    const int n = cfg.n_tx;
    const int k_users = static_cast<int>(channels.size());
    const int n_sense = opts.per_column_sensing ? cfg.n_rx : 1;
    const int n_nodes = static_cast<int>(nodes.size());
    SdrProblem out;
    auto& p = out.problem;
    auto& lay = out.layout;
    lay.n_tx = n;

    for (int k = 0; k < k_users; ++k) lay.comm_offsets.push_back(p.add_block(ConeKind::Psd, 2 * n));
    for (int r = 0; r < n_sense; ++r) lay.sensing_offsets.push_back(p.add_block(ConeKind::Psd, 2 * n));
    for (int u = 0; u < n_nodes; ++u) lay.schur_offsets.push_back(p.add_block(ConeKind::Psd, 3));
    lay.gamma_offset = p.add_block(ConeKind::Free, n_nodes);
    lay.slack_offset = p.add_block(ConeKind::NonNeg, 1 + k_users);

    std::vector<int> all_blocks = lay.comm_offsets;
    all_blocks.insert(all_blocks.end(), lay.sensing_offsets.begin(), lay.sensing_offsets.end());

    // Power: tr(E_tilde) + s = 1 (covariances normalized by P_max).
    lay.power_row = p.add_row(1.0);
    const CMat eye = CMat::Identity(n, n);
    for (int off : all_blocks) add_herm(p, lay.power_row, off, n, eye, 1.0);
    p.a.push_back({lay.power_row, lay.slack_offset, 1.0});

    // SINR in noise units: (P/sigma^2)[h^H E_i h / r - sum_{k != i} h^H E_k h] - s_i = 1.
    const double r = cfg.sinr_threshold();
    const double beta = cfg.p_max / cfg.sigma_k2;
    for (int i = 0; i < k_users; ++i) {
        const int row = p.add_row(1.0);
        lay.sinr_rows.push_back(row);
        const CMat hh = channels[i] * channels[i].adjoint();
        for (std::size_t b = 0; b < all_blocks.size(); ++b) {
            const double coef = static_cast<int>(b) == i ? beta / r : -beta;
            add_herm(p, row, all_blocks[b], n, hh, coef);
        }
        p.a.push_back({row, lay.slack_offset + 1 + i, -1.0});
    }

    // Schur LMI per node: Z = [[c^2 d - gamma, c Re g, c Im g], [., p, 0], [., 0, p]] >= 0.
    auto unit = [](int i, int j) {
        Mat m = Mat::Zero(3, 3);
        m(i, j) += 0.5;
        m(j, i) += 0.5;
        return m;
    };
    for (int u = 0; u < n_nodes; ++u) {
        const auto& node = nodes[u];
        const double na = node.a.norm();
        const double nd = node.adot.norm();
        const double c = nd > na ? na / nd : 1.0;
        lay.derivative_scale.push_back(c);
        const CMat aa = node.a * node.a.adjoint();
        const CMat dd = node.adot * node.adot.adjoint();
        const CMat m = node.adot * node.a.adjoint();  // tr(m E) = a^H E adot
        const CMat re_g = herm_part(m);
        const CMat im_g = herm_part(cd(0, -1) * m);
        const int z = lay.schur_offsets[u];

        int row = p.add_row(0.0);
        p.add_psd_term(row, z, 3, unit(0, 0));
        for (int off : all_blocks) add_herm(p, row, off, n, dd, -c * c);
        p.a.push_back({row, lay.gamma_offset + u, 1.0});

        row = p.add_row(0.0);
        p.add_psd_term(row, z, 3, unit(0, 1));
        for (int off : all_blocks) add_herm(p, row, off, n, re_g, -c);

        row = p.add_row(0.0);
        p.add_psd_term(row, z, 3, unit(0, 2));
        for (int off : all_blocks) add_herm(p, row, off, n, im_g, -c);

        for (int d = 1; d <= 2; ++d) {
            row = p.add_row(0.0);
            p.add_psd_term(row, z, 3, unit(d, d));
            for (int off : all_blocks) add_herm(p, row, off, n, aa, -1.0);
        }
        row = p.add_row(0.0);
        p.add_psd_term(row, z, 3, unit(1, 2));

        // Objective: maximize w (N_r gamma / c^2 + kappa a^H E a).
        p.c(lay.gamma_offset + u) -= node.weight * cfg.n_rx / (c * c);
        for (int off : all_blocks) add_herm_objective(p, off, n, aa, -node.weight * node.kappa);
    }

    if (penalty && penalty->inv_rho > 0.0) {
        std::vector<int> penalized = lay.comm_offsets;
        if (opts.per_column_sensing)
            penalized.insert(penalized.end(), lay.sensing_offsets.begin(), lay.sensing_offsets.end());
        if (penalty->directions.size() != penalized.size())
            throw std::invalid_argument("build_sdr: one penalty direction per penalized block expected");
        for (std::size_t b = 0; b < penalized.size(); ++b) {
            const CVec v = penalty->directions[b].normalized();
            add_herm_objective(p, penalized[b], n, eye - v * v.adjoint(), penalty->inv_rho);
        }
    }
    return out;
}

double min_sinr_power(const std::vector<CVec>& channels, const SystemConfig& cfg, double budget) {
    const int k_users = static_cast<int>(channels.size());
    if (k_users == 0) return 0.0;
    const int n = cfg.n_tx;
    const double r = cfg.sinr_threshold();
    std::vector<CVec> h;
    for (const auto& c : channels) h.push_back(c / std::sqrt(cfg.sigma_k2));
    // Uplink-downlink duality: q <- 1 / ((1 + 1/r) h_k^H (I + sum_i q_i h_i h_i^H)^{-1} h_k),
    // monotone from q = 0 towards the minimal fixed point whose sum is the minimum power.
    Vec q = Vec::Zero(k_users);
    for (int iter = 0; iter < 200000; ++iter) {
        CMat m = CMat::Identity(n, n);
        for (int i = 0; i < k_users; ++i) m += q(i) * h[i] * h[i].adjoint();
        Eigen::LLT<CMat> llt(m);
        Vec next(k_users);
        for (int k = 0; k < k_users; ++k) {
            const double g = h[k].dot(llt.solve(h[k])).real();
            next(k) = g > 0.0 ? 1.0 / ((1.0 + 1.0 / r) * g) : std::numeric_limits<double>::infinity();
        }
        if (!std::isfinite(next.sum()) || next.sum() > budget) return next.sum();
        const double change = (next - q).cwiseAbs().maxCoeff();
        q = next;
        if (change <= 1e-13 * q.cwiseAbs().maxCoeff()) break;
    }
    return q.sum();
}

SdrIterate penalty_sca_loop(const std::vector<SensingNode>& nodes, const std::vector<CVec>& channels,
                            const SystemConfig& cfg, const SdrOptions& opts) {
    const double pmin = min_sinr_power(channels, cfg, cfg.p_max * (1.0 + 1e-6));
    if (!(pmin <= cfg.p_max * (1.0 + 1e-6))) throw InfeasibleSdr(pmin);

    const int n = cfg.n_tx;
    SdrIterate it;
    auto run = [&](const RankPenalty* pen) {
        const auto sdr = build_sdr(nodes, channels, cfg, opts, pen);
        const auto sol = conic::solve(sdr.problem, opts.solver_tol);
        ++it.solves;
        it.max_kkt = std::max(it.max_kkt, sol.kkt_residual());
        if (sol.status != conic::SolveStatus::Optimal) it.solver_ok = false;
        if (sol.status == conic::SolveStatus::Infeasible || sol.status == conic::SolveStatus::Unbounded)
            throw InfeasibleSdr(pmin);
        it.comm.clear();
        it.sensing.clear();
        for (int off : sdr.layout.comm_offsets) it.comm.push_back(cfg.p_max * block_value(sol.x, off, n));
        for (int off : sdr.layout.sensing_offsets) it.sensing.push_back(cfg.p_max * block_value(sol.x, off, n));
        it.gamma = sol.x.segment(sdr.layout.gamma_offset, sdr.layout.schur_blocks());
        CMat cov = CMat::Zero(n, n);
        for (const auto& e : it.comm) cov += e;
        for (const auto& e : it.sensing) cov += e;
        it.objective = surrogate(herm_part(cov), nodes, cfg);
        it.ratios.clear();
        std::vector<CVec> dirs;
        for (const auto& e : it.comm) {
            double ratio = 1.0;
            dirs.push_back(dominant_vector(e, &ratio));
            it.ratios.push_back(ratio);
        }
        if (opts.per_column_sensing)
            for (const auto& e : it.sensing) dirs.push_back(dominant_vector(e));
        return dirs;
    };
    auto all_rank_one = [&]() {
        for (double r : it.ratios)
            if (r < opts.ratio_target) return false;
        return true;
    };

    RankPenalty pen;
    pen.directions = run(nullptr);
    it.plain_objective = it.objective;
    it.rho = std::numeric_limits<double>::infinity();
    double prev = it.objective;
    double rho = opts.rho0_factor * cfg.p_max;
    // Objective terms are in units of P_max, so the penalty weight is 1/rho in those units too.
    for (int outer = 1; outer <= opts.max_outer; ++outer) {
        pen.inv_rho = cfg.p_max / rho;
        pen.directions = run(&pen);
        it.rho = rho;
        it.outer_iterations = outer;
        const double change = std::abs(it.objective - prev) / std::max(std::abs(prev), 1e-300);
        prev = it.objective;
        if (all_rank_one() && change <= opts.objective_tol) {
            it.rank_one = true;
            return it;
        }
        rho *= opts.rho_shrink;
    }
    it.rank_one = all_rank_one();
    return it;
}

BeamformerSet extract_beams(const SdrIterate& it, const std::vector<CVec>& channels,
                            const SystemConfig& cfg, double sinr_rel_tol, double power_rel_tol) {
    const int n = cfg.n_tx;
    const int k_users = static_cast<int>(it.comm.size());
    if (static_cast<int>(channels.size()) != k_users)
        throw std::invalid_argument("extract_beams: channel count does not match the iterate");
    BeamformerSet bf;
    bf.n_users = k_users;
    bf.w = CMat::Zero(n, k_users + cfg.n_rx);
    CMat residual = CMat::Zero(n, n);
    for (int k = 0; k < k_users; ++k) {
        const CMat e = herm_part(it.comm[k]);
        const CVec eh = e * channels[k];
        const double q = channels[k].dot(eh).real();
        CVec w;
        if (q > 0.0) {
            w = eh / std::sqrt(q);
        } else {
            Eigen::SelfAdjointEigenSolver<CMat> eig(e);
            w = std::sqrt(std::max(eig.eigenvalues()(n - 1), 0.0)) * eig.eigenvectors().col(n - 1);
        }
        bf.w.col(k) = w;
        residual += e - w * w.adjoint();
    }
    if (it.sensing.size() == 1) {
        Eigen::SelfAdjointEigenSolver<CMat> eig(herm_part(it.sensing[0] + residual));
        int col = k_users;
        for (int i = n - 1; i >= 0 && col < k_users + cfg.n_rx; --i) {
            const double lam = eig.eigenvalues()(i);
            if (lam <= 0.0) break;
            bf.w.col(col++) = std::sqrt(lam) * eig.eigenvectors().col(i);
        }
    } else {
        for (std::size_t r = 0; r < it.sensing.size() && static_cast<int>(r) < cfg.n_rx; ++r) {
            Eigen::SelfAdjointEigenSolver<CMat> eig(herm_part(it.sensing[r] + (r == 0 ? residual : CMat::Zero(n, n))));
            bf.w.col(k_users + static_cast<int>(r)) =
                std::sqrt(std::max(eig.eigenvalues()(n - 1), 0.0)) * eig.eigenvectors().col(n - 1);
        }
    }
    const double power = bf.power();
    if (power > cfg.p_max * (1.0 + power_rel_tol))
        throw ValidationFailure("extracted beamformer uses " + std::to_string(power) + " W");
    if (power > cfg.p_max) bf.w *= std::sqrt(cfg.p_max / power);
    const double r = cfg.sinr_threshold();
    for (int k = 0; k < k_users; ++k) {
        const double s = sinr(bf, channels[k], k, cfg.sigma_k2);
        if (s < r * (1.0 - sinr_rel_tol))
            throw ValidationFailure("user " + std::to_string(k) + " SINR " + std::to_string(s) +
                                    " below target " + std::to_string(r));
    }
    return bf;
}

BeamformResult design_beamformer(const std::vector<SensingNode>& nodes,
                                 const std::vector<CVec>& channels, const SystemConfig& cfg,
                                 const SdrOptions& opts) {
    BeamformResult res;
    res.sdr = penalty_sca_loop(nodes, channels, cfg, opts);
    res.w = extract_beams(res.sdr, channels, cfg);
    return res;
}

}  // namespace fimisac
