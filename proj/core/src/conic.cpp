// SPDX-License-Identifier: Apache-2.0

#include "fimisac/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace fimisac::conic {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::MaxIter: return "max_iter";
    }
    return "unknown";
}

Vec svec(const Mat& m) {
    const int n = static_cast<int>(m.rows());
    Vec v(n * (n + 1) / 2);
    int k = 0;
    for (int j = 0; j < n; ++j) {
        v(k++) = m(j, j);
        for (int i = j + 1; i < n; ++i) v(k++) = std::sqrt(2.0) * m(i, j);
    }
    return v;
}

Mat smat(const Eigen::Ref<const Vec>& v, int order) {
    Mat m(order, order);
    int k = 0;
    const double r = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < order; ++j) {
        m(j, j) = v(k++);
        for (int i = j + 1; i < order; ++i) m(i, j) = m(j, i) = r * v(k++);
    }
    return m;
}

Mat project_psd(const Mat& m) {
    const Mat sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
    const Vec clipped = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
}

Mat hermitian_embed(const Eigen::MatrixXcd& h) {
    if (h.rows() != h.cols()) throw std::invalid_argument("hermitian_embed: matrix must be square");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("hermitian_embed: matrix is not Hermitian");
    const int n = static_cast<int>(h.rows());
    Mat e(2 * n, 2 * n);
    e.topLeftCorner(n, n) = h.real();
    e.bottomRightCorner(n, n) = h.real();
    e.topRightCorner(n, n) = -h.imag();
    e.bottomLeftCorner(n, n) = h.imag();
    return e;
}

Eigen::MatrixXcd hermitian_extract(const Mat& x) {
    const int n = static_cast<int>(x.rows()) / 2;
    const Mat re = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
    const Mat im = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
    Eigen::MatrixXcd out(n, n);
    out.real() = 0.5 * (re + re.transpose());
    out.imag() = 0.5 * (im - im.transpose());
    return out;
}

int ConicProblem::dimension() const {
    int d = 0;
    for (const auto& c : cones) d += c.dimension();
    return d;
}

std::vector<int> ConicProblem::offsets() const {
    std::vector<int> off;
    off.reserve(cones.size());
    int d = 0;
    for (const auto& c : cones) {
        off.push_back(d);
        d += c.dimension();
    }
    return off;
}

int ConicProblem::add_block(ConeKind kind, int size) {
    const int off = dimension();
    cones.push_back({kind, size});
    const int d = cones.back().dimension();
    c.conservativeResize(off + d);
    c.tail(d).setZero();
    return off;
}

int ConicProblem::add_row(double rhs) {
    const int r = rows();
    b.conservativeResize(r + 1);
    b(r) = rhs;
    return r;
}

void ConicProblem::add_psd_term(int row, int offset, int order, const Mat& sym, double scale) {
    (void)order;
    const Vec v = svec(0.5 * (sym + sym.transpose()));
    for (int k = 0; k < v.size(); ++k)
        if (v(k) != 0.0) a.push_back({row, offset + k, scale * v(k)});
}

void ConicProblem::add_psd_objective(int offset, int order, const Mat& sym, double scale) {
    (void)order;
    const Vec v = svec(0.5 * (sym + sym.transpose()));
    c.segment(offset, v.size()) += scale * v;
}

Mat ConicProblem::dense_a() const {
    Mat m = Mat::Zero(rows(), dimension());
    for (const auto& t : a) m(t.row, t.col) += t.value;
    return m;
}

void ConicProblem::validate() const {
    const int n = dimension();
    if (c.size() != n) throw std::invalid_argument("ConicProblem: objective length != cone dimension");
    for (const auto& cb : cones)
        if (cb.size < 0) throw std::invalid_argument("ConicProblem: negative cone size");
    for (const auto& t : a)
        if (t.row < 0 || t.row >= rows() || t.col < 0 || t.col >= n)
            throw std::invalid_argument("ConicProblem: triplet out of range");
    if (!c.allFinite() || !b.allFinite())
        throw std::invalid_argument("ConicProblem: non-finite data");
}

namespace {

struct PsdPart {
    int offset = 0;
    int order = 0;
    Mat a;       // m x dim
    Mat c;       // order x order
    std::vector<int> rows;  // rows with a nonzero in this block
};

struct Layout {
    std::vector<PsdPart> psd;
    std::vector<int> nn_cols, free_cols;
    Mat a_nn, a_f;
    Vec c_nn, c_f;
    int nu = 0;  // barrier parameter (sum of cone orders)
};

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

double max_step_psd(const Mat& x, const Mat& dx) {
    Eigen::LLT<Mat> llt(x);
    if (llt.info() != Eigen::Success) return 0.0;
    const Mat l = llt.matrixL();
    const Mat tmp = l.triangularView<Eigen::Lower>().solve(dx);
    const Mat w = l.triangularView<Eigen::Lower>().solve(tmp.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym(w), Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues()(0);
    return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double max_step_nn(const Vec& x, const Vec& dx) {
    double a = std::numeric_limits<double>::infinity();
    for (int i = 0; i < x.size(); ++i)
        if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
    return a;
}

struct Iterate {
    std::vector<Mat> x, s;
    Vec xn, sn, xf, y;
};

struct Direction {
    std::vector<Mat> dx, ds;
    Vec dxn, dsn, dxf, dy;
};

}  // namespace

ConicSolution solve(const ConicProblem& problem, double tol, int max_iter) {
    problem.validate();
    const int n = problem.dimension();
    const int m_orig = problem.rows();
    const Mat a_full = problem.dense_a();

    ConicSolution sol;
    sol.x = Vec::Zero(n);
    sol.y = Vec::Zero(m_orig);
    sol.s = problem.c;

    // Presolve: drop linearly dependent rows (rank-revealing QR of A^T).
    std::vector<int> kept;
    if (m_orig > 0) {
        Eigen::ColPivHouseholderQR<Mat> qr(a_full.transpose());
        qr.setThreshold(1e-10);
        const int rank = static_cast<int>(qr.rank());
        for (int i = 0; i < rank; ++i) kept.push_back(qr.colsPermutation().indices()(i));
        std::sort(kept.begin(), kept.end());
        if (rank < m_orig) {
            Mat ak(rank, n);
            Vec bk(rank);
            for (int i = 0; i < rank; ++i) {
                ak.row(i) = a_full.row(kept[i]);
                bk(i) = problem.b(kept[i]);
            }
            Eigen::ColPivHouseholderQR<Mat> qk(ak.transpose());
            for (int r = 0; r < m_orig; ++r) {
                if (std::binary_search(kept.begin(), kept.end(), r)) continue;
                const Vec coef = qk.solve(a_full.row(r).transpose());
                if (std::abs(problem.b(r) - coef.dot(bk)) > 1e-8 * (1.0 + problem.b.cwiseAbs().maxCoeff())) {
                    sol.status = SolveStatus::Infeasible;
                    return sol;
                }
            }
        }
    }
    const int m = static_cast<int>(kept.size());
    sol.removed_rows = m_orig - m;
    Mat a(m, n);
    Vec b(m);
    for (int i = 0; i < m; ++i) {
        a.row(i) = a_full.row(kept[i]);
        b(i) = problem.b(kept[i]);
    }

    // Split columns by cone.
    Layout lay;
    {
        const auto off = problem.offsets();
        for (std::size_t k = 0; k < problem.cones.size(); ++k) {
            const auto& cb = problem.cones[k];
            if (cb.kind == ConeKind::Psd) {
                if (cb.size == 0) continue;
                PsdPart p;
                p.offset = off[k];
                p.order = cb.size;
                p.a = a.middleCols(off[k], cb.dimension());
                p.c = smat(problem.c.segment(off[k], cb.dimension()), cb.size);
                for (int r = 0; r < m; ++r)
                    if (p.a.row(r).cwiseAbs().maxCoeff() > 0.0) p.rows.push_back(r);
                lay.nu += cb.size;
                lay.psd.push_back(std::move(p));
            } else {
                auto& cols = cb.kind == ConeKind::NonNeg ? lay.nn_cols : lay.free_cols;
                for (int i = 0; i < cb.size; ++i) cols.push_back(off[k] + i);
                if (cb.kind == ConeKind::NonNeg) lay.nu += cb.size;
            }
        }
        auto gather = [&](const std::vector<int>& cols, Mat& am, Vec& cv) {
            am.resize(m, static_cast<int>(cols.size()));
            cv.resize(static_cast<int>(cols.size()));
            for (std::size_t i = 0; i < cols.size(); ++i) {
                am.col(static_cast<int>(i)) = a.col(cols[i]);
                cv(static_cast<int>(i)) = problem.c(cols[i]);
            }
        };
        gather(lay.nn_cols, lay.a_nn, lay.c_nn);
        gather(lay.free_cols, lay.a_f, lay.c_f);
    }
    const int nf = static_cast<int>(lay.free_cols.size());
    const int nn = static_cast<int>(lay.nn_cols.size());
    const double norm_b = problem.b.norm();
    const double norm_c = problem.c.norm();

    // Starting point.
    Iterate it;
    {
        double bmax = 0.0;
        for (int i = 0; i < m; ++i) bmax = std::max(bmax, (1.0 + std::abs(b(i))) / (1.0 + a.row(i).norm()));
        double amax = 0.0;
        for (int i = 0; i < m; ++i) amax = std::max(amax, a.row(i).norm());
        for (const auto& p : lay.psd) {
            const double nb = p.order;
            const double xi = std::max({10.0, std::sqrt(nb), nb * bmax});
            const double eta = std::max({10.0, std::sqrt(nb), p.c.norm(), amax});
            it.x.push_back(xi * Mat::Identity(p.order, p.order));
            it.s.push_back(eta * Mat::Identity(p.order, p.order));
        }
        const double xi = std::max(10.0, bmax);
        const double eta = std::max({10.0, lay.c_nn.size() ? lay.c_nn.cwiseAbs().maxCoeff() : 0.0, amax});
        it.xn = Vec::Constant(nn, xi);
        it.sn = Vec::Constant(nn, eta);
        it.xf = Vec::Zero(nf);
        it.y = Vec::Zero(m);
    }

    auto assemble_x = [&](const Iterate& s) {
        Vec x = Vec::Zero(n);
        for (std::size_t k = 0; k < lay.psd.size(); ++k) {
            const auto& p = lay.psd[k];
            x.segment(p.offset, p.order * (p.order + 1) / 2) = svec(s.x[k]);
        }
        for (int i = 0; i < nn; ++i) x(lay.nn_cols[i]) = s.xn(i);
        for (int i = 0; i < nf; ++i) x(lay.free_cols[i]) = s.xf(i);
        return x;
    };
    auto assemble_s = [&](const Iterate& s) {
        Vec out = Vec::Zero(n);
        for (std::size_t k = 0; k < lay.psd.size(); ++k) {
            const auto& p = lay.psd[k];
            out.segment(p.offset, p.order * (p.order + 1) / 2) = svec(s.s[k]);
        }
        for (int i = 0; i < nn; ++i) out(lay.nn_cols[i]) = s.sn(i);
        return out;
    };

    double best_kkt = std::numeric_limits<double>::infinity();
    ConicSolution best = sol;
    int stall = 0;
    double progress_ref = std::numeric_limits<double>::infinity();
    int last_progress = 0;
    const int kNoProgressIters = 25;  // iterations without halving the best KKT residual
    const double kDiverge = 1e12;

    for (int iter = 0; iter <= max_iter; ++iter) {
        // Residuals.
        const Vec x = assemble_x(it);
        const Vec svec_all = assemble_s(it);
        const Vec rp = b - a * x;
        const Vec aty = a.transpose() * it.y;
        const Vec rd_full = problem.c - aty - svec_all;
        const double pobj = problem.c.dot(x);
        const double dobj = b.dot(it.y);

        ConicSolution cur;
        cur.x = x;
        cur.y = Vec::Zero(m_orig);
        for (int i = 0; i < m; ++i) cur.y(kept[i]) = it.y(i);
        cur.s = svec_all;
        cur.primal_residual = (problem.b - a_full * x).norm() / (1.0 + norm_b);
        cur.dual_residual = (problem.c - a_full.transpose() * cur.y - svec_all).norm() / (1.0 + norm_c);
        cur.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        cur.primal_objective = pobj;
        cur.dual_objective = dobj;
        cur.iterations = iter;
        cur.removed_rows = sol.removed_rows;
        if (!x.allFinite() || !it.y.allFinite() || !svec_all.allFinite())
            throw NumericalBreakdown("conic solve: non-finite iterate");

        const double kkt = cur.kkt_residual();
        if (kkt < best_kkt) {
            if (kkt < 0.5 * progress_ref) {
                progress_ref = kkt;
                last_progress = iter;
            }
            best_kkt = kkt;
            best = cur;
        }
        if (iter - last_progress > kNoProgressIters) break;
        if (kkt <= tol) {
            cur.status = SolveStatus::Optimal;
            return cur;
        }
        if (it.y.cwiseAbs().maxCoeff() > kDiverge * (1.0 + norm_c) && cur.dual_residual < 1e-3) {
            best.status = SolveStatus::Infeasible;
            best.iterations = iter;
            return best;
        }
        if (x.cwiseAbs().maxCoeff() > kDiverge * (1.0 + norm_b) && cur.primal_residual < 1e-3) {
            best.status = SolveStatus::Unbounded;
            best.iterations = iter;
            return best;
        }
        if (iter == max_iter) break;

        // Residual pieces per cone.
        std::vector<Mat> rd(lay.psd.size());
        for (std::size_t k = 0; k < lay.psd.size(); ++k) {
            const auto& p = lay.psd[k];
            rd[k] = smat(rd_full.segment(p.offset, p.order * (p.order + 1) / 2), p.order);
        }
        Vec rdn(nn), rdf(nf);
        for (int i = 0; i < nn; ++i) rdn(i) = rd_full(lay.nn_cols[i]);
        for (int i = 0; i < nf; ++i) rdf(i) = rd_full(lay.free_cols[i]);

        double mu = 0.0;
        for (std::size_t k = 0; k < lay.psd.size(); ++k) mu += (it.x[k].cwiseProduct(it.s[k])).sum();
        mu += it.xn.dot(it.sn);
        mu = lay.nu > 0 ? mu / lay.nu : 0.0;

        // Schur complement matrix.
        std::vector<Mat> sinv(lay.psd.size());
        Mat schur = Mat::Zero(m, m);
        bool lost_definiteness = false;
        for (std::size_t k = 0; k < lay.psd.size(); ++k) {
            const auto& p = lay.psd[k];
            Eigen::LLT<Mat> llt(it.s[k]);
            if (llt.info() != Eigen::Success) {
                // round-off near the boundary; `best` already holds this or an earlier iterate
                lost_definiteness = true;
                break;
            }
            sinv[k] = llt.solve(Mat::Identity(p.order, p.order));
            const int dim = p.order * (p.order + 1) / 2;
            Mat v = Mat::Zero(dim, m);
            for (int r : p.rows) {
                const Mat ar = smat(p.a.row(r).transpose(), p.order);
                v.col(r) = svec(sym(it.x[k] * ar * sinv[k]));
            }
            schur.noalias() += p.a * v;
        }
        if (lost_definiteness) break;
        if (nn > 0) {
            const Vec dn = it.xn.cwiseQuotient(it.sn);
            schur.noalias() += lay.a_nn * dn.asDiagonal() * lay.a_nn.transpose();
        }
        schur = 0.5 * (schur + schur.transpose());
        Mat kkt_mat = Mat::Zero(m + nf, m + nf);
        kkt_mat.topLeftCorner(m, m) = schur;
        kkt_mat.topRightCorner(m, nf) = lay.a_f;
        kkt_mat.bottomLeftCorner(nf, m) = lay.a_f.transpose();
        Eigen::PartialPivLU<Mat> lu;
        if (m + nf > 0) lu.compute(kkt_mat);

        auto direction = [&](double sigma_mu, const Direction* aff) {
            Direction d;
            std::vector<Mat> t(lay.psd.size());
            Vec rhs = rp;
            for (std::size_t k = 0; k < lay.psd.size(); ++k) {
                const auto& p = lay.psd[k];
                Mat target = sigma_mu * sinv[k];
                if (aff) target -= aff->dx[k] * aff->ds[k] * sinv[k];
                t[k] = sym(target) - it.x[k] - sym(it.x[k] * rd[k] * sinv[k]);
                rhs -= p.a * svec(t[k]);
            }
            Vec tn(nn);
            for (int i = 0; i < nn; ++i) {
                double target = sigma_mu;
                if (aff) target -= aff->dxn(i) * aff->dsn(i);
                tn(i) = target / it.sn(i) - it.xn(i) - it.xn(i) / it.sn(i) * rdn(i);
            }
            if (nn > 0) rhs -= lay.a_nn * tn;

            Vec full(m + nf);
            full.head(m) = rhs;
            full.tail(nf) = rdf;
            Vec sol_vec = m + nf > 0 ? Vec(lu.solve(full)) : Vec(0);
            d.dy = sol_vec.head(m);
            d.dxf = sol_vec.tail(nf);
            for (std::size_t k = 0; k < lay.psd.size(); ++k) {
                const auto& p = lay.psd[k];
                const Mat atdy = smat(p.a.transpose() * d.dy, p.order);
                d.ds.push_back(rd[k] - atdy);
                d.dx.push_back(t[k] + sym(it.x[k] * atdy * sinv[k]));
            }
            const Vec atn = nn > 0 ? Vec(lay.a_nn.transpose() * d.dy) : Vec(0);
            d.dsn = rdn - atn;
            d.dxn = tn + it.xn.cwiseQuotient(it.sn).cwiseProduct(atn);
            return d;
        };
        auto step_lengths = [&](const Direction& d) {
            double ap = max_step_nn(it.xn, d.dxn);
            double ad = max_step_nn(it.sn, d.dsn);
            for (std::size_t k = 0; k < lay.psd.size(); ++k) {
                ap = std::min(ap, max_step_psd(it.x[k], d.dx[k]));
                ad = std::min(ad, max_step_psd(it.s[k], d.ds[k]));
            }
            return std::pair{ap, ad};
        };

        const Direction aff = direction(0.0, nullptr);
        auto [ap_aff, ad_aff] = step_lengths(aff);
        ap_aff = std::min(1.0, ap_aff);
        ad_aff = std::min(1.0, ad_aff);
        double mu_aff = 0.0;
        for (std::size_t k = 0; k < lay.psd.size(); ++k)
            mu_aff += ((it.x[k] + ap_aff * aff.dx[k]).cwiseProduct(it.s[k] + ad_aff * aff.ds[k])).sum();
        mu_aff += (it.xn + ap_aff * aff.dxn).dot(it.sn + ad_aff * aff.dsn);
        mu_aff = lay.nu > 0 ? mu_aff / lay.nu : 0.0;
        const double sigma = mu > 0.0 ? std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0) : 0.0;

        const Direction d = direction(sigma * mu, &aff);
        auto [ap, ad] = step_lengths(d);
        const double frac = 0.98;
        ap = std::min(1.0, frac * ap);
        ad = std::min(1.0, frac * ad);

        for (std::size_t k = 0; k < lay.psd.size(); ++k) {
            it.x[k] = sym(it.x[k] + ap * d.dx[k]);
            it.s[k] = sym(it.s[k] + ad * d.ds[k]);
        }
        it.xn += ap * d.dxn;
        it.xf += ap * d.dxf;
        it.sn += ad * d.dsn;
        it.y += ad * d.dy;

        stall = (std::max(ap, ad) < 1e-9) ? stall + 1 : 0;
        if (stall >= 5) break;
    }
    best.status = SolveStatus::MaxIter;
    return best;
}

void write_problem(std::ostream& os, const ConicProblem& problem) {
    os.precision(17);
    os << "# fimisac conic problem v1\n";
    os << "cones";
    for (const auto& c : problem.cones) {
        const char* tag = c.kind == ConeKind::Psd ? "PSD" : c.kind == ConeKind::NonNeg ? "NONNEG" : "FREE";
        os << ' ' << tag << ' ' << c.size;
    }
    os << "\nrows " << problem.rows() << '\n';
    for (int i = 0; i < problem.c.size(); ++i)
        if (problem.c(i) != 0.0) os << "c " << i << ' ' << problem.c(i) << '\n';
    for (const auto& t : problem.a) os << "A " << t.row << ' ' << t.col << ' ' << t.value << '\n';
    for (int i = 0; i < problem.b.size(); ++i)
        if (problem.b(i) != 0.0) os << "b " << i << ' ' << problem.b(i) << '\n';
}

ConicProblem read_problem(std::istream& is) {
    ConicProblem p;
    std::string line;
    bool have_cones = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "cones") {
            std::string kind;
            int size;
            while (ls >> kind >> size) {
                if (kind == "PSD") p.add_block(ConeKind::Psd, size);
                else if (kind == "NONNEG") p.add_block(ConeKind::NonNeg, size);
                else if (kind == "FREE") p.add_block(ConeKind::Free, size);
                else throw std::invalid_argument("read_problem: unknown cone " + kind);
            }
            if (!ls.eof()) throw std::invalid_argument("read_problem: malformed line: " + line);
            ls.clear();
            have_cones = true;
        } else if (tag == "rows") {
            int r;
            ls >> r;
            p.b = Vec::Zero(r);
        } else if (tag == "c") {
            int i; double v;
            ls >> i >> v;
            if (!have_cones || i < 0 || i >= p.c.size()) throw std::invalid_argument("read_problem: bad c line");
            p.c(i) = v;
        } else if (tag == "A") {
            Triplet t{};
            ls >> t.row >> t.col >> t.value;
            p.a.push_back(t);
        } else if (tag == "b") {
            int i; double v;
            ls >> i >> v;
            if (i < 0 || i >= p.b.size()) throw std::invalid_argument("read_problem: bad b line");
            p.b(i) = v;
        } else {
            throw std::invalid_argument("read_problem: unknown line tag " + tag);
        }
        if (ls.fail()) throw std::invalid_argument("read_problem: malformed line: " + line);
    }
    p.validate();
    return p;
}

}  // namespace fimisac::conic
