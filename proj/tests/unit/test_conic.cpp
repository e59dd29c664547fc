// SPDX-License-Identifier: Apache-2.0
#include "fimisac/conic.hpp"

#include "common.hpp"

#include <sstream>

using namespace fimisac;
using namespace testutil;
namespace cn = fimisac::conic;

namespace {

cn::ConicProblem min_eig_problem(const Mat& c) {
    const int n = static_cast<int>(c.rows());
    cn::ConicProblem p;
    const int off = p.add_block(cn::ConeKind::Psd, n);
    p.c = Vec::Zero(p.dimension());
    p.add_psd_objective(off, n, c);
    const int r = p.add_row(1.0);
    p.add_psd_term(r, off, n, Mat::Identity(n, n));
    return p;
}

// max gamma s.t. [[a - gamma, b], [b, c]] >= 0
cn::ConicProblem schur_problem(double a, double b, double c) {
    cn::ConicProblem p;
    const int x = p.add_block(cn::ConeKind::Psd, 2);
    const int g = p.add_block(cn::ConeKind::Free, 1);
    p.c = Vec::Zero(p.dimension());
    p.c(g) = -1.0;
    // X00 + gamma = a, X10 = b, X11 = c
    Mat e00 = Mat::Zero(2, 2), e10 = Mat::Zero(2, 2), e11 = Mat::Zero(2, 2);
    e00(0, 0) = 1;
    e10(0, 1) = e10(1, 0) = 0.5;
    e11(1, 1) = 1;
    int r = p.add_row(a);
    p.add_psd_term(r, x, 2, e00);
    p.a.push_back({r, g, 1.0});
    r = p.add_row(b);
    p.add_psd_term(r, x, 2, e10);
    r = p.add_row(c);
    p.add_psd_term(r, x, 2, e11);
    return p;
}

}  // namespace

TEST_CASE("minimum eigenvalue SDP") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 5;
        Mat c = Mat::Random(n, n);
        c = (c + c.transpose()).eval();
        auto sol = cn::solve(min_eig_problem(c));
        REQUIRE(sol.status == cn::SolveStatus::Optimal);
        const double lmin = Eigen::SelfAdjointEigenSolver<Mat>(c).eigenvalues()(0);
        CHECK(std::abs(sol.primal_objective - lmin) <= 1e-6 * (1 + std::abs(lmin)));
        CHECK(sol.kkt_residual() <= 1e-6);
    }
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = 3;
    auto sol = cn::solve(min_eig_problem(d));
    Mat x = cn::smat(sol.x, 2);
    CHECK(std::abs(x(0, 0) - 1.0) < 1e-6);
    CHECK(std::abs(x(1, 1)) < 1e-6);
}

TEST_CASE("Schur complement SDP") {
    const double cases[][3] = {{2, 1, 4}, {3, -0.5, 0.25}, {0, 2, 1}, {1e3, 10, 0.5}};
    for (const auto& k : cases) {
        auto sol = cn::solve(schur_problem(k[0], k[1], k[2]));
        REQUIRE(sol.status == cn::SolveStatus::Optimal);
        const double expect = k[0] - k[1] * k[1] / k[2];
        CHECK(std::abs(-sol.primal_objective - expect) <= 1e-6 * (1 + std::abs(expect)));
    }
    CHECK(-cn::solve(schur_problem(2, 1, 4)).primal_objective == doctest::Approx(1.75).epsilon(1e-7));
}

TEST_CASE("LPs against vertex enumeration") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        const int m = 2, n = 5;
        Mat a = Mat::Random(m, n);
        Vec x0 = (Vec::Random(n).array() + 1.5).matrix();
        Vec b = a * x0;
        Vec c = (Vec::Random(n).array() + 1.2).matrix();  // positive costs keep it bounded
        cn::ConicProblem p;
        p.add_block(cn::ConeKind::NonNeg, n);
        p.c = c;
        for (int i = 0; i < m; ++i) {
            p.add_row(b(i));
            for (int j = 0; j < n; ++j) p.a.push_back({i, j, a(i, j)});
        }
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                Mat basis(m, 2);
                basis << a.col(i), a.col(j);
                if (std::abs(basis.determinant()) < 1e-12) continue;
                Vec xb = basis.partialPivLu().solve(b);
                if ((xb.array() < -1e-12).any()) continue;
                best = std::min(best, c(i) * xb(0) + c(j) * xb(1));
            }
        auto sol = cn::solve(p);
        REQUIRE(sol.status == cn::SolveStatus::Optimal);
        CHECK(std::abs(sol.primal_objective - best) <= 1e-6 * (1 + std::abs(best)));
        CHECK((sol.x.array() >= -1e-8).all());
    }
}

TEST_CASE("degenerate rows, infeasibility and unboundedness") {
    SUBCASE("redundant row is dropped") {
        cn::ConicProblem p;
        p.add_block(cn::ConeKind::NonNeg, 2);
        p.c = Vec::Ones(2);
        p.add_row(1.0);
        p.add_row(2.0);
        p.a = {{0, 0, 1}, {0, 1, 1}, {1, 0, 2}, {1, 1, 2}};
        auto sol = cn::solve(p);
        CHECK(sol.status == cn::SolveStatus::Optimal);
        CHECK(sol.removed_rows == 1);
        CHECK(sol.primal_objective == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("inconsistent rows") {
        cn::ConicProblem p;
        p.add_block(cn::ConeKind::NonNeg, 2);
        p.c = Vec::Ones(2);
        p.add_row(1.0);
        p.add_row(3.0);
        p.a = {{0, 0, 1}, {0, 1, 1}, {1, 0, 2}, {1, 1, 2}};
        CHECK(cn::solve(p).status == cn::SolveStatus::Infeasible);
    }
    SUBCASE("x >= 0 with x1 + x2 = -1") {
        cn::ConicProblem p;
        p.add_block(cn::ConeKind::NonNeg, 2);
        p.c = Vec::Ones(2);
        p.add_row(-1.0);
        p.a = {{0, 0, 1}, {0, 1, 1}};
        CHECK(cn::solve(p).status == cn::SolveStatus::Infeasible);
    }
    SUBCASE("min -x1 with x1 - x2 = 0") {
        cn::ConicProblem p;
        p.add_block(cn::ConeKind::NonNeg, 2);
        p.c = Vec::Zero(2);
        p.c(0) = -1;
        p.add_row(0.0);
        p.a = {{0, 0, 1}, {0, 1, -1}};
        CHECK(cn::solve(p).status == cn::SolveStatus::Unbounded);
    }
}

TEST_CASE("vectorization helpers") {
    std::mt19937_64 rng(33);
    Mat a = Mat::Random(4, 4), b = Mat::Random(4, 4);
    a = (a + a.transpose()).eval();
    b = (b + b.transpose()).eval();
    CHECK(std::abs(cn::svec(a).dot(cn::svec(b)) - (a * b).trace()) < 1e-12);
    CHECK((cn::smat(cn::svec(a), 4) - a).norm() < 1e-14);

    Mat p = cn::project_psd(a);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(p).eigenvalues().minCoeff() > -1e-12);
    CHECK((cn::project_psd(p) - p).norm() < 1e-12);

    CMat h = random_cmat(rng, 3, 3);
    h = (h + h.adjoint()).eval();
    Mat e = cn::hermitian_embed(h);
    Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(e).eigenvalues();
    Vec hv = Eigen::SelfAdjointEigenSolver<CMat>(h).eigenvalues();
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(ev(2 * i) - hv(i)) < 1e-12);
        CHECK(std::abs(ev(2 * i + 1) - hv(i)) < 1e-12);
    }
    CHECK(std::abs(e.trace() - 2 * h.trace().real()) < 1e-12);
    CHECK((cn::hermitian_extract(e) - h).norm() < 1e-14);
    CMat m = random_cmat(rng, 3, 3);
    m = (m + m.adjoint()).eval();
    const double lhs = (m.adjoint() * h).trace().real();
    CHECK(std::abs(lhs - 0.5 * (cn::hermitian_embed(m).transpose() * e).trace()) < 1e-12);
}

TEST_CASE("text dump round trip") {
    auto p = schur_problem(2, 1, 4);
    std::stringstream ss;
    cn::write_problem(ss, p);
    auto q = cn::read_problem(ss);
    CHECK(q.cones.size() == p.cones.size());
    CHECK((q.dense_a() - p.dense_a()).norm() == 0.0);
    CHECK((q.b - p.b).norm() == 0.0);
    CHECK((q.c - p.c).norm() == 0.0);
    CHECK(cn::solve(q).primal_objective == cn::solve(p).primal_objective);
    std::stringstream bad("cones PSD 2\nrows 1\nA 5 0 1\n");
    CHECK_THROWS(cn::read_problem(bad));
}

TEST_CASE("deterministic") {
    auto p = min_eig_problem(Mat::Random(5, 5) + Mat::Random(5, 5).transpose());
    auto a = cn::solve(p), b = cn::solve(p);
    CHECK(a.x == b.x);
    CHECK(a.iterations == b.iterations);
}
