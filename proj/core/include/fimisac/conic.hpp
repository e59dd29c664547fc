// SPDX-License-Identifier: Apache-2.0
//
// Small dense conic solver:
//
//   minimize    c^T x
//   subject to  A x = b,  x in K = K_1 x ... x K_p
//
// with each K_i a PSD cone (scaled symmetric vectorization), the nonnegative
// orthant or a free block. Solved by an infeasible-start primal-dual
// interior-point method (HKM direction, Mehrotra predictor-corrector).
// Intended for problems with a few hundred variables and rows.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace fimisac::conic {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ConeKind { Psd, NonNeg, Free };

struct ConeBlock {
    ConeKind kind;
    int size;  // matrix order for Psd, vector length otherwise

    int dimension() const { return kind == ConeKind::Psd ? size * (size + 1) / 2 : size; }
};

struct Triplet {
    int row;
    int col;
    double value;
};

struct ConicProblem {
    std::vector<ConeBlock> cones;
    Vec c;
    std::vector<Triplet> a;  // duplicates are summed
    Vec b;

    int rows() const { return static_cast<int>(b.size()); }
    int dimension() const;
    std::vector<int> offsets() const;

    // Appends a cone block and returns its starting column.
    int add_block(ConeKind kind, int size);
    // Appends a zero right-hand-side row and returns its index.
    int add_row(double rhs = 0.0);
    // Adds coefficients so that row `row` picks up <sym, X_block> for the PSD block at `offset`.
    void add_psd_term(int row, int offset, int order, const Mat& sym, double scale = 1.0);
    // Adds sym to the objective as <sym, X_block>.
    void add_psd_objective(int offset, int order, const Mat& sym, double scale = 1.0);

    Mat dense_a() const;
    void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIter };
const char* to_string(SolveStatus s);

struct ConicSolution {
    Vec x;
    Vec y;  // equality multipliers
    Vec s;  // dual slack, s = c - A^T y
    SolveStatus status = SolveStatus::MaxIter;
    double primal_residual = 0.0;  // ||Ax - b|| / (1 + ||b||)
    double dual_residual = 0.0;    // ||c - A^T y - s|| / (1 + ||c||)
    double gap = 0.0;              // |c^T x - b^T y| / (1 + |c^T x| + |b^T y|)
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    int iterations = 0;
    int removed_rows = 0;

    double kkt_residual() const { return std::max({primal_residual, dual_residual, gap}); }
};

class NumericalBreakdown : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultTol = 1e-7;
inline constexpr int kDefaultMaxIter = 50000;

ConicSolution solve(const ConicProblem& problem, double tol = kDefaultTol,
                    int max_iter = kDefaultMaxIter);

// Scaled symmetric vectorization: lower triangle column by column, off-diagonals times sqrt(2),
// so <svec(A), svec(B)> = trace(A B).
Vec svec(const Mat& m);
Mat smat(const Eigen::Ref<const Vec>& v, int order);

// Euclidean projection onto the PSD cone (negative eigenvalues clipped to zero).
Mat project_psd(const Mat& m);

// Real embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian matrix. Eigenvalues double up,
// trace doubles and Re tr(M^H H) = <embed(M), embed(H)> / 2.
Mat hermitian_embed(const Eigen::MatrixXcd& h);
// Inverse of hermitian_embed after symmetrizing over the embedding's complex structure.
Eigen::MatrixXcd hermitian_extract(const Mat& x);

// Plain-text dump: a "cones" header, then "c", "A" and "b" lines (see README).
void write_problem(std::ostream& os, const ConicProblem& problem);
ConicProblem read_problem(std::istream& is);

}  // namespace fimisac::conic
