// SPDX-License-Identifier: Apache-2.0
//
// Fisher information for the target angle, its prior average and the
// Monte-Carlo average CRB.

#pragma once

#include "fimisac/model.hpp"
#include "fimisac/quadrature.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace fimisac {

// The angle cannot be estimated because no energy is radiated toward it.
class SignalNullError : public std::runtime_error {
public:
    explicit SignalNullError(double angle)
        : std::runtime_error("signal null: no transmit energy toward angle " + std::to_string(angle)),
          angle_(angle) {}
    double angle() const noexcept { return angle_; }

private:
    double angle_;
};

struct TargetParameters {
    double angle = 0.0;
    cd reflection{0.0, 0.0};
};

// Ordered (theta, Re alpha, Im alpha).
using FisherMatrix = Eigen::Matrix3d;

// zeta(theta) = sin(theta) x^r - cos(theta) y^r, P = delta^2 (I - 11^T / N_r), kappa = zeta^T P zeta.
struct EfimContext {
    Vec zeta;
    Mat projector;
    double kappa = 0.0;
};
EfimContext make_efim_context(const ArrayGeometry& rx, double theta);

// Receive-side kappa without forming P: delta^2 * N_r * var(zeta).
double receive_kappa(const ArrayGeometry& rx, double theta);

// One quadrature node of one target: everything the optimizers need at that angle.
struct SensingNode {
    double angle = 0.0;
    double weight = 0.0;  // normalized Gauss-Hermite weight (sums to 1 per target)
    CVec a;               // transmit steering
    CVec adot;            // its angle derivative
    double kappa = 0.0;   // receive term zeta^T P zeta
};

std::vector<SensingNode> sensing_nodes(const ArrayGeometry& tx, const ArrayGeometry& rx,
                                       const GaussHermiteRule& rule,
                                       std::span<const TargetPrior> targets,
                                       DerivativeConvention conv);

// 2 T |alpha|^2 / sigma_r^2
double fisher_scale(cd alpha, int block_length, double sigma_r2);

// kappa p + N_r d - N_r |g|^2 / p with p = a^H E a, d = adot^H E adot, g = a^H E adot.
// Throws SignalNullError when p < 1e-30.
double node_information(const CMat& cov, const SensingNode& node, int n_rx);

// Full 3x3 FIM built from A = b a^H and the exact derivative Adot = bdot a^H + b adot^H.
FisherMatrix fim_full(const CMat& w, const ArrayGeometry& tx, const ArrayGeometry& rx,
                      const TargetParameters& params, int block_length, double sigma_r2);

// theta-block Schur complement of a FIM.
double schur_theta(const FisherMatrix& f);

// Closed-form equivalent Fisher information for theta.
double efim_theta(const CMat& w, const ArrayGeometry& tx, const ArrayGeometry& rx, double theta,
                  cd alpha, int block_length, double sigma_r2,
                  DerivativeConvention conv = DerivativeConvention::Exact);
double efim_theta_cov(const CMat& cov, const ArrayGeometry& tx, const ArrayGeometry& rx,
                      double theta, cd alpha, int block_length, double sigma_r2,
                      DerivativeConvention conv = DerivativeConvention::Exact);

// Max relative residual of the three trace identities that turn the FIM into the closed form.
double trace_identities_check(const CMat& w, const ArrayGeometry& tx, const ArrayGeometry& rx,
                              double theta);

// Sum over targets of the prior-averaged Fisher information (Gauss-Hermite, normalized weights).
double avg_fisher(const CMat& w, const ArrayGeometry& tx, const ArrayGeometry& rx,
                  const GaussHermiteRule& rule, std::span<const TargetPrior> targets,
                  const SystemConfig& cfg);
double avg_fisher_cov(const CMat& cov, const ArrayGeometry& tx, const ArrayGeometry& rx,
                      const GaussHermiteRule& rule, std::span<const TargetPrior> targets,
                      const SystemConfig& cfg);

struct CrbEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int n_samples = 0;
    double truncation_sigmas = 3.0;
};

// Sample mean of 1/F(theta) with theta ~ N(mean, stddev^2) truncated to +-3 stddev.
// Samples are drawn up front from `seed`, so the estimate is reproducible.
CrbEstimate avg_crb_mc(const CMat& w, const ArrayGeometry& tx, const ArrayGeometry& rx,
                       const TargetPrior& prior, int n_samples, std::uint64_t seed,
                       const SystemConfig& cfg);

std::vector<double> truncated_normal_samples(const TargetPrior& prior, int n, std::uint64_t seed,
                                             double truncation_sigmas = 3.0);

}  // namespace fimisac
