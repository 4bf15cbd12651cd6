#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stdlm/ffbs.hpp"
#include "stdlm/rng.hpp"
#include "stdlm/types.hpp"

namespace stdlm {

// Log of the unnormalized posterior density of the range parameter,
//   log p(lambda) - 1/2 sum log|Q_t| - (alpha + nT/2) log(beta + 1/2 sum e'Q^{-1}e),
// where (alpha, beta) come from the sigma2 hyperprior and the accumulators
// from a forward pass at this lambda.
double lambda_log_target(double lambda, double sum_log_det_q, double sum_quad,
                         const InverseGammaPrior& lambda_prior,
                         const InverseGammaPrior& sigma2_prior, long n, long T);

struct MhState {
  double lambda;
  double tuning_tau2;
  long accepted = 0;
  long proposed = 0;
  double acceptance_rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / proposed;
  }
};

// One multiplicative random-walk move lambda* = lambda e^Z, Z ~ N(0, tau2),
// accepted with probability min{1, exp(dlog-target) lambda*/lambda}. The
// lambda*/lambda factor is the Hastings correction for the lognormal
// proposal.
MhState mh_lambda_step(MhState state, const std::function<double(double)>& log_target,
                       RngStream& rng);

// Updated inverse-gamma parameters for sigma2: shape alpha + nT/2, scale
// beta + sum_quad / 2.
InverseGammaPrior sigma2_posterior(const InverseGammaPrior& prior, long n, long T,
                                   double sum_quad);
double sigma2_gibbs(double sum_quad, const InverseGammaPrior& prior, long n, long T,
                    RngStream& rng);

// Conditional mean and covariance of the missing entries of column `col`
// given the observed ones. missing_index lists the row positions the moments
// refer to. For a fully missing column this is the unconditional marginal.
struct ImputeMoments {
  std::vector<int> missing_index;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
ImputeMoments impute_conditional(const ObservationPanel& panel, int col,
                                 const Eigen::VectorXd& x_t, double lambda,
                                 double sigma2, const Phase& a,
                                 const StationSet& stations);

// Returns the column with missing entries replaced by a conditional draw;
// observed entries pass through untouched.
Eigen::VectorXd impute_missing(const ObservationPanel& panel, int col,
                               const Eigen::VectorXd& x_t, double lambda,
                               double sigma2, const Phase& a,
                               const StationSet& stations, RngStream& rng);

// Phase draw: at every hour not divisible by 12 the conjugate bivariate
// normal posterior of (a1, a2) given that time slice is formed and sampled;
// the returned pair is the componentwise median over those hours. Hours
// divisible by 12 are excluded because both sine regressors vanish there.
Phase sample_phase(const Eigen::MatrixXd& x, const ObservationPanel& panel,
                   std::span<const double> lambda_t, double sigma2,
                   const PhasePrior& prior, const StationSet& stations,
                   RngStream& rng);
Phase sample_phase(const Eigen::MatrixXd& x, const ObservationPanel& panel,
                   double lambda, double sigma2, const PhasePrior& prior,
                   const StationSet& stations, RngStream& rng);

struct ChainMode {
  bool fix_lambda = false;
  // Per-week fixed ranges; expanded to columns by 168-hour blocks from the
  // panel start. A single entry fixes one range for the whole span.
  std::vector<double> lambda_star;

  static ChainMode full_mh() { return ChainMode{}; }
  static ChainMode fixed(std::vector<double> lambda_star) {
    return ChainMode{true, std::move(lambda_star)};
  }
};

struct Snapshot {
  int iteration;
  double lambda;
  double sigma2;
  Phase a;
  Eigen::VectorXd x0;   // pre-sample state draw
  Eigen::MatrixXd x;    // columns x_1 .. x_T
  Eigen::MatrixXd y;    // fully imputed panel at this iteration
};

struct PosteriorDraws {
  std::vector<double> lambda, sigma2, a1, a2;  // one entry per iteration
  int iterations = 0;
  int burn_in = 0;
  int thin = 1;
  long accept_count = 0;
  std::vector<Snapshot> snapshots;             // post-burn-in, every thin-th
  std::vector<double> fixed_lambda_by_time;    // set in fixed-lambda mode

  double acceptance_rate() const {
    return iterations == 0 ? 0.0 : static_cast<double>(accept_count) / iterations;
  }
  std::vector<double> post_burn_in(const std::vector<double>& v) const {
    return {v.begin() + burn_in, v.end()};
  }
};

// The full Metropolis-within-Gibbs loop: (lambda, sigma2, x) block, missing
// value block, phase block, repeated cfg.iterations times. Deterministic for
// a fixed cfg.seed. In fixed-lambda mode the Metropolis step is skipped and
// every iteration counts as accepted.
PosteriorDraws run_chain(const ObservationPanel& panel, const StationSet& stations,
                         const ModelConfig& cfg, const ChainMode& mode);

}  // namespace stdlm
