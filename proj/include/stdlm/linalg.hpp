#pragma once

#include <vector>

#include <Eigen/Dense>

#include "stdlm/rng.hpp"

namespace stdlm {

inline void symmetrize(Eigen::MatrixXd& m) {
  m = (0.5 * (m + m.transpose())).eval();
}

// Cholesky of the symmetrized input with a single jitter retry
// (1e-10 x mean diagonal added on failure). Returns false if the
// factorization still fails.
bool llt_with_jitter(const Eigen::MatrixXd& m, Eigen::LLT<Eigen::MatrixXd>& llt);

// Factor L with L L' ~= cov for sampling. Uses Cholesky when possible and
// falls back to an eigendecomposition with negative eigenvalues clamped to
// zero, so PSD-degenerate covariances (zero-noise limits) still work.
Eigen::MatrixXd sampling_factor(const Eigen::MatrixXd& cov);

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           RngStream& rng);

// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::vector<double> x, double p);

double median(std::vector<double> x);

}  // namespace stdlm
