#pragma once

#include <Eigen/Dense>

#include "stdlm/types.hpp"

namespace stdlm {

// Harmonic regressor S_jt(a_j) = cos(pi t j / 12) + a_j sin(pi t j / 12),
// j = 1 for the 24h cycle, j = 2 for the 12h cycle. The angle is reduced
// modulo the period first, so the periodicity is exact and the sine term
// vanishes exactly at multiples of 12 hours.
double harmonic(long t, int j, double a_j);
double harmonic_cos(long t, int j);
double harmonic_sin(long t, int j);

// Observation matrix F_t' (n rows, 2n+1 columns): row i has 1 in column 0,
// S_1t in column 1+i and S_2t in column 1+n+i.
Eigen::MatrixXd design_matrix(long t, int n, const Phase& a);

// The three products the filter needs, computed from the sparsity pattern of
// F_t' rather than by dense multiplication.
// design_apply:    F_t' x          for a state vector x
// design_left:     M F_t           for a (2n+1) x (2n+1) matrix M
// design_sandwich: F_t' M F_t      for a symmetric (2n+1) x (2n+1) matrix M
Eigen::VectorXd design_apply(long t, int n, const Phase& a, const Eigen::VectorXd& x);
Eigen::MatrixXd design_left(long t, int n, const Phase& a, const Eigen::MatrixXd& m);
Eigen::MatrixXd design_sandwich(long t, int n, const Phase& a, const Eigen::MatrixXd& m);

// Entrywise exp(-V/range). Unit diagonal, symmetric, positive definite for
// distinct sites.
Eigen::MatrixXd exp_correlation(const Eigen::MatrixXd& v, double range);

// Block-diagonal evolution covariance scale
// [tau_y^2 | tau_1^2 exp(-V/lambda_1) | tau_2^2 exp(-V/lambda_2)].
Eigen::MatrixXd state_noise_cov(const Gamma& gamma, const Eigen::MatrixXd& v);

// Divides the tau components by the number of weeks in the fitting span,
// leaving the ranges untouched.
Gamma scale_gamma_for_span(const Gamma& gamma, int t_weeks);

}  // namespace stdlm
