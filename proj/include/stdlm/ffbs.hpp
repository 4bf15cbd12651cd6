#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stdlm/rng.hpp"
#include "stdlm/types.hpp"

namespace stdlm {

// Per-step filter output. All covariances are scale matrices: the actual
// covariance is sigma2 times the stored matrix, which is what lets the
// sigma2 Gibbs step reuse one filter pass.
struct FilterState {
  Eigen::VectorXd m;  // posterior state mean
  Eigen::MatrixXd C;  // posterior covariance scale
  Eigen::VectorXd e;  // one-step forecast error
  Eigen::MatrixXd Q;  // forecast covariance scale (symmetrized)
};

struct FilterResult {
  std::vector<FilterState> steps;
  double sum_log_det_q = 0.0;  // sum over t of log|Q_t|
  double sum_quad = 0.0;       // sum over t of e_t' Q_t^{-1} e_t
  double max_asym = 0.0;       // worst |Q - Q'| entry seen before symmetrizing
};

// Kalman forward pass with identity state evolution. The panel must be fully
// imputed (every cell finite); unfilled panels are rejected. lambda_t gives
// the observation range per column, which is a constant vector except in the
// fixed-per-week mode.
FilterResult forward_filter(const ObservationPanel& panel, const StationSet& stations,
                            std::span<const double> lambda_t, const Phase& a,
                            const ModelConfig& cfg);
FilterResult forward_filter(const ObservationPanel& panel, const StationSet& stations,
                            double lambda, const Phase& a, const ModelConfig& cfg);

// One trajectory draw from the joint smoothing distribution: x_T from
// N(m_T, sigma2 C_T), then backwards
//   x_t | x_{t+1} ~ N(m_t + C_t (C_t + W)^{-1} (x_{t+1} - m_t),
//                     sigma2 (C_t - C_t (C_t + W)^{-1} C_t)).
// Columns of the result are x_1 .. x_T.
Eigen::MatrixXd backward_sample(const FilterResult& filter,
                                const Eigen::MatrixXd& state_noise, double sigma2,
                                RngStream& rng);

// Draw of the pre-sample state x_0 given x_1, from the same backward
// conditional anchored at the prior N(m0, sigma2 C0). The interpolator needs
// it for the t = 1 state increments.
Eigen::VectorXd sample_initial_state(const Eigen::VectorXd& x1, const ModelConfig& cfg,
                                     const Eigen::MatrixXd& state_noise, double sigma2,
                                     RngStream& rng);

}  // namespace stdlm
