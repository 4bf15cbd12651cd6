#include "stdlm/ffbs.hpp"

#include <cmath>

#include "stdlm/linalg.hpp"
#include "stdlm/model.hpp"

namespace stdlm {

FilterResult forward_filter(const ObservationPanel& panel, const StationSet& stations,
                            std::span<const double> lambda_t, const Phase& a,
                            const ModelConfig& cfg) {
  const int n = stations.n();
  const int T = panel.T();
  const int dim = state_dim(n);
  if (panel.n() != n) throw ContractError("panel site count does not match stations");
  if (static_cast<int>(lambda_t.size()) != T) {
    throw ContractError("lambda_t length does not match panel columns");
  }
  if (cfg.m0.size() != dim || cfg.C0.rows() != dim) {
    throw ContractError("initial state dimensions do not match site count");
  }
  if (!panel.y.allFinite()) {
    throw ContractError("panel has unfilled missing entries; impute first");
  }

  const Eigen::MatrixXd w = state_noise_cov(cfg.gamma, stations.distances());

  FilterResult out;
  out.steps.reserve(T);

  Eigen::VectorXd m = cfg.m0;
  Eigen::MatrixXd c = 0.5 * (cfg.C0 + cfg.C0.transpose());

  double cur_lambda = -1.0;
  Eigen::MatrixXd v_lam;
  Eigen::LLT<Eigen::MatrixXd> llt;

  for (int col = 0; col < T; ++col) {
    if (lambda_t[col] != cur_lambda) {
      cur_lambda = lambda_t[col];
      v_lam = exp_correlation(stations.distances(), cur_lambda);
    }
    const long t = panel.t_index[col];

    Eigen::MatrixXd r = c + w;
    symmetrize(r);

    const Eigen::MatrixXd b = design_left(t, n, a, r);       // R F_t
    const Eigen::VectorXd f = design_apply(t, n, a, m);      // F_t' m
    Eigen::MatrixXd q = design_sandwich(t, n, a, r) + v_lam; // F_t' R F_t + V_lambda

    const double asym = (q - q.transpose()).cwiseAbs().maxCoeff();
    if (asym > out.max_asym) out.max_asym = asym;
    symmetrize(q);

    const Eigen::VectorXd e = panel.y.col(col) - f;

    if (!llt_with_jitter(q, llt)) {
      throw NumericalError("forecast covariance not positive definite", col);
    }
    out.sum_log_det_q += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const Eigen::VectorXd sol = llt.solve(e);
    out.sum_quad += e.dot(sol);

    m += b * sol;
    c = r - b * llt.solve(b.transpose());
    symmetrize(c);

    out.steps.push_back(FilterState{m, c, e, q});
  }
  return out;
}

FilterResult forward_filter(const ObservationPanel& panel, const StationSet& stations,
                            double lambda, const Phase& a, const ModelConfig& cfg) {
  std::vector<double> lam(panel.T(), lambda);
  return forward_filter(panel, stations, lam, a, cfg);
}

namespace {

// Mean and covariance of x_t given x_{t+1} and the filtered moments at t.
void backward_moments(const Eigen::VectorXd& m, const Eigen::MatrixXd& c,
                      const Eigen::MatrixXd& w, const Eigen::VectorXd& x_next,
                      Eigen::VectorXd& h, Eigen::MatrixXd& big_h) {
  Eigen::MatrixXd s = c + w;
  symmetrize(s);
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!llt_with_jitter(s, llt)) {
    throw NumericalError("degenerate one-step prior in backward pass");
  }
  const Eigen::MatrixXd g = llt.solve(c).transpose();  // C (C + W)^{-1}
  h = m + g * (x_next - m);
  big_h = c - g * c;
  symmetrize(big_h);
}

}  // namespace

Eigen::MatrixXd backward_sample(const FilterResult& filter,
                                const Eigen::MatrixXd& state_noise, double sigma2,
                                RngStream& rng) {
  if (filter.steps.empty()) throw ContractError("backward_sample on an empty filter");
  const int T = static_cast<int>(filter.steps.size());
  const auto dim = filter.steps.front().m.size();
  if (state_noise.rows() != dim) {
    throw ContractError("state noise dimension does not match filter");
  }
  const double sig = std::sqrt(sigma2);

  Eigen::MatrixXd x(dim, T);
  x.col(T - 1) = filter.steps[T - 1].m +
                 sig * (sampling_factor(filter.steps[T - 1].C) * rng.normal_vector(dim));

  Eigen::VectorXd h;
  Eigen::MatrixXd big_h;
  for (int t = T - 2; t >= 0; --t) {
    backward_moments(filter.steps[t].m, filter.steps[t].C, state_noise, x.col(t + 1),
                     h, big_h);
    x.col(t) = h + sig * (sampling_factor(big_h) * rng.normal_vector(dim));
  }
  return x;
}

Eigen::VectorXd sample_initial_state(const Eigen::VectorXd& x1, const ModelConfig& cfg,
                                     const Eigen::MatrixXd& state_noise, double sigma2,
                                     RngStream& rng) {
  Eigen::VectorXd h;
  Eigen::MatrixXd big_h;
  backward_moments(cfg.m0, cfg.C0, state_noise, x1, h, big_h);
  return h + std::sqrt(sigma2) * (sampling_factor(big_h) * rng.normal_vector(h.size()));
}

}  // namespace stdlm
