// Test-only reference implementations. Everything here is deliberately
// independent of the library's computational path: conditioning goes through
// explicit matrix inverses of the full joint covariance, and data generation
// follows the constructive model recursions directly.
#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "stdlm/model.hpp"
#include "stdlm/rng.hpp"
#include "stdlm/types.hpp"

namespace oracle {

// Conditional mean/cov of the `target` coordinates of N(mean, cov) given the
// `given` coordinates equal `values`. Full-inverse route.
struct Conditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline Conditional condition_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                 const std::vector<int>& target,
                                 const std::vector<int>& given,
                                 const Eigen::VectorXd& values) {
  const auto nt = static_cast<Eigen::Index>(target.size());
  const auto ng = static_cast<Eigen::Index>(given.size());
  Eigen::MatrixXd s_tt(nt, nt), s_tg(nt, ng), s_gg(ng, ng);
  Eigen::VectorXd m_t(nt), m_g(ng);
  for (Eigen::Index i = 0; i < nt; ++i) {
    m_t[i] = mean[target[i]];
    for (Eigen::Index j = 0; j < nt; ++j) s_tt(i, j) = cov(target[i], target[j]);
    for (Eigen::Index j = 0; j < ng; ++j) s_tg(i, j) = cov(target[i], given[j]);
  }
  for (Eigen::Index i = 0; i < ng; ++i) {
    m_g[i] = mean[given[i]];
    for (Eigen::Index j = 0; j < ng; ++j) s_gg(i, j) = cov(given[i], given[j]);
  }
  Conditional out;
  if (ng == 0) {
    out.mean = m_t;
    out.cov = s_tt;
    return out;
  }
  const Eigen::MatrixXd s_gg_inv = s_gg.inverse();
  out.mean = m_t + s_tg * s_gg_inv * (values - m_g);
  out.cov = s_tt - s_tg * s_gg_inv * s_tg.transpose();
  return out;
}

// Joint distribution of (x_1..x_T, y_1..y_T) for the identity-evolution DLM
//   x_t = x_{t-1} + w_t,   w_t ~ N(0, sigma2 W),  x_0 ~ N(m0, sigma2 C0)
//   y_t = F_t' x_t + v_t,  v_t ~ N(0, sigma2 V_lambda).
// Built entirely from the marginal moment identities
//   Cov(x_t, x_s) = sigma2 (C0 + min(t, s) W).
struct JointDlm {
  int n = 0;
  int T = 0;
  int dim = 0;
  Eigen::VectorXd mean;  // states stacked first, then observations
  Eigen::MatrixXd cov;
  std::vector<int> t_index;

  int x_off(int t) const { return t * dim; }              // t = 0..T-1 block
  int y_off(int t) const { return T * dim + t * n; }

  JointDlm(const stdlm::StationSet& stations, const stdlm::ModelConfig& cfg,
           double lambda, double sigma2, const stdlm::Phase& a,
           const std::vector<int>& t_idx)
      : n(stations.n()), T(static_cast<int>(t_idx.size())), dim(2 * n + 1),
        t_index(t_idx) {
    const Eigen::MatrixXd w = stdlm::state_noise_cov(cfg.gamma, stations.distances());
    const Eigen::MatrixXd v_lam =
        stdlm::exp_correlation(stations.distances(), lambda);
    std::vector<Eigen::MatrixXd> f(T);
    for (int t = 0; t < T; ++t) f[t] = stdlm::design_matrix(t_index[t], n, a);

    const int total = T * dim + T * n;
    mean.resize(total);
    cov.resize(total, total);
    for (int t = 0; t < T; ++t) {
      mean.segment(x_off(t), dim) = cfg.m0;
      mean.segment(y_off(t), n) = f[t] * cfg.m0;
    }
    for (int t = 0; t < T; ++t) {
      for (int s = 0; s < T; ++s) {
        const Eigen::MatrixXd cxx =
            sigma2 * (cfg.C0 + std::min(t + 1, s + 1) * w);
        cov.block(x_off(t), x_off(s), dim, dim) = cxx;
        cov.block(x_off(t), y_off(s), dim, n) = cxx * f[s].transpose();
        cov.block(y_off(s), x_off(t), n, dim) =
            (cxx * f[s].transpose()).transpose();
        Eigen::MatrixXd cyy = f[t] * cxx * f[s].transpose();
        if (t == s) cyy += sigma2 * v_lam;
        cov.block(y_off(t), y_off(s), n, n) = cyy;
      }
    }
  }

  // Moments of x_t (1-based t) given y_1..y_upto (1-based count).
  Conditional state_given_obs(int t, int upto, const Eigen::MatrixXd& y) const {
    std::vector<int> target(dim), given;
    for (int i = 0; i < dim; ++i) target[i] = x_off(t - 1) + i;
    Eigen::VectorXd values(upto * n);
    for (int s = 0; s < upto; ++s) {
      for (int i = 0; i < n; ++i) {
        given.push_back(y_off(s) + i);
        values[s * n + i] = y(i, s);
      }
    }
    return condition_mvn(mean, cov, target, given, values);
  }

  // Moments of y_t given y_1..y_{t-1} (the forecast e_t/Q_t check).
  Conditional obs_forecast(int t, const Eigen::MatrixXd& y) const {
    std::vector<int> target(n), given;
    for (int i = 0; i < n; ++i) target[i] = y_off(t - 1) + i;
    Eigen::VectorXd values((t - 1) * n);
    for (int s = 0; s + 1 < t; ++s) {
      for (int i = 0; i < n; ++i) {
        given.push_back(y_off(s) + i);
        values[s * n + i] = y(i, s);
      }
    }
    return condition_mvn(mean, cov, target, given, values);
  }

  // log |Cov(y_1..y_T)| for the prediction-decomposition identity
  // sum_t log|sigma2 Q_t| = log|Sigma_y|.
  double log_det_obs_cov() const {
    Eigen::MatrixXd s(T * n, T * n);
    for (int t = 0; t < T; ++t) {
      for (int u = 0; u < T; ++u) {
        s.block(t * n, u * n, n, n) = cov.block(y_off(t), y_off(u), n, n);
      }
    }
    return std::log(s.determinant());
  }
};

// Direct simulation of the generative recursions over a full station set.
struct SimulatedData {
  stdlm::ObservationPanel panel;   // mask all-true unless miss_rate > 0
  Eigen::MatrixXd x;               // true states, columns x_1..x_T
  Eigen::VectorXd x0;
};

inline SimulatedData simulate_panel(const stdlm::StationSet& stations,
                                    const stdlm::Gamma& gamma, double lambda,
                                    double sigma2, const stdlm::Phase& a,
                                    const Eigen::VectorXd& m0, const Eigen::MatrixXd& c0,
                                    int T, stdlm::RngStream& rng,
                                    double miss_rate = 0.0, int t_start = 1) {
  const int n = stations.n();
  const int dim = 2 * n + 1;
  const Eigen::MatrixXd w = stdlm::state_noise_cov(gamma, stations.distances());
  const Eigen::MatrixXd v_lam = stdlm::exp_correlation(stations.distances(), lambda);
  const Eigen::MatrixXd lw =
      Eigen::LLT<Eigen::MatrixXd>(w).matrixL();
  const Eigen::MatrixXd lv =
      Eigen::LLT<Eigen::MatrixXd>(v_lam).matrixL();
  const Eigen::MatrixXd lc0 = Eigen::LLT<Eigen::MatrixXd>(c0).matrixL();
  const double sig = std::sqrt(sigma2);

  SimulatedData out;
  out.x0 = m0 + sig * (lc0 * rng.normal_vector(dim));
  out.x.resize(dim, T);
  out.panel.y.resize(n, T);
  out.panel.mask.resize(n, T);
  out.panel.t_index.resize(T);
  Eigen::VectorXd state = out.x0;
  for (int c = 0; c < T; ++c) {
    state += sig * (lw * rng.normal_vector(dim));
    out.x.col(c) = state;
    const long t = t_start + c;
    out.panel.t_index[c] = static_cast<int>(t);
    const Eigen::VectorXd noise = sig * (lv * rng.normal_vector(n));
    out.panel.y.col(c) = stdlm::design_apply(t, n, a, state) + noise;
    for (int i = 0; i < n; ++i) {
      out.panel.mask(i, c) = !(miss_rate > 0.0 && rng.uniform() < miss_rate);
    }
  }
  return out;
}

// ---- distribution helpers -------------------------------------------------

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Kendall rank correlation with the normal approximation p-value (ties get
// the standard tau-b style variance correction omitted; adequate for
// continuous coverage rates).
struct KendallResult {
  double tau;
  double z;
  double p_two_sided;
  double p_greater;  // H1: tau > 0
};

inline KendallResult kendall_tau(const std::vector<double>& x,
                                 const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  long concordant = 0, discordant = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double s = (x[j] - x[i]) * (y[j] - y[i]);
      if (s > 0) ++concordant;
      else if (s < 0) ++discordant;
    }
  }
  KendallResult r{};
  const double denom = 0.5 * n * (n - 1);
  r.tau = (concordant - discordant) / denom;
  const double var = (2.0 * (2 * n + 5)) / (9.0 * n * (n - 1));
  r.z = r.tau / std::sqrt(var);
  r.p_two_sided = 2.0 * (1.0 - normal_cdf(std::abs(r.z)));
  r.p_greater = 1.0 - normal_cdf(r.z);
  return r;
}

// One-sample Kolmogorov-Smirnov statistic against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> sample, Cdf cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - (i + 1) / n));
    d = std::max(d, std::abs(f - i / n));
  }
  return d;
}

}  // namespace oracle
