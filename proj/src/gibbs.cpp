#include "stdlm/gibbs.hpp"

#include <cmath>

#include "stdlm/linalg.hpp"
#include "stdlm/model.hpp"

namespace stdlm {

double lambda_log_target(double lambda, double sum_log_det_q, double sum_quad,
                         const InverseGammaPrior& lambda_prior,
                         const InverseGammaPrior& sigma2_prior, long n, long T) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!std::isfinite(sum_log_det_q) || !std::isfinite(sum_quad)) {
    throw NumericalError("non-finite filter accumulators in lambda target");
  }
  const double log_prior =
      -(lambda_prior.shape + 1.0) * std::log(lambda) - lambda_prior.scale / lambda;
  const double exponent = sigma2_prior.shape + 0.5 * static_cast<double>(n) * T;
  return log_prior - 0.5 * sum_log_det_q -
         exponent * std::log(sigma2_prior.scale + 0.5 * sum_quad);
}

MhState mh_lambda_step(MhState state, const std::function<double(double)>& log_target,
                       RngStream& rng) {
  const double z = std::sqrt(state.tuning_tau2) * rng.normal();
  const double proposal = state.lambda * std::exp(z);
  const double log_ratio = log_target(proposal) - log_target(state.lambda) +
                           std::log(proposal) - std::log(state.lambda);
  state.proposed += 1;
  const double u = 1.0 - rng.uniform();  // (0, 1]
  if (std::log(u) < log_ratio) {
    state.lambda = proposal;
    state.accepted += 1;
  }
  return state;
}

InverseGammaPrior sigma2_posterior(const InverseGammaPrior& prior, long n, long T,
                                   double sum_quad) {
  if (sum_quad < 0.0) {
    throw NumericalError("negative quadratic form in sigma2 update");
  }
  return InverseGammaPrior{prior.shape + 0.5 * static_cast<double>(n) * T,
                           prior.scale + 0.5 * sum_quad};
}

double sigma2_gibbs(double sum_quad, const InverseGammaPrior& prior, long n, long T,
                    RngStream& rng) {
  const InverseGammaPrior post = sigma2_posterior(prior, n, T, sum_quad);
  return rng.inv_gamma(post.shape, post.scale);
}

ImputeMoments impute_conditional(const ObservationPanel& panel, int col,
                                 const Eigen::VectorXd& x_t, double lambda,
                                 double sigma2, const Phase& a,
                                 const StationSet& stations) {
  const int n = panel.n();
  std::vector<int> miss, obs;
  for (int i = 0; i < n; ++i) {
    (panel.mask(i, col) ? obs : miss).push_back(i);
  }

  ImputeMoments out;
  out.missing_index = miss;
  if (miss.empty()) {
    out.mean.resize(0);
    out.cov.resize(0, 0);
    return out;
  }

  const Eigen::VectorXd mu = design_apply(panel.t_index[col], n, a, x_t);
  const Eigen::MatrixXd sig =
      sigma2 * exp_correlation(stations.distances(), lambda);

  if (obs.empty()) {
    // Fully missing column: unconditional marginal.
    out.mean = mu;
    out.cov = sig;
    return out;
  }

  const Eigen::MatrixXd s_oo = sig(obs, obs);
  const Eigen::MatrixXd s_mo = sig(miss, obs);
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!llt_with_jitter(s_oo, llt)) {
    throw NumericalError("observed-block covariance not positive definite", col);
  }
  const Eigen::VectorXd resid = panel.y.col(col)(obs) - mu(obs);
  out.mean = mu(miss) + s_mo * llt.solve(resid);
  out.cov = sig(miss, miss) - s_mo * llt.solve(s_mo.transpose());
  symmetrize(out.cov);
  return out;
}

Eigen::VectorXd impute_missing(const ObservationPanel& panel, int col,
                               const Eigen::VectorXd& x_t, double lambda,
                               double sigma2, const Phase& a,
                               const StationSet& stations, RngStream& rng) {
  Eigen::VectorXd y = panel.y.col(col);
  const ImputeMoments mom =
      impute_conditional(panel, col, x_t, lambda, sigma2, a, stations);
  if (mom.missing_index.empty()) return y;
  const Eigen::VectorXd draw = sample_mvn(mom.mean, mom.cov, rng);
  for (std::size_t k = 0; k < mom.missing_index.size(); ++k) {
    y[mom.missing_index[k]] = draw[static_cast<Eigen::Index>(k)];
  }
  return y;
}

Phase sample_phase(const Eigen::MatrixXd& x, const ObservationPanel& panel,
                   std::span<const double> lambda_t, double sigma2,
                   const PhasePrior& prior, const StationSet& stations,
                   RngStream& rng) {
  const int n = panel.n();
  const int T = panel.T();
  if (x.cols() != T || x.rows() != state_dim(n)) {
    throw ContractError("trajectory and panel are not aligned");
  }
  const Eigen::Matrix2d prior_prec = prior.cov.inverse();
  const Eigen::Vector2d prior_rhs = prior_prec * prior.mean;

  double cur_lambda = -1.0;
  Eigen::LLT<Eigen::MatrixXd> llt;
  std::vector<double> draws1, draws2;
  draws1.reserve(T);
  draws2.reserve(T);

  for (int col = 0; col < T; ++col) {
    const long t = panel.t_index[col];
    if (t % 12 == 0) continue;  // sine regressors vanish, posterior ill-posed
    if (lambda_t[col] != cur_lambda) {
      cur_lambda = lambda_t[col];
      const Eigen::MatrixXd v_lam = exp_correlation(stations.distances(), cur_lambda);
      if (!llt_with_jitter(v_lam, llt)) {
        throw NumericalError("observation correlation not positive definite", col);
      }
    }
    const double beta = x(0, col);
    const auto alpha1 = x.col(col).segment(1, n);
    const auto alpha2 = x.col(col).segment(1 + n, n);

    Eigen::MatrixXd design(n, 2);
    design.col(0) = harmonic_sin(t, 1) * alpha1;
    design.col(1) = harmonic_sin(t, 2) * alpha2;
    const Eigen::VectorXd resid = panel.y.col(col) -
                                  (Eigen::VectorXd::Constant(n, beta) +
                                   harmonic_cos(t, 1) * alpha1 +
                                   harmonic_cos(t, 2) * alpha2);

    const Eigen::MatrixXd vinv_design = llt.solve(design);
    const Eigen::Matrix2d prec =
        prior_prec + (design.transpose() * vinv_design) / sigma2;
    const Eigen::Vector2d rhs =
        prior_rhs + (vinv_design.transpose() * resid) / sigma2;
    const Eigen::Matrix2d cov = prec.inverse();
    const Eigen::Vector2d mean = cov * rhs;

    const Eigen::VectorXd a_draw =
        sample_mvn(mean, 0.5 * (cov + cov.transpose()), rng);
    draws1.push_back(a_draw[0]);
    draws2.push_back(a_draw[1]);
  }

  if (draws1.empty()) {
    throw ConfigError("no usable hours for phase sampling: every t is a multiple of 12");
  }
  return Phase{median(std::move(draws1)), median(std::move(draws2))};
}

Phase sample_phase(const Eigen::MatrixXd& x, const ObservationPanel& panel,
                   double lambda, double sigma2, const PhasePrior& prior,
                   const StationSet& stations, RngStream& rng) {
  std::vector<double> lam(panel.T(), lambda);
  return sample_phase(x, panel, lam, sigma2, prior, stations, rng);
}

namespace {

std::vector<double> expand_lambda_star(const std::vector<double>& lambda_star,
                                       const std::vector<int>& t_index) {
  if (lambda_star.empty()) {
    throw ConfigError("fixed-lambda mode needs at least one lambda value");
  }
  for (double l : lambda_star) {
    if (!(l > 0.0)) throw ConfigError("fixed lambda values must be positive");
  }
  std::vector<double> lam(t_index.size());
  for (std::size_t c = 0; c < t_index.size(); ++c) {
    const std::size_t week = (t_index[c] - t_index.front()) / 168;
    lam[c] = lambda_star[std::min(week, lambda_star.size() - 1)];
  }
  return lam;
}

// Site means of the observed values, for the iteration-1 fill of missing
// cells. Sites with no observations fall back to the overall mean.
Eigen::VectorXd observed_site_means(const ObservationPanel& panel) {
  const int n = panel.n();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(n);
  double total = 0.0;
  long total_count = 0;
  for (int c = 0; c < panel.T(); ++c) {
    for (int i = 0; i < n; ++i) {
      if (panel.mask(i, c)) {
        mean[i] += panel.y(i, c);
        count[i] += 1.0;
        total += panel.y(i, c);
        ++total_count;
      }
    }
  }
  const double overall = total_count > 0 ? total / total_count : 0.0;
  for (int i = 0; i < n; ++i) {
    mean[i] = count[i] > 0.0 ? mean[i] / count[i] : overall;
  }
  return mean;
}

}  // namespace

PosteriorDraws run_chain(const ObservationPanel& panel_in, const StationSet& stations,
                         const ModelConfig& cfg, const ChainMode& mode) {
  const int n = stations.n();
  cfg.validate(n);
  panel_in.validate();
  if (panel_in.n() != n) {
    throw ContractError("panel site count does not match stations");
  }

  ObservationPanel panel = panel_in;
  const int T = panel.T();
  RngStream rng(cfg.seed);
  const Eigen::MatrixXd w = state_noise_cov(cfg.gamma, stations.distances());

  std::vector<double> lambda_t;
  if (mode.fix_lambda) {
    lambda_t = expand_lambda_star(mode.lambda_star, panel.t_index);
  }

  // Initialization: lambda and sigma2 from their hyperpriors, each state
  // column from N(m0, sigma2 C0), missing cells from site means, phase at
  // its prior mean.
  double lambda =
      mode.fix_lambda ? lambda_t.front()
                      : rng.inv_gamma(cfg.lambda_prior.shape, cfg.lambda_prior.scale);
  double sigma2 = rng.inv_gamma(cfg.sigma2_prior.shape, cfg.sigma2_prior.scale);
  Phase a{cfg.a_prior.mean[0], cfg.a_prior.mean[1]};

  const Eigen::MatrixXd l0 = sampling_factor(cfg.C0);
  Eigen::MatrixXd x(state_dim(n), T);
  for (int c = 0; c < T; ++c) {
    x.col(c) = cfg.m0 + std::sqrt(sigma2) * (l0 * rng.normal_vector(state_dim(n)));
  }

  const Eigen::VectorXd site_means = observed_site_means(panel);
  std::vector<int> cols_with_missing;
  for (int c = 0; c < T; ++c) {
    bool any = false;
    for (int i = 0; i < n; ++i) {
      if (!panel.mask(i, c)) {
        panel.y(i, c) = site_means[i];
        any = true;
      }
    }
    if (any) cols_with_missing.push_back(c);
  }

  PosteriorDraws out;
  out.iterations = cfg.iterations;
  out.burn_in = cfg.burn_in;
  out.thin = cfg.thin;
  if (mode.fix_lambda) out.fixed_lambda_by_time = lambda_t;
  out.lambda.reserve(cfg.iterations);
  out.sigma2.reserve(cfg.iterations);
  out.a1.reserve(cfg.iterations);
  out.a2.reserve(cfg.iterations);

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    try {
      FilterResult filter;
      if (mode.fix_lambda) {
        filter = forward_filter(panel, stations, lambda_t, a, cfg);
        out.accept_count += 1;  // no Metropolis step: nothing to reject
      } else {
        FilterResult f_cur = forward_filter(panel, stations, lambda, a, cfg);
        const double lt_cur =
            lambda_log_target(lambda, f_cur.sum_log_det_q, f_cur.sum_quad,
                              cfg.lambda_prior, cfg.sigma2_prior, n, T);
        const double z = std::sqrt(cfg.mh_tau2) * rng.normal();
        const double proposal = lambda * std::exp(z);
        FilterResult f_star = forward_filter(panel, stations, proposal, a, cfg);
        const double lt_star =
            lambda_log_target(proposal, f_star.sum_log_det_q, f_star.sum_quad,
                              cfg.lambda_prior, cfg.sigma2_prior, n, T);
        const double log_ratio =
            lt_star - lt_cur + std::log(proposal) - std::log(lambda);
        const double u = 1.0 - rng.uniform();
        if (std::log(u) < log_ratio) {
          lambda = proposal;
          out.accept_count += 1;
          filter = std::move(f_star);
        } else {
          filter = std::move(f_cur);
        }
      }

      sigma2 = sigma2_gibbs(filter.sum_quad, cfg.sigma2_prior, n, T, rng);
      x = backward_sample(filter, w, sigma2, rng);

      for (int c : cols_with_missing) {
        const double lam_c = mode.fix_lambda ? lambda_t[c] : lambda;
        panel.y.col(c) =
            impute_missing(panel, c, x.col(c), lam_c, sigma2, a, stations, rng);
      }

      if (mode.fix_lambda) {
        a = sample_phase(x, panel, lambda_t, sigma2, cfg.a_prior, stations, rng);
      } else {
        a = sample_phase(x, panel, lambda, sigma2, cfg.a_prior, stations, rng);
      }
    } catch (NumericalError& err) {
      throw NumericalError(std::string(err.what()) + " (iteration " +
                               std::to_string(iter) + ")",
                           err.time_index);
    }

    out.lambda.push_back(lambda);
    out.sigma2.push_back(sigma2);
    out.a1.push_back(a.a1);
    out.a2.push_back(a.a2);

    if (iter > cfg.burn_in && (iter - cfg.burn_in - 1) % cfg.thin == 0) {
      Snapshot snap;
      snap.iteration = iter;
      snap.lambda = lambda;
      snap.sigma2 = sigma2;
      snap.a = a;
      snap.x0 = sample_initial_state(x.col(0), cfg, w, sigma2, rng);
      snap.x = x;
      snap.y = panel.y;
      out.snapshots.push_back(std::move(snap));
    }
  }
  return out;
}

}  // namespace stdlm
