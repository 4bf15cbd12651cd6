#include "stdlm/interpolate.hpp"

#include <algorithm>
#include <cmath>

#include "stdlm/linalg.hpp"
#include "stdlm/model.hpp"

namespace stdlm {

namespace {

// Convex-hull membership via orientation against every hull edge.
bool inside_hull(const std::vector<Eigen::Vector2d>& pts, const Eigen::Vector2d& q) {
  if (pts.size() < 3) return false;
  std::vector<Eigen::Vector2d> p = pts;
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Eigen::Vector2d> hull(2 * p.size());
  std::size_t k = 0;
  for (const auto& pt : p) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pt) <= 0) --k;
    hull[k++] = pt;
  }
  const std::size_t lower = k + 1;
  for (auto it = p.rbegin() + 1; it != p.rend(); ++it) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  if (hull.size() < 3) return false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    if (cross(a, b, q) < 0) return false;
  }
  return true;
}

double clamp_schur(double schur) {
  if (schur < -1e-12) {
    throw NumericalError("negative conditional variance beyond tolerance");
  }
  // snap sub-rounding values to an exact zero so a collocated site gets a
  // genuinely degenerate draw
  return schur < 1e-12 ? 0.0 : schur;
}

}  // namespace

UngaugedSite make_ungauged(const StationSet& gauged, const std::string& id,
                           const Eigen::Vector2d& coord) {
  UngaugedSite s;
  s.id = id;
  s.coord = coord;
  s.dist_to_gauged = gauged.distances_to(coord);
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(gauged.n());
  for (const auto& st : gauged.sites()) pts.push_back(st.coord);
  s.in_hull = inside_hull(pts, coord);
  return s;
}

CovBlocks partition_cov(double range, const Eigen::MatrixXd& v_star) {
  if (!(range > 0.0)) throw ConfigError("correlation range must be positive");
  const auto n = v_star.rows() - 1;
  if (n < 1 || v_star.cols() != v_star.rows()) {
    throw ContractError("augmented distance matrix must be (n+1) x (n+1)");
  }
  const Eigen::MatrixXd corr = exp_correlation(v_star, range);
  CovBlocks b;
  b.s11 = corr(0, 0);
  b.s12 = corr.block(0, 1, 1, n);
  b.s22 = corr.block(1, 1, n, n);
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!llt_with_jitter(b.s22, llt)) {
    throw NumericalError("gauged correlation block not positive definite");
  }
  b.weights = llt.solve(b.s12.transpose());
  b.schur = b.s11 - b.s12 * b.weights;
  return b;
}

CovBlocks partition_cov(double range, const StationSet& gauged,
                        const UngaugedSite& site) {
  const int n = gauged.n();
  Eigen::MatrixXd v_star(n + 1, n + 1);
  v_star(0, 0) = 0.0;
  v_star.block(0, 1, 1, n) = site.dist_to_gauged.transpose();
  v_star.block(1, 0, n, 1) = site.dist_to_gauged;
  v_star.block(1, 1, n, n) = gauged.distances();
  return partition_cov(range, v_star);
}

double sample_ungauged_state(double alpha_prev_s, const Eigen::VectorXd& alpha_t,
                             const Eigen::VectorXd& alpha_prev, double tau_j2,
                             double sigma2, const CovBlocks& blocks, RngStream& rng) {
  const double mean = alpha_prev_s + blocks.weights.dot(alpha_t - alpha_prev);
  const double var = sigma2 * tau_j2 * clamp_schur(blocks.schur);
  return mean + std::sqrt(var) * rng.normal();
}

double predict_response(long t, double beta_t, double alpha1_s, double alpha2_s,
                        const Eigen::VectorXd& alpha1, const Eigen::VectorXd& alpha2,
                        const Phase& a, double sigma2, const Eigen::VectorXd& y_t,
                        const CovBlocks& blocks, RngStream& rng) {
  const double s1 = harmonic(t, 1, a.a1);
  const double s2 = harmonic(t, 2, a.a2);
  const Eigen::VectorXd resid =
      y_t - (Eigen::VectorXd::Constant(y_t.size(), beta_t) + s1 * alpha1 + s2 * alpha2);
  const double mean =
      beta_t + s1 * alpha1_s + s2 * alpha2_s + blocks.weights.dot(resid);
  const double var = sigma2 * clamp_schur(blocks.schur);
  return mean + std::sqrt(var) * rng.normal();
}

void PredictiveSeries::validate() const {
  if (!std::is_sorted(levels.begin(), levels.end())) {
    throw ContractError("levels must be sorted");
  }
  for (Eigen::Index t = 0; t < median.size(); ++t) {
    for (std::size_t l = 0; l < levels.size(); ++l) {
      if (lower(l, t) > median[t] || median[t] > upper(l, t)) {
        throw ContractError("interval bounds out of order");
      }
    }
  }
}

PredictiveSeries predict_series(const PosteriorDraws& draws, const StationSet& gauged,
                                const UngaugedSite& site,
                                const std::vector<int>& t_index, const ModelConfig& cfg,
                                const std::vector<double>& levels, RngStream& rng) {
  if (draws.snapshots.empty()) {
    throw ContractError("no posterior snapshots available for prediction");
  }
  const int n = gauged.n();
  const int T = static_cast<int>(t_index.size());
  const auto n_draws = static_cast<Eigen::Index>(draws.snapshots.size());

  std::vector<double> lv = levels;
  std::sort(lv.begin(), lv.end());
  for (double l : lv) {
    if (!(l > 0.0 && l < 1.0)) throw ConfigError("nominal levels must be in (0,1)");
  }

  // State-evolution blocks are at the fixed ranges; the response block
  // follows the sampled (or fixed per-week) range.
  const CovBlocks blocks1 = partition_cov(cfg.gamma.lambda1, gauged, site);
  const CovBlocks blocks2 = partition_cov(cfg.gamma.lambda2, gauged, site);

  // Ungauged state start: gauged-site prior marginal (m0/C0 alpha-block
  // averages) kriged against the drawn x0 through the same spatial weights
  // as the increments. Collapses to the plain marginal when the site is far
  // from every gauge and to the gauged value when collocated.
  const double a1_mean = cfg.m0.segment(1, n).mean();
  const double a2_mean = cfg.m0.segment(1 + n, n).mean();
  const double c1_scale = cfg.C0.block(1, 1, n, n).diagonal().mean();
  const double c2_scale = cfg.C0.block(1 + n, 1 + n, n, n).diagonal().mean();
  auto initial_state = [&](const CovBlocks& blocks, const Eigen::VectorXd& alpha0,
                           double mean, double scale, double sigma2,
                           RngStream& r) {
    const double m =
        mean + blocks.weights.dot(alpha0 - Eigen::VectorXd::Constant(n, mean));
    const double var = sigma2 * scale * clamp_schur(blocks.schur);
    return m + std::sqrt(var) * r.normal();
  };

  PredictiveSeries out;
  out.site_id = site.id;
  out.t_index = t_index;
  out.levels = lv;
  out.draws.resize(n_draws, T);

  const bool lambda_fixed = !draws.fixed_lambda_by_time.empty();
  double cur_lambda = -1.0;
  CovBlocks blocks_y;

  for (Eigen::Index d = 0; d < n_draws; ++d) {
    const Snapshot& snap = draws.snapshots[d];
    if (snap.x.cols() != T) {
      throw ContractError("snapshot trajectory length does not match t_index");
    }
    double a1_s = initial_state(blocks1, snap.x0.segment(1, n), a1_mean, c1_scale,
                                snap.sigma2, rng);
    double a2_s = initial_state(blocks2, snap.x0.segment(1 + n, n), a2_mean, c2_scale,
                                snap.sigma2, rng);

    for (int c = 0; c < T; ++c) {
      const double lam = lambda_fixed ? draws.fixed_lambda_by_time[c] : snap.lambda;
      if (lam != cur_lambda) {
        cur_lambda = lam;
        blocks_y = partition_cov(lam, gauged, site);
      }
      const Eigen::VectorXd alpha1 = snap.x.col(c).segment(1, n);
      const Eigen::VectorXd alpha2 = snap.x.col(c).segment(1 + n, n);
      const Eigen::VectorXd alpha1_prev =
          c == 0 ? snap.x0.segment(1, n).eval() : snap.x.col(c - 1).segment(1, n).eval();
      const Eigen::VectorXd alpha2_prev = c == 0
                                              ? snap.x0.segment(1 + n, n).eval()
                                              : snap.x.col(c - 1).segment(1 + n, n).eval();

      a1_s = sample_ungauged_state(a1_s, alpha1, alpha1_prev, cfg.gamma.tau1_2,
                                   snap.sigma2, blocks1, rng);
      a2_s = sample_ungauged_state(a2_s, alpha2, alpha2_prev, cfg.gamma.tau2_2,
                                   snap.sigma2, blocks2, rng);
      out.draws(d, c) =
          predict_response(t_index[c], snap.x(0, c), a1_s, a2_s, alpha1, alpha2,
                           snap.a, snap.sigma2, snap.y.col(c), blocks_y, rng);
    }
  }

  out.median.resize(T);
  out.lower.resize(lv.size(), T);
  out.upper.resize(lv.size(), T);
  std::vector<double> col(n_draws);
  for (int c = 0; c < T; ++c) {
    for (Eigen::Index d = 0; d < n_draws; ++d) col[d] = out.draws(d, c);
    out.median[c] = quantile(col, 0.5);
    for (std::size_t l = 0; l < lv.size(); ++l) {
      out.lower(l, c) = quantile(col, 0.5 * (1.0 - lv[l]));
      out.upper(l, c) = quantile(col, 0.5 * (1.0 + lv[l]));
    }
  }
  return out;
}

CoverageReport coverage(const PredictiveSeries& series, const Eigen::VectorXd& truth,
                        const std::vector<bool>& truth_mask,
                        const std::vector<double>& levels, bool by_week) {
  const int T = static_cast<int>(series.t_index.size());
  if (truth.size() != T || static_cast<int>(truth_mask.size()) != T) {
    throw ContractError("truth series and predictive series are not aligned");
  }
  long evaluable = 0;
  for (int c = 0; c < T; ++c) evaluable += truth_mask[c] ? 1 : 0;
  if (evaluable == 0) throw ConfigError("no evaluable hours for coverage");

  std::vector<int> week(T, -1);
  int n_weeks = 1;
  if (by_week) {
    for (int c = 0; c < T; ++c) {
      week[c] = (series.t_index[c] - series.t_index.front()) / 168;
      n_weeks = std::max(n_weeks, week[c] + 1);
    }
  }

  CoverageReport report;
  for (std::size_t l = 0; l < series.levels.size(); ++l) {
    if (std::find(levels.begin(), levels.end(), series.levels[l]) == levels.end()) {
      continue;
    }
    std::vector<long> inside(by_week ? n_weeks : 1, 0);
    std::vector<long> total(by_week ? n_weeks : 1, 0);
    long inside_all = 0;
    long total_all = 0;
    for (int c = 0; c < T; ++c) {
      if (!truth_mask[c]) continue;
      const bool in =
          truth[c] >= series.lower(l, c) && truth[c] <= series.upper(l, c);
      ++total_all;
      inside_all += in ? 1 : 0;
      if (by_week) {
        ++total[week[c]];
        inside[week[c]] += in ? 1 : 0;
      }
    }
    report.rows.push_back(
        CoverageRow{series.site_id, -1, series.levels[l], inside_all, total_all});
    if (by_week) {
      for (int wk = 0; wk < n_weeks; ++wk) {
        if (total[wk] == 0) continue;
        report.rows.push_back(
            CoverageRow{series.site_id, wk, series.levels[l], inside[wk], total[wk]});
      }
    }
  }
  return report;
}

}  // namespace stdlm
