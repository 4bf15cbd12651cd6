#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stdlm/gibbs.hpp"
#include "stdlm/rng.hpp"
#include "stdlm/types.hpp"

namespace stdlm {

struct UngaugedSite {
  std::string id;
  Eigen::Vector2d coord;
  Eigen::VectorXd dist_to_gauged;  // km, same metric as the station set
  bool in_hull = false;            // inside the gauged sites' convex hull
};

// Builds the ungauged-site record, including the hull membership flag.
UngaugedSite make_ungauged(const StationSet& gauged, const std::string& id,
                           const Eigen::Vector2d& coord);

// Blocks of the exponential correlation of the augmented (1 + n)-site system,
// with the ungauged site first. The Cholesky of the gauged block and the
// kriging weights are precomputed so per-draw work is a dot product.
struct CovBlocks {
  double s11;                // scalar block (unit for zero self-distance)
  Eigen::RowVectorXd s12;    // 1 x n cross block
  Eigen::MatrixXd s22;       // n x n gauged block
  Eigen::VectorXd weights;   // s22^{-1} s21
  double schur;              // s11 - s12 s22^{-1} s21, >= 0 up to rounding
};
CovBlocks partition_cov(double range, const Eigen::MatrixXd& v_star);
// Convenience: builds the augmented distance matrix from the site record.
CovBlocks partition_cov(double range, const StationSet& gauged,
                        const UngaugedSite& site);

// One draw of the ungauged state increment conditional (harmonic index j is
// fixed by which tau/blocks the caller passes):
//   mean  alpha_prev_s + w'(alpha_t - alpha_prev)
//   var   sigma2 tau_j2 (schur clamped at >= 0, tolerance 1e-12).
double sample_ungauged_state(double alpha_prev_s, const Eigen::VectorXd& alpha_t,
                             const Eigen::VectorXd& alpha_prev, double tau_j2,
                             double sigma2, const CovBlocks& blocks, RngStream& rng);

// One draw of the response at the ungauged site given the gauged responses
// and the state slice at hour t.
double predict_response(long t, double beta_t, double alpha1_s, double alpha2_s,
                        const Eigen::VectorXd& alpha1, const Eigen::VectorXd& alpha2,
                        const Phase& a, double sigma2, const Eigen::VectorXd& y_t,
                        const CovBlocks& blocks, RngStream& rng);

struct PredictiveSeries {
  std::string site_id;
  std::vector<int> t_index;
  Eigen::MatrixXd draws;          // n_draws x T, one row per posterior draw
  std::vector<double> levels;     // sorted nominal levels
  Eigen::VectorXd median;         // per hour
  Eigen::MatrixXd lower, upper;   // levels x T central interval bounds
  void validate() const;
};

// Composition sampling: one predictive trajectory per retained posterior
// snapshot, then equal-tailed quantile summaries at the given levels.
PredictiveSeries predict_series(const PosteriorDraws& draws, const StationSet& gauged,
                                const UngaugedSite& site,
                                const std::vector<int>& t_index, const ModelConfig& cfg,
                                const std::vector<double>& levels, RngStream& rng);

struct CoverageRow {
  std::string site;
  int week;      // -1 for the whole span
  double level;
  long inside;
  long evaluated;
  double rate() const {
    return evaluated == 0 ? 0.0 : static_cast<double>(inside) / evaluated;
  }
};

struct CoverageReport {
  std::vector<CoverageRow> rows;
};

// Fraction of observed truth values inside the central interval of each
// nominal level; optionally sliced by week (168 hours from the first hour of
// the series). Throws when no hour is evaluable.
CoverageReport coverage(const PredictiveSeries& series, const Eigen::VectorXd& truth,
                        const std::vector<bool>& truth_mask,
                        const std::vector<double>& levels, bool by_week);

}  // namespace stdlm
