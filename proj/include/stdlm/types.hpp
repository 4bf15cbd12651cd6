#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stdlm/errors.hpp"

namespace stdlm {

enum class DistanceMetric { Planar, GreatCircle };

struct Station {
  std::string id;
  Eigen::Vector2d coord;  // (x, y) in km, or (lat, lon) in degrees
};

// Monitoring sites together with their pairwise distance matrix in km.
// The metric used to build the matrix is recorded so that downstream
// artifacts can report it.
class StationSet {
 public:
  // coords are planar km; distances are Euclidean.
  static StationSet from_planar(std::vector<Station> sites);
  // coords are (lat, lon) degrees; distances are great-circle km.
  static StationSet from_latlon(std::vector<Station> sites);

  int n() const { return static_cast<int>(sites_.size()); }
  const Eigen::MatrixXd& distances() const { return dist_; }
  DistanceMetric metric() const { return metric_; }
  const std::vector<Station>& sites() const { return sites_; }
  const Station& site(int i) const { return sites_.at(i); }
  // -1 when the id is unknown.
  int find(const std::string& id) const;

  // Distance from an arbitrary point to every site, using this set's metric.
  Eigen::VectorXd distances_to(const Eigen::Vector2d& coord) const;

  // Subset preserving the metric; order follows `keep`.
  StationSet subset(const std::vector<int>& keep) const;

 private:
  StationSet(std::vector<Station> sites, DistanceMetric metric);
  std::vector<Station> sites_;
  Eigen::MatrixXd dist_;
  DistanceMetric metric_;
};

// n x T panel of square-root concentrations with a missing-value mask.
// mask(i, t) is true where y(i, t) was actually observed; after imputation
// the unobserved cells hold draws but the mask keeps recording provenance.
struct ObservationPanel {
  Eigen::MatrixXd y;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
  std::vector<int> t_index;  // absolute hour per column, >= 1, increasing

  int n() const { return static_cast<int>(y.rows()); }
  int T() const { return static_cast<int>(y.cols()); }
  bool column_fully_missing(int col) const { return !mask.col(col).any(); }
  // Throws ContractError on inconsistent dimensions or non-finite observed
  // values.
  void validate() const;
  // Columns [first, first + count) as a panel, keeping absolute hours.
  ObservationPanel slice(int first, int count) const;
};

// Fixed state-evolution noise parameters (tau_y^2, tau_1^2, lambda_1,
// tau_2^2, lambda_2). All strictly positive.
struct Gamma {
  double tau_y2;
  double tau1_2;
  double lambda1;
  double tau2_2;
  double lambda2;
  void validate() const;
};

struct InverseGammaPrior {
  double shape;
  double scale;
};

struct PhasePrior {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
};

// Phase parameters mixing sine into the 24h / 12h harmonics.
struct Phase {
  double a1;
  double a2;
};

struct ModelConfig {
  Gamma gamma;
  InverseGammaPrior lambda_prior;   // range parameter hyperprior
  InverseGammaPrior sigma2_prior;   // variance hyperprior
  PhasePrior a_prior;
  Eigen::VectorXd m0;               // initial state mean, length 2n+1
  Eigen::MatrixXd C0;               // initial covariance scale (x sigma2)
  double mh_tau2 = 0.1;             // lognormal proposal variance
  std::uint64_t seed = 1;
  int iterations = 2000;
  int burn_in = 1000;
  int thin = 10;                    // cadence of state snapshots

  // Throws ConfigError unless everything is consistent for n sites.
  void validate(int n) const;
};

// State vector layout used everywhere: (beta, alpha_1 block, alpha_2 block).
inline int state_dim(int n) { return 2 * n + 1; }

}  // namespace stdlm
