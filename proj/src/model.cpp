#include "stdlm/model.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace stdlm {

namespace {

constexpr double kEarthRadiusKm = 6371.0;

double great_circle_km(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const double deg = std::numbers::pi / 180.0;
  const double lat1 = a[0] * deg, lon1 = a[1] * deg;
  const double lat2 = b[0] * deg, lon2 = b[1] * deg;
  const double sdlat = std::sin(0.5 * (lat2 - lat1));
  const double sdlon = std::sin(0.5 * (lon2 - lon1));
  const double h = sdlat * sdlat + std::cos(lat1) * std::cos(lat2) * sdlon * sdlon;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

Eigen::MatrixXd pairwise(const std::vector<Station>& sites, DistanceMetric metric) {
  const int n = static_cast<int>(sites.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dij = metric == DistanceMetric::Planar
                             ? (sites[i].coord - sites[j].coord).norm()
                             : great_circle_km(sites[i].coord, sites[j].coord);
      d(i, j) = dij;
      d(j, i) = dij;
    }
  }
  return d;
}

// cos/sin of m*pi/12 with exact values on the axes, m in [0, 24).
void unit_circle(int m, double& c, double& s) {
  switch (m) {
    case 0:  c = 1.0;  s = 0.0;  return;
    case 6:  c = 0.0;  s = 1.0;  return;
    case 12: c = -1.0; s = 0.0;  return;
    case 18: c = 0.0;  s = -1.0; return;
    default: {
      const double arg = static_cast<double>(m) * std::numbers::pi / 12.0;
      c = std::cos(arg);
      s = std::sin(arg);
    }
  }
}

int reduced_angle(long t, int j) {
  long m = (t * j) % 24;
  if (m < 0) m += 24;
  return static_cast<int>(m);
}

}  // namespace

StationSet::StationSet(std::vector<Station> sites, DistanceMetric metric)
    : sites_(std::move(sites)), metric_(metric) {
  std::set<std::string> ids;
  for (const auto& s : sites_) {
    if (!ids.insert(s.id).second) {
      throw ConfigError("duplicate site id: " + s.id);
    }
  }
  dist_ = pairwise(sites_, metric_);
  for (int i = 0; i < n(); ++i) {
    for (int j = i + 1; j < n(); ++j) {
      if (!(dist_(i, j) > 0.0)) {
        throw ConfigError("coincident sites: " + sites_[i].id + ", " + sites_[j].id);
      }
    }
  }
}

StationSet StationSet::from_planar(std::vector<Station> sites) {
  return StationSet(std::move(sites), DistanceMetric::Planar);
}

StationSet StationSet::from_latlon(std::vector<Station> sites) {
  return StationSet(std::move(sites), DistanceMetric::GreatCircle);
}

int StationSet::find(const std::string& id) const {
  for (int i = 0; i < n(); ++i) {
    if (sites_[i].id == id) return i;
  }
  return -1;
}

Eigen::VectorXd StationSet::distances_to(const Eigen::Vector2d& coord) const {
  Eigen::VectorXd d(n());
  for (int i = 0; i < n(); ++i) {
    d[i] = metric_ == DistanceMetric::Planar
               ? (sites_[i].coord - coord).norm()
               : great_circle_km(sites_[i].coord, coord);
  }
  return d;
}

StationSet StationSet::subset(const std::vector<int>& keep) const {
  std::vector<Station> s;
  s.reserve(keep.size());
  for (int i : keep) s.push_back(sites_.at(i));
  return StationSet(std::move(s), metric_);
}

void ObservationPanel::validate() const {
  if (y.rows() != mask.rows() || y.cols() != mask.cols()) {
    throw ContractError("panel mask dimensions do not match y");
  }
  if (static_cast<int>(t_index.size()) != T()) {
    throw ContractError("panel t_index length does not match column count");
  }
  for (int c = 0; c < T(); ++c) {
    if (t_index[c] < 1 || (c > 0 && t_index[c] <= t_index[c - 1])) {
      throw ContractError("panel t_index must be >= 1 and strictly increasing");
    }
    for (int i = 0; i < n(); ++i) {
      if (mask(i, c) && !std::isfinite(y(i, c))) {
        throw ContractError("observed value is not finite at site " +
                            std::to_string(i) + ", column " + std::to_string(c));
      }
    }
  }
}

ObservationPanel ObservationPanel::slice(int first, int count) const {
  ObservationPanel out;
  out.y = y.middleCols(first, count);
  out.mask = mask.middleCols(first, count);
  out.t_index.assign(t_index.begin() + first, t_index.begin() + first + count);
  return out;
}

void Gamma::validate() const {
  if (!(tau_y2 > 0.0 && tau1_2 > 0.0 && tau2_2 > 0.0)) {
    throw ConfigError("tau parameters must be strictly positive");
  }
  if (!(lambda1 > 0.0 && lambda2 > 0.0)) {
    throw ConfigError("range parameters must be strictly positive");
  }
}

void ModelConfig::validate(int n) const {
  gamma.validate();
  if (!(lambda_prior.shape > 0.0 && lambda_prior.scale > 0.0) ||
      !(sigma2_prior.shape > 0.0 && sigma2_prior.scale > 0.0)) {
    throw ConfigError("hyperprior parameters must be strictly positive");
  }
  if (!(mh_tau2 > 0.0)) throw ConfigError("mh tuning variance must be positive");
  if (iterations <= 0 || burn_in < 0 || burn_in >= iterations) {
    throw ConfigError("need 0 <= burn_in < iterations");
  }
  if (thin <= 0) throw ConfigError("thin must be positive");
  const int dim = state_dim(n);
  if (m0.size() != dim || C0.rows() != dim || C0.cols() != dim) {
    throw ConfigError("initial state dimensions do not match site count");
  }
  if (!C0.isApprox(C0.transpose(), 1e-12)) {
    throw ConfigError("C0 must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(C0);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("C0 must be positive definite");
  }
  Eigen::LLT<Eigen::MatrixXd> llt_a(a_prior.cov);
  if (llt_a.info() != Eigen::Success) {
    throw ConfigError("phase prior covariance must be positive definite");
  }
}

double harmonic_cos(long t, int j) {
  double c, s;
  unit_circle(reduced_angle(t, j), c, s);
  return c;
}

double harmonic_sin(long t, int j) {
  double c, s;
  unit_circle(reduced_angle(t, j), c, s);
  return s;
}

double harmonic(long t, int j, double a_j) {
  double c, s;
  unit_circle(reduced_angle(t, j), c, s);
  return c + a_j * s;
}

Eigen::MatrixXd design_matrix(long t, int n, const Phase& a) {
  const double s1 = harmonic(t, 1, a.a1);
  const double s2 = harmonic(t, 2, a.a2);
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, state_dim(n));
  for (int i = 0; i < n; ++i) {
    f(i, 0) = 1.0;
    f(i, 1 + i) = s1;
    f(i, 1 + n + i) = s2;
  }
  return f;
}

Eigen::VectorXd design_apply(long t, int n, const Phase& a, const Eigen::VectorXd& x) {
  const double s1 = harmonic(t, 1, a.a1);
  const double s2 = harmonic(t, 2, a.a2);
  return Eigen::VectorXd::Constant(n, x[0]) + s1 * x.segment(1, n) +
         s2 * x.segment(1 + n, n);
}

Eigen::MatrixXd design_left(long t, int n, const Phase& a, const Eigen::MatrixXd& m) {
  const double s1 = harmonic(t, 1, a.a1);
  const double s2 = harmonic(t, 2, a.a2);
  Eigen::MatrixXd out = s1 * m.middleCols(1, n) + s2 * m.middleCols(1 + n, n);
  out.colwise() += m.col(0);
  return out;
}

Eigen::MatrixXd design_sandwich(long t, int n, const Phase& a, const Eigen::MatrixXd& m) {
  const double s1 = harmonic(t, 1, a.a1);
  const double s2 = harmonic(t, 2, a.a2);
  const Eigen::MatrixXd mf = design_left(t, n, a, m);  // (2n+1) x n
  Eigen::MatrixXd out = s1 * mf.middleRows(1, n) + s2 * mf.middleRows(1 + n, n);
  out.rowwise() += mf.row(0);
  return out;
}

Eigen::MatrixXd exp_correlation(const Eigen::MatrixXd& v, double range) {
  if (!(range > 0.0)) throw ConfigError("correlation range must be positive");
  // scalar std::exp so that huge distances underflow to an exact zero
  return v.unaryExpr([range](double d) { return std::exp(-d / range); });
}

Eigen::MatrixXd state_noise_cov(const Gamma& gamma, const Eigen::MatrixXd& v) {
  gamma.validate();
  const int n = static_cast<int>(v.rows());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(state_dim(n), state_dim(n));
  w(0, 0) = gamma.tau_y2;
  w.block(1, 1, n, n) = gamma.tau1_2 * exp_correlation(v, gamma.lambda1);
  w.block(1 + n, 1 + n, n, n) = gamma.tau2_2 * exp_correlation(v, gamma.lambda2);
  return w;
}

Gamma scale_gamma_for_span(const Gamma& gamma, int t_weeks) {
  if (t_weeks < 1) throw ConfigError("t_weeks must be >= 1");
  Gamma out = gamma;
  out.tau_y2 /= t_weeks;
  out.tau1_2 /= t_weeks;
  out.tau2_2 /= t_weeks;
  return out;
}

}  // namespace stdlm
