#include "stdlm/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "stdlm/errors.hpp"

namespace stdlm {

bool llt_with_jitter(const Eigen::MatrixXd& m_in, Eigen::LLT<Eigen::MatrixXd>& llt) {
  Eigen::MatrixXd m = 0.5 * (m_in + m_in.transpose());
  llt.compute(m);
  if (llt.info() == Eigen::Success) return true;
  const double jitter = 1e-10 * m.diagonal().mean();
  if (!(jitter > 0.0) || !std::isfinite(jitter)) return false;
  m.diagonal().array() += jitter;
  llt.compute(m);
  return llt.info() == Eigen::Success;
}

Eigen::MatrixXd sampling_factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (llt_with_jitter(cov, llt)) {
    return llt.matrixL();
  }
  Eigen::MatrixXd m = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed while factorizing a covariance");
  }
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           RngStream& rng) {
  return mean + sampling_factor(cov) * rng.normal_vector(mean.size());
}

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw ContractError("quantile of an empty sample");
  p = std::clamp(p, 0.0, 1.0);
  std::sort(x.begin(), x.end());
  const double h = p * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  const double w = h - static_cast<double>(lo);
  return (1.0 - w) * x[lo] + w * x[hi];
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

}  // namespace stdlm
