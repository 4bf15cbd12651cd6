#include "stdlm/diagnostics.hpp"

#include <cmath>

#include "stdlm/errors.hpp"
#include "stdlm/linalg.hpp"

namespace stdlm {

Diagnostics diagnostics(std::span<const double> chain, int max_lag,
                        double acceptance_rate) {
  const auto n = static_cast<long>(chain.size());
  if (n < 2) throw ContractError("diagnostics needs at least two draws");
  if (max_lag < 1) throw ContractError("max_lag must be >= 1");

  Diagnostics d;
  d.acceptance_rate = acceptance_rate;
  if (max_lag > n - 1) {
    max_lag = static_cast<int>(n - 1);
    d.truncated = true;
  }
  d.max_lag = max_lag;

  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);

  std::vector<double> autocov(max_lag + 1, 0.0);
  for (int h = 0; h <= max_lag; ++h) {
    double s = 0.0;
    for (long i = 0; i + h < n; ++i) {
      s += (chain[i] - mean) * (chain[i + h] - mean);
    }
    autocov[h] = s / static_cast<double>(n);
  }

  d.acf.assign(max_lag + 1, 1.0);
  d.pacf.assign(max_lag + 1, 0.0);
  if (!(autocov[0] > 0.0)) {
    d.degenerate = true;
    d.pacf[1] = 1.0;
  } else {
    for (int h = 1; h <= max_lag; ++h) d.acf[h] = autocov[h] / autocov[0];

    // Durbin-Levinson on the ACF.
    std::vector<double> phi(max_lag + 1, 0.0), prev(max_lag + 1, 0.0);
    double v = 1.0;
    for (int k = 1; k <= max_lag; ++k) {
      double num = d.acf[k];
      for (int j = 1; j < k; ++j) num -= prev[j] * d.acf[k - j];
      const double pk = v > 0.0 ? num / v : 0.0;
      phi = prev;
      phi[k] = pk;
      for (int j = 1; j < k; ++j) phi[j] = prev[j] - pk * prev[k - j];
      v *= (1.0 - pk * pk);
      prev = phi;
      d.pacf[k] = pk;
    }
  }

  std::vector<double> copy(chain.begin(), chain.end());
  d.q025 = quantile(copy, 0.025);
  d.q500 = quantile(copy, 0.5);
  d.q975 = quantile(copy, 0.975);
  return d;
}

}  // namespace stdlm
