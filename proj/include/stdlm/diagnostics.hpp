#pragma once

#include <span>
#include <vector>

namespace stdlm {

struct Diagnostics {
  std::vector<double> acf;   // acf[h], h = 0..max_lag, acf[0] = 1
  std::vector<double> pacf;  // pacf[h], h = 1..max_lag (index 0 unused = 0)
  double q025 = 0.0;
  double q500 = 0.0;
  double q975 = 0.0;
  double acceptance_rate = 0.0;
  bool degenerate = false;   // zero-variance chain
  bool truncated = false;    // max_lag cut down to fit the sample
  int max_lag = 0;
};

// Sample ACF (biased autocovariance ratio), PACF via the Durbin-Levinson
// recursion, and the 2.5/50/97.5 percent quantiles of the chain. A constant
// chain is reported with acf = 1 everywhere and the degenerate flag set.
Diagnostics diagnostics(std::span<const double> chain, int max_lag,
                        double acceptance_rate = 0.0);

}  // namespace stdlm
