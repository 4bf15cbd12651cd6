#pragma once

#include "stdlm/errors.hpp"

namespace stdlm {

// Parameters of the two-site first-order polynomial model: a shared random
// walk beta_t observed at an ungauged site s0 and a gauged site s1 under
// exponentially correlated noise.
struct PolyDlmParams {
  double sigma_beta2;   // prior variance of beta_0
  double sigma_delta2;  // random-walk increment variance
  double sigma_eps2;    // observation noise variance
  double lambda;        // correlation range, km
  double d01;           // distance between the two sites, km

  void validate() const;
  // exp(-d01 / lambda)
  double rho() const;
};

// Marginal moments of y_it = beta_0 + sum delta + eps:
//   Var(y_it)          = sigma_beta2 + t sigma_delta2 + sigma_eps2
//   Cov(y_it, y_jt)    = sigma_beta2 + t sigma_delta2 + sigma_eps2 e^{-d/l}
//   Cov(y_it, y_js)    = sigma_beta2 + min(t,s) sigma_delta2     (s != t)
double moment_structure(const PolyDlmParams& p, long t, long s, bool same_site);

// Correlation of y_it with y_js; the same-time cross-site case for t == s.
double correlation(const PolyDlmParams& p, long t, long s);

// The four predictive conditional variances at the ungauged site, with the
// shared denominator Delta and numerators M1, M2.
struct TheoremOneResult {
  double var_y01_y11;       // Var(y_01 | y_11)
  double var_y02_y12;       // Var(y_02 | y_12)
  double var_y01_y11_y12;   // Var(y_01 | y_11, y_12)
  double var_y02_y11_y12;   // Var(y_02 | y_11, y_12)
  double delta;
  double m1;
  double m2;
};
TheoremOneResult theorem1(const PolyDlmParams& p);

// Closed-form differences between the predictive variances. All are
// nonnegative for valid parameters.
struct TheoremTwoGaps {
  double time_gap_t1;    // Var(y01|y11)  - Var(y01|y11,y12)
  double time_gap_t2;    // Var(y02|y12)  - Var(y02|y11,y12)
  double space_gap_cond; // Var(y02|y11,y12) - Var(y01|y11,y12)
  double space_gap_marg; // Var(y02|y12)  - Var(y01|y11)
  double margin_time;    // time_gap_t1 - time_gap_t2
  double margin_cond;    // space_gap_cond - space_gap_marg
};
TheoremTwoGaps theorem2_gaps(const PolyDlmParams& p);

// Closed-form partial derivatives of Var(y01|y11) and Var(y01|y11,y12) with
// respect to d01, lambda and sigma_eps2.
struct PredictiveVarPartials {
  double d_d01;
  double d_lambda;
  double d_sigma_eps2;
};
PredictiveVarPartials var1_partials(const PolyDlmParams& p);  // Var(y01|y11)
PredictiveVarPartials var3_partials(const PolyDlmParams& p);  // Var(y01|y11,y12)

enum class Direction { IncreaseD01, DecreaseLambda, IncreaseSigmaEps2 };

// Checks, by evaluating theorem1 at nudged parameters, that all four
// predictive variances move up in the given direction. rel_step is the
// relative perturbation size.
struct MonotonicityVerdict {
  bool var_y01_y11;
  bool var_y02_y12;
  bool var_y01_y11_y12;
  bool var_y02_y11_y12;
  bool all() const {
    return var_y01_y11 && var_y02_y12 && var_y01_y11_y12 && var_y02_y11_y12;
  }
};
MonotonicityVerdict corollary1_check(const PolyDlmParams& p, Direction dir,
                                     double rel_step = 1e-6);

// sigma_beta2 (1 + sigma_beta2 / sigma_delta2): fitting only the second time
// point beats fitting both exactly when sigma_eps2 exceeds this.
double corollary2_threshold(const PolyDlmParams& p);
bool corollary2_paradox(const PolyDlmParams& p);

}  // namespace stdlm
