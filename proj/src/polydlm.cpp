#include "stdlm/polydlm.hpp"

#include <cmath>

namespace stdlm {

void PolyDlmParams::validate() const {
  if (!(sigma_beta2 > 0.0 && sigma_delta2 > 0.0 && sigma_eps2 > 0.0)) {
    throw ConfigError("variance parameters must be strictly positive");
  }
  if (!(lambda > 0.0)) throw ConfigError("range must be strictly positive");
  if (!(d01 >= 0.0)) throw ConfigError("distance must be nonnegative");
}

double PolyDlmParams::rho() const { return std::exp(-d01 / lambda); }

double moment_structure(const PolyDlmParams& p, long t, long s, bool same_site) {
  if (t < 1 || s < 1) throw ConfigError("time indices start at 1");
  if (t != s) {
    return p.sigma_beta2 + static_cast<double>(std::min(t, s)) * p.sigma_delta2;
  }
  const double common = p.sigma_beta2 + static_cast<double>(t) * p.sigma_delta2;
  return same_site ? common + p.sigma_eps2 : common + p.sigma_eps2 * p.rho();
}

double correlation(const PolyDlmParams& p, long t, long s) {
  if (t < 1 || s < 1) throw ConfigError("time indices start at 1");
  if (t == s) {
    const double base = p.sigma_beta2 + static_cast<double>(t) * p.sigma_delta2;
    return (base + p.sigma_eps2 * p.rho()) / (base + p.sigma_eps2);
  }
  const double num = p.sigma_beta2 + static_cast<double>(std::min(t, s)) * p.sigma_delta2;
  const double vt = p.sigma_beta2 + static_cast<double>(t) * p.sigma_delta2 + p.sigma_eps2;
  const double vs = p.sigma_beta2 + static_cast<double>(s) * p.sigma_delta2 + p.sigma_eps2;
  return num / (std::sqrt(vt) * std::sqrt(vs));
}

TheoremOneResult theorem1(const PolyDlmParams& p) {
  p.validate();
  const double b = p.sigma_beta2;
  const double q = p.sigma_delta2;
  const double r = p.sigma_eps2;
  const double rho = p.rho();

  const double p1 = b + q + r;            // Var at t = 1
  const double p2 = b + 2.0 * q + r;      // Var at t = 2
  const double c1 = b + q + r * rho;      // same-time cross-site cov, t = 1
  const double c2 = b + 2.0 * q + r * rho;  // same-time cross-site cov, t = 2
  const double x = b + q;                 // cross-time cov

  TheoremOneResult out{};
  out.var_y01_y11 = (p1 * p1 - c1 * c1) / p1;
  out.var_y02_y12 = (p2 * p2 - c2 * c2) / p2;
  out.delta = p1 * p2 - x * x;
  out.m1 = p2 * (p1 * p1 - c1 * c1) - 2.0 * x * x * (r - r * rho);
  out.m2 = p1 * (p2 * p2 - c2 * c2) - 2.0 * x * x * (r - r * rho);
  out.var_y01_y11_y12 = out.m1 / out.delta;
  out.var_y02_y11_y12 = out.m2 / out.delta;
  return out;
}

TheoremTwoGaps theorem2_gaps(const PolyDlmParams& p) {
  p.validate();
  const double b = p.sigma_beta2;
  const double q = p.sigma_delta2;
  const double r = p.sigma_eps2;
  const double rho = p.rho();
  const double omr = 1.0 - rho;  // both gap families carry (1 - rho)^2
  const double p1 = b + q + r;
  const double p2 = b + 2.0 * q + r;
  const double x = b + q;
  const double delta = p1 * p2 - x * x;

  TheoremTwoGaps out{};
  out.time_gap_t1 = r * r * x * x * omr * omr / (delta * p1);
  out.time_gap_t2 = r * r * x * x * omr * omr / (delta * p2);
  out.space_gap_cond = r * r * q * omr * omr / delta;
  out.space_gap_marg = r * r * q * omr * omr / (p1 * p2);
  out.margin_time = out.time_gap_t1 - out.time_gap_t2;
  out.margin_cond = out.space_gap_cond - out.space_gap_marg;
  return out;
}

PredictiveVarPartials var1_partials(const PolyDlmParams& p) {
  p.validate();
  const double b = p.sigma_beta2;
  const double q = p.sigma_delta2;
  const double r = p.sigma_eps2;
  const double rho = p.rho();
  const double p1 = b + q + r;
  const double c1 = b + q + r * rho;

  PredictiveVarPartials out{};
  out.d_d01 = (2.0 / p.lambda) * rho * r * c1 / p1;
  out.d_lambda = -(2.0 * p.d01 / (p.lambda * p.lambda)) * rho * r * c1 / p1;
  const double omr = 1.0 - rho;
  out.d_sigma_eps2 = omr * (2.0 - omr * r * (r + 2.0 * b + 2.0 * q) / (p1 * p1));
  return out;
}

PredictiveVarPartials var3_partials(const PolyDlmParams& p) {
  p.validate();
  const double b = p.sigma_beta2;
  const double q = p.sigma_delta2;
  const double r = p.sigma_eps2;
  const double rho = p.rho();
  const double c1 = b + 2.0 * q + r;
  const double c2 = b + q;
  const double c3 = q * c1 + r * (q + r);
  const double a = c2 * (q + r) / (r * c1);
  const double delta = (b + q + r) * c1 - c2 * c2;

  PredictiveVarPartials out{};
  out.d_d01 = (2.0 / p.lambda) * rho * r * (a + rho) / (1.0 + a);
  out.d_lambda = -(2.0 * p.d01 / (p.lambda * p.lambda)) * rho * r * (a + rho) / (1.0 + a);
  const double omr = 1.0 - rho;
  out.d_sigma_eps2 = omr * (2.0 - omr * r * (c1 * delta + c2 * c3) / (delta * delta));
  return out;
}

namespace {

double pick(const TheoremOneResult& r, int which) {
  switch (which) {
    case 0: return r.var_y01_y11;
    case 1: return r.var_y02_y12;
    case 2: return r.var_y01_y11_y12;
    default: return r.var_y02_y11_y12;
  }
}

}  // namespace

MonotonicityVerdict corollary1_check(const PolyDlmParams& p, Direction dir,
                                     double rel_step) {
  p.validate();
  PolyDlmParams lo = p;
  PolyDlmParams hi = p;
  switch (dir) {
    case Direction::IncreaseD01: {
      const double h = rel_step * (p.d01 > 0.0 ? p.d01 : 1.0);
      lo.d01 = p.d01;
      hi.d01 = p.d01 + h;
      break;
    }
    case Direction::DecreaseLambda: {
      const double h = rel_step * p.lambda;
      lo.lambda = p.lambda;      // variance should be larger at smaller lambda
      hi.lambda = p.lambda - h;
      break;
    }
    case Direction::IncreaseSigmaEps2: {
      const double h = rel_step * p.sigma_eps2;
      lo.sigma_eps2 = p.sigma_eps2;
      hi.sigma_eps2 = p.sigma_eps2 + h;
      break;
    }
  }
  const TheoremOneResult a = theorem1(lo);
  const TheoremOneResult b = theorem1(hi);
  MonotonicityVerdict v{};
  v.var_y01_y11 = pick(b, 0) >= pick(a, 0);
  v.var_y02_y12 = pick(b, 1) >= pick(a, 1);
  v.var_y01_y11_y12 = pick(b, 2) >= pick(a, 2);
  v.var_y02_y11_y12 = pick(b, 3) >= pick(a, 3);
  return v;
}

double corollary2_threshold(const PolyDlmParams& p) {
  return p.sigma_beta2 * (1.0 + p.sigma_beta2 / p.sigma_delta2);
}

bool corollary2_paradox(const PolyDlmParams& p) {
  p.validate();
  return p.sigma_eps2 > corollary2_threshold(p);
}

}  // namespace stdlm
