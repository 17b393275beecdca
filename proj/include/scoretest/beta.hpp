#pragma once

namespace scoretest {

struct BetaParams {
  double a = 1.0;  // > 0
  double b = 1.0;  // > 0
};

// Regularized incomplete beta I_x(a, b); continued fraction with the usual
// symmetry switch at x > (a+1)/(a+b+2). Absolute error <= 1e-13.
double beta_cdf(double x, const BetaParams& params);

// Upper tail 1 - I_x(a, b), evaluated directly on the complementary fraction
// so extreme tails keep full relative accuracy. Values below 1e-300 clamp;
// *clamped is set when the clamp fires (may be null).
double beta_upper_tail(double x, const BetaParams& params, bool* clamped = nullptr);

// Inverse of beta_cdf in prob: |beta_cdf(result) - prob| <= 1e-12.
double beta_quantile(double prob, const BetaParams& params);

// p-value of an observed statistic B in [0, 1]: 1 - beta_cdf(B).
double beta_pvalue(double B, const BetaParams& params, bool* clamped = nullptr);

double log_beta(double a, double b);

// Regularized lower incomplete gamma P(a, x) (series / continued fraction).
double gamma_p(double a, double x);

double chi_square_cdf(double x, double dof);

}  // namespace scoretest
