#include "scoretest/numeric_ref.hpp"

#include "scoretest/errors.hpp"

#include <cmath>

namespace scoretest::ref {

namespace {

double simpson_segment(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_recurse(double (*f)(double, const void*), const void* ctx, double a,
                       double fa, double b, double fb, double m, double fm, double whole,
                       double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm, ctx);
  const double frm = f(rm, ctx);
  const double left = simpson_segment(a, fa, m, fm, flm);
  const double right = simpson_segment(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_recurse(f, ctx, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, ctx, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

struct TCtx {
  double dof;
  double log_norm;
};

double t_density(double t, const void* ctx) {
  const TCtx& c = *static_cast<const TCtx*>(ctx);
  return std::exp(c.log_norm - 0.5 * (c.dof + 1.0) * std::log1p(t * t / c.dof));
}

struct FCtx {
  double d1;
  double d2;
  double log_norm;
};

// F density after the substitution x = u^2; the extra 2u factor keeps the
// integrand bounded at the origin for d1 >= 1.
double f_density_u(double u, const void* ctx) {
  const FCtx& c = *static_cast<const FCtx*>(ctx);
  if (u <= 0.0) return 0.0;
  const double x = u * u;
  const double logpdf = c.log_norm + (0.5 * c.d1 - 1.0) * std::log(x) -
                        0.5 * (c.d1 + c.d2) * std::log1p(c.d1 * x / c.d2);
  return 2.0 * u * std::exp(logpdf);
}

}  // namespace

double adaptive_simpson(double (*f)(double, const void*), const void* ctx, double a,
                        double b, double tol) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a, ctx);
  const double fb = f(b, ctx);
  const double fm = f(m, ctx);
  const double whole = simpson_segment(a, fa, b, fb, fm);
  return simpson_recurse(f, ctx, a, fa, b, fb, m, fm, whole, tol, 40);
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw DomainError("t distribution needs dof > 0");
  TCtx ctx{dof, std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                    0.5 * std::log(dof * M_PI)};
  const double tail = adaptive_simpson(&t_density, &ctx, 0.0, std::abs(t), 5e-14);
  return t >= 0.0 ? 0.5 + tail : 0.5 - tail;
}

double student_t_quantile(double prob, double dof) {
  if (!(prob > 0.5 && prob < 1.0))
    throw DomainError("t quantile expects prob in (0.5, 1)");
  double hi = 1.0;
  while (student_t_cdf(hi, dof) < prob) {
    hi *= 2.0;
    if (hi > 1e12) throw DomainError("t quantile bracket failed");
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-10 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, dof) < prob)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double f_cdf(double x, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw DomainError("F distribution needs positive dof");
  if (d1 < 1.0) throw DomainError("quadrature F cdf supports d1 >= 1");
  if (x <= 0.0) return 0.0;
  FCtx ctx{d1, d2,
           0.5 * d1 * std::log(d1 / d2) -
               (std::lgamma(0.5 * d1) + std::lgamma(0.5 * d2) - std::lgamma(0.5 * (d1 + d2)))};
  return adaptive_simpson(&f_density_u, &ctx, 0.0, std::sqrt(x), 5e-14);
}

double f_quantile(double prob, double d1, double d2) {
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("F quantile expects prob in (0, 1)");
  double hi = 1.0;
  while (f_cdf(hi, d1, d2) < prob) {
    hi *= 2.0;
    if (hi > 1e12) throw DomainError("F quantile bracket failed");
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-11 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f_cdf(mid, d1, d2) < prob)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace scoretest::ref
