#pragma once

namespace scoretest::ref {

// Reference distribution functions computed by adaptive quadrature and
// bisection. They share no code with the continued-fraction beta machinery,
// so the verification suite can cross-check one route against the other.

double adaptive_simpson(double (*f)(double, const void*), const void* ctx, double a,
                        double b, double tol);

double student_t_cdf(double t, double dof);
double student_t_quantile(double prob, double dof);  // prob in (0.5, 1)

double f_cdf(double x, double d1, double d2);
double f_quantile(double prob, double d1, double d2);  // prob in (0, 1)

}  // namespace scoretest::ref
