#pragma once

namespace pvb {

double normal_cdf(double x);

/// Inverse standard normal CDF. DomainError unless 0 < p < 1.
double normal_quantile(double p);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Student t CDF; df may be +inf.
double t_cdf(double t, double df);

/// Inverse Student t CDF; df = +inf gives the normal quantile.
double t_quantile(double p, double df);

}  // namespace pvb
