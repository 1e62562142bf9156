#include "pvb/quantile.hpp"

#include "pvb/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace pvb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Acklam's rational approximation; relative error ~1e-9 before refinement.
double acklam(double p)
{
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01, -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double low = 0.02425;
    if (p < low) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - low) {
        double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Lentz evaluation of the incomplete beta continued fraction.
double beta_fraction(double a, double b, double x)
{
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

double log_beta(double a, double b)
{
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_density(double a, double b, double x)
{
    return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b));
}

// Solves I_x(a, b) = target for x in (0, 1) by safeguarded Newton.
double inverse_incomplete_beta(double a, double b, double target)
{
    if (target <= 0.0) return 0.0;
    if (target >= 1.0) return 1.0;
    double lo = 0.0;
    double hi = 1.0;
    double x = 0.5;
    // Rough start from the small-x expansion I_x ~ x^a / (a B(a,b)).
    const double guess = std::exp((std::log(target) + std::log(a) + log_beta(a, b)) / a);
    if (guess > 0.0 && guess < 1.0) x = guess;
    for (int it = 0; it < 400; ++it) {
        const double f = incomplete_beta(a, b, x) - target;
        if (f == 0.0) return x;
        if (f < 0.0) lo = x; else hi = x;
        const double dens = beta_density(a, b, x);
        double next = x - f / dens;
        if (!(next > lo && next < hi) || !std::isfinite(next)) {
            next = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
            if (hi - lo < 0.25 * hi && lo > 0.0) next = 0.5 * (lo + hi);
        }
        if (std::fabs(next - x) <= 1e-16 * std::fabs(x)) return next;
        x = next;
    }
    return x;
}

}  // namespace

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw Error(ErrorKind::DomainError, "normal_quantile: p must lie in (0, 1), got " + std::to_string(p));
    double x = acklam(p);
    // Halley refinement against erfc, from whichever tail is more accurate.
    for (int i = 0; i < 2; ++i) {
        const double e = p < 0.5 ? 0.5 * std::erfc(-x / std::numbers::sqrt2) - p
                                 : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0 && b > 0.0)) throw Error(ErrorKind::DomainError, "incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorKind::DomainError, "incomplete_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
    return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double t_cdf(double t, double df)
{
    if (!(df > 0.0)) throw Error(ErrorKind::DomainError, "t_cdf: df must be positive");
    if (std::isnan(t)) throw Error(ErrorKind::DomainError, "t_cdf: t is NaN");
    if (df == kInf) return normal_cdf(t);
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    if (df > 4e5) {
        // Large-df expansion; the beta route loses digits in the log-gamma terms here.
        const double v = 1.0 / (4.0 * df);
        return normal_cdf(t * (1.0 - v) / std::sqrt(1.0 + t * t * 2.0 * v));
    }
    const double t2 = t * t;
    // Pick the representation whose argument is small to keep precision.
    if (t2 < df) {
        const double central = incomplete_beta(0.5, 0.5 * df, t2 / (df + t2));  // P(|T| < |t|)
        return t >= 0.0 ? 0.5 + 0.5 * central : 0.5 - 0.5 * central;
    }
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t2));  // P(T > |t|)
    return t >= 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, double df)
{
    if (!(p > 0.0 && p < 1.0))
        throw Error(ErrorKind::DomainError, "t_quantile: p must lie in (0, 1), got " + std::to_string(p));
    if (!(df > 0.0)) throw Error(ErrorKind::DomainError, "t_quantile: df must be positive");
    if (df == kInf) return normal_quantile(p);
    if (p == 0.5) return 0.0;
    const double sign = p > 0.5 ? 1.0 : -1.0;
    const double upper = p > 0.5 ? 1.0 - p : p;  // one-sided tail mass beyond |t|
    if (upper > 0.25) {
        // Central mass 1 - 2*upper = I_y(1/2, df/2) with y = t^2 / (df + t^2).
        const double y = inverse_incomplete_beta(0.5, 0.5 * df, 1.0 - 2.0 * upper);
        return sign * std::sqrt(df * y / (1.0 - y));
    }
    // Tail mass 2*upper = I_x(df/2, 1/2) with x = df / (df + t^2).
    const double x = inverse_incomplete_beta(0.5 * df, 0.5, 2.0 * upper);
    return sign * std::sqrt(df * (1.0 - x) / x);
}

}  // namespace pvb
