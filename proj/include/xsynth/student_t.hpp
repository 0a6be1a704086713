#ifndef XSYNTH_STUDENT_T_HPP
#define XSYNTH_STUDENT_T_HPP

#include <cmath>
#include <limits>
#include <stdexcept>

namespace xsynth {

namespace detail {

/// Continued fraction for the regularized incomplete beta function,
/// evaluated with the modified Lentz scheme. Converges quickly for
/// x < (a+1)/(a+b+2); callers apply the symmetry otherwise.
inline double ibeta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        double m2 = 2.0 * m;
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
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

} // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double ibeta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("ibeta: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b)
                    + a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::ibeta_cf(a, b, x) / a;
    return 1.0 - front * detail::ibeta_cf(b, a, 1.0 - x) / b;
}

/// CDF of Student's t with `df` degrees of freedom.
inline double t_cdf(double x, int df) {
    if (df < 1) throw std::invalid_argument("t_cdf: df must be >= 1");
    if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
    if (x == 0.0) return 0.5;
    if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
    double nu = static_cast<double>(df);
    double tail = 0.5 * ibeta(0.5 * nu, 0.5, nu / (nu + x * x));
    return x > 0.0 ? 1.0 - tail : tail;
}

/// Quantile of Student's t: the x with t_cdf(x, df) = p, by bracketed
/// bisection on the monotone CDF.
inline double t_quantile(double p, int df) {
    if (df < 1) throw std::invalid_argument("t_quantile: df must be >= 1");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("t_quantile: p must lie in (0,1)");
    if (p == 0.5) return 0.0;
    bool upper = p > 0.5;
    double target = upper ? p : 1.0 - p;
    double hi = 1.0;
    while (t_cdf(hi, df) < target && hi < 1e300) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (t_cdf(mid, df) < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-15 * (1.0 + hi)) break;
    }
    double q = 0.5 * (lo + hi);
    return upper ? q : -q;
}

} // namespace xsynth

#endif
