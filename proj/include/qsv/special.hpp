#pragma once

#include <cmath>

#include "qsv/errors.hpp"

namespace qsv::special {

/// Natural log of the gamma function for x > 0. Lanczos approximation,
/// relative accuracy around 1e-15 over the positive axis.
double log_gamma(double x);

/// Regularized lower incomplete gamma function P(a, x) for a > 0, x >= 0.
/// Series expansion for x < a + 1, Lentz continued fraction otherwise;
/// both iterated to relative 1e-14.
double regularized_gamma_p(double a, double x);

/// Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);

/// Quantile of the chi-squared distribution with `dof` degrees of freedom:
/// the x with P(dof/2, x/2) = probability. Bracketed bisection.
double chi_squared_quantile(double probability, double dof);

/// Final bisection bracket: f changes sign between lo and hi and
/// hi - lo <= tolerance.
struct Bracket {
    double lo;
    double hi;
    double midpoint() const { return 0.5 * (lo + hi); }
};

/// Bisect f over [lo, hi] given precomputed endpoint values of opposite sign
/// (zero counts as either sign). Narrows until the bracket width falls below
/// rel_tol * max(1, |lo|, |hi|). Callers pick the bracket side whose f-sign
/// they need to guarantee.
template <typename F>
Bracket bisect(F&& f, double lo, double hi, double f_lo, double f_hi,
               double rel_tol, int max_iter = 200) {
    if (!(lo <= hi)) throw numerical_error("bisect: bracket endpoints out of order");
    if (f_lo == 0.0) return {lo, lo};
    if (f_hi == 0.0) return {hi, hi};
    if ((f_lo > 0.0) == (f_hi > 0.0))
        throw numerical_error("bisect: endpoints do not bracket a sign change");
    const double scale = std::max({1.0, std::fabs(lo), std::fabs(hi)});
    for (int i = 0; i < max_iter && hi - lo > rel_tol * scale; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break; // bracket at floating-point resolution
        const double f_mid = f(mid);
        if (f_mid == 0.0) return {mid, mid};
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return {lo, hi};
}

} // namespace qsv::special
