#include "qsv/special.hpp"

#include <cmath>
#include <limits>

namespace qsv::special {

namespace {

constexpr double kSeriesTol = 1e-14;
constexpr int kMaxIter = 100000;

// Lower regularized gamma via its power series; valid and fast for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kSeriesTol) {
            return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
        }
    }
    throw numerical_error("regularized_gamma_p: series did not converge");
}

// Upper regularized gamma via the Lentz continued fraction; for x >= a + 1.
double gamma_q_fraction(double a, double x) {
    const double fpmin = std::numeric_limits<double>::min() / kSeriesTol;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kSeriesTol) {
            return h * std::exp(-x + a * std::log(x) - log_gamma(a));
        }
    }
    throw numerical_error("regularized_gamma_q: continued fraction did not converge");
}

} // namespace

double log_gamma(double x) {
    // Lanczos, g = 5, n = 6 would lose digits; use the 14-term coefficient set.
    static const double coef[14] = {
        57.1562356658629235,     -59.5979603554754912,
        14.1360979747417471,     -0.491913816097620199,
        0.339946499848118887e-4,  0.465236289270485756e-4,
        -0.983744753048795646e-4, 0.158088703224912494e-3,
        -0.210264441724104883e-3, 0.217439618115212643e-3,
        -0.164318106536763890e-3, 0.844182239838527433e-4,
        -0.261908384015814087e-4, 0.368991826595316234e-5};
    if (!(x > 0.0) || !std::isfinite(x))
        throw validation_error("log_gamma: argument must be positive and finite");
    double y = x;
    double tmp = x + 5.24218750000000000; // x + g + 1/2 with g = 671/128
    tmp = (x + 0.5) * std::log(tmp) - tmp;
    double ser = 0.999999999999997092;
    for (const double c : coef) ser += c / ++y;
    return tmp + std::log(2.5066282746310005 * ser / x);
}

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || !std::isfinite(a))
        throw validation_error("regularized_gamma_p: shape must be positive and finite");
    if (!(x >= 0.0) || !std::isfinite(x))
        throw validation_error("regularized_gamma_p: argument must be nonnegative and finite");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || !std::isfinite(a))
        throw validation_error("regularized_gamma_q: shape must be positive and finite");
    if (!(x >= 0.0) || !std::isfinite(x))
        throw validation_error("regularized_gamma_q: argument must be nonnegative and finite");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_fraction(a, x);
}

double chi_squared_quantile(double probability, double dof) {
    if (!(probability >= 0.0) || !(probability < 1.0))
        throw validation_error("chi_squared_quantile: probability must lie in [0, 1)");
    if (!(dof > 0.0) || !std::isfinite(dof))
        throw validation_error("chi_squared_quantile: degrees of freedom must be positive");
    if (probability == 0.0) return 0.0;
    const auto cdf_gap = [&](double x) {
        return regularized_gamma_p(0.5 * dof, 0.5 * x) - probability;
    };
    double hi = dof + 10.0;
    double f_hi = cdf_gap(hi);
    int guard = 0;
    while (f_hi < 0.0) {
        hi *= 2.0;
        f_hi = cdf_gap(hi);
        if (++guard > 200)
            throw numerical_error("chi_squared_quantile: failed to bracket the quantile");
    }
    const Bracket b = bisect(cdf_gap, 0.0, hi, -probability, f_hi, 1e-13);
    return b.midpoint();
}

} // namespace qsv::special
