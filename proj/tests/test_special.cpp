#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracle.hpp"
#include "qsv/errors.hpp"
#include "qsv/rng.hpp"
#include "qsv/special.hpp"

using namespace qsv;
using namespace qsv::special;

namespace {

double rel_err(double got, double want) {
    if (want == 0.0) return std::fabs(got);
    return std::fabs(got - want) / std::fabs(want);
}

} // namespace

TEST_CASE("log_gamma matches the long double library function") {
    const std::vector<double> xs = {1e-3, 0.1, 0.5,  1.0,  1.5,   2.0,  3.7,
                                    10.0, 42.5, 100.0, 1e3, 1e6,  1e10};
    for (double x : xs) {
        const double want = static_cast<double>(std::lgamma(static_cast<long double>(x)));
        CAPTURE(x);
        CHECK(rel_err(log_gamma(x), want) < 1e-13);
    }
}

TEST_CASE("log_gamma exact anchors") {
    CHECK(std::fabs(log_gamma(1.0)) < 1e-15);
    CHECK(std::fabs(log_gamma(2.0)) < 1e-15);
    // Gamma(1/2) = sqrt(pi)
    CHECK(rel_err(log_gamma(0.5), 0.5 * std::log(std::acos(-1.0))) < 1e-14);
    CHECK_THROWS_AS(log_gamma(0.0), validation_error);
    CHECK_THROWS_AS(log_gamma(-1.5), validation_error);
}

TEST_CASE("regularized gamma functions are complementary and anchored") {
    const std::vector<double> as = {0.1, 0.5, 1.0, 2.5, 10.0, 100.0, 1e4};
    const std::vector<double> multiples = {0.1, 0.5, 0.9, 1.0, 1.1, 2.0, 5.0};
    for (double a : as) {
        CHECK(regularized_gamma_p(a, 0.0) == 0.0);
        CHECK(regularized_gamma_q(a, 0.0) == 1.0);
        for (double m : multiples) {
            const double x = a * m;
            CAPTURE(a);
            CAPTURE(x);
            const double p = regularized_gamma_p(a, x);
            const double q = regularized_gamma_q(a, x);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            CHECK(std::fabs(p + q - 1.0) < 1e-13);
        }
    }
    CHECK_THROWS_AS(regularized_gamma_p(0.0, 1.0), validation_error);
    CHECK_THROWS_AS(regularized_gamma_p(1.0, -0.5), validation_error);
}

TEST_CASE("regularized gamma P at integer shape equals a Poisson tail") {
    // P(n, x) = P(Poisson(x) >= n)
    for (std::int64_t n : {1, 2, 3, 5, 10, 40}) {
        for (double x : {0.1, 1.0, 3.0, 10.0, 35.0, 80.0}) {
            const double want = static_cast<double>(oracle::poisson_tail_ge(n, x));
            CAPTURE(n);
            CAPTURE(x);
            CHECK(rel_err(regularized_gamma_p(static_cast<double>(n), x), want) < 1e-12);
        }
    }
}

TEST_CASE("regularized gamma P is monotone in x") {
    for (double a : {0.3, 1.0, 7.5}) {
        double previous = -1.0;
        for (double x = 0.0; x <= 8.0 * a + 8.0; x += 0.25) {
            const double p = regularized_gamma_p(a, x);
            CHECK(p >= previous);
            previous = p;
        }
    }
}

TEST_CASE("chi squared quantile inverts the cdf") {
    for (double dof : {1.0, 2.0, 5.0}) {
        for (double prob : {0.0, 0.01, 0.5, 0.9, 0.95, 0.999}) {
            const double q = chi_squared_quantile(prob, dof);
            CAPTURE(dof);
            CAPTURE(prob);
            if (prob == 0.0) {
                CHECK(q == 0.0);
            } else {
                CHECK(std::fabs(regularized_gamma_p(dof / 2.0, q / 2.0) - prob) < 1e-9);
            }
        }
    }
    // known value: the 90th percentile of chi squared with one degree of freedom
    CHECK(rel_err(chi_squared_quantile(0.9, 1.0), 2.705543454095404) < 1e-10);
    CHECK_THROWS_AS(chi_squared_quantile(1.0, 1.0), validation_error);
    CHECK_THROWS_AS(chi_squared_quantile(-0.1, 1.0), validation_error);
}

TEST_CASE("bisect finds the root of a transcendental function") {
    auto f = [](double x) { return std::cos(x); };
    const Bracket b = bisect(f, 0.0, 2.0, f(0.0), f(2.0), 1e-14);
    CHECK(b.lo <= b.hi);
    CHECK(rel_err(b.midpoint(), std::acos(-1.0) / 2.0) < 1e-12);
}

TEST_CASE("bisect rejects a bracket without a sign change") {
    auto f = [](double x) { return x * x + 1.0; };
    CHECK_THROWS_AS(bisect(f, -1.0, 1.0, f(-1.0), f(1.0), 1e-12), numerical_error);
}

TEST_CASE("bisect honors exact zeros at the endpoints") {
    auto f = [](double x) { return x; };
    const Bracket b = bisect(f, 0.0, 1.0, 0.0, 1.0, 1e-12);
    CHECK(b.lo == 0.0);
    CHECK(b.hi == 0.0);
}

TEST_CASE("bisect brackets roots of random monotone cubics") {
    SplitMix64 rng(0x5eedULL);
    for (int round = 0; round < 200; ++round) {
        // strictly increasing cubic: positive derivative everywhere
        const double a = 0.1 + 3.0 * rng.uniform();
        const double c = 0.5 + 2.0 * rng.uniform();
        const double d = 40.0 * (rng.uniform() - 0.5);
        auto f = [&](double x) { return a * x * x * x + c * x + d; };
        const double lo = -50.0;
        const double hi = 50.0;
        const Bracket b = bisect(f, lo, hi, f(lo), f(hi), 1e-13);
        CAPTURE(round);
        CHECK(b.hi - b.lo <= 1e-13 * 50.0 * 1.0001);
        CHECK(f(b.lo) <= 0.0);
        CHECK(f(b.hi) >= 0.0);
    }
}
