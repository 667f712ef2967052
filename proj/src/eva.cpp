#include "qsv/eva.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "qsv/rng.hpp"
#include "qsv/special.hpp"

namespace qsv {

namespace {

constexpr double kShapeSearchLo = -0.99;
constexpr double kShapeSearchHi = 8.0;
constexpr double kShapeZeroBand = 1e-10; // treat |shape| below this as the exponential case
constexpr double kGolden = 0.61803398874989485;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ExcessData {
    std::span<const double> z;
    double mean;
    double max;
};

struct ProfilePoint {
    double sigma;
    double log_likelihood;
};

// One pass over the excesses: s1 = sum w/(1+w), s2 = sum w/(1+w)^2 with
// w = (xi/sigma) z. These are the stationarity sums of the scale gradient.
void stationarity_sums(std::span<const double> z, double xi_over_sigma, double& s1,
                       double& s2) {
    double a1 = 0.0, a2 = 0.0;
    for (const double zi : z) {
        const double w = xi_over_sigma * zi;
        const double inv = 1.0 / (1.0 + w);
        const double r = w * inv;
        a1 += r;
        a2 += r * inv;
    }
    s1 = a1;
    s2 = a2;
}

double gpd_log_likelihood(std::span<const double> z, double xi, double sigma) {
    const double n = static_cast<double>(z.size());
    if (std::fabs(xi) < kShapeZeroBand) {
        double sum = 0.0;
        for (const double zi : z) sum += zi;
        return -n * std::log(sigma) - sum / sigma;
    }
    double sum_log1p = 0.0;
    const double xi_over_sigma = xi / sigma;
    for (const double zi : z) {
        const double w = xi_over_sigma * zi;
        if (w <= -1.0) return kNegInf;
        sum_log1p += std::log1p(w);
    }
    return -n * std::log(sigma) - (1.0 + 1.0 / xi) * sum_log1p;
}

// Scale maximizing the likelihood at fixed shape: the root of the
// stationarity condition sum w/(1+w) = n xi/(1+xi), which is monotone in
// sigma on the feasible side. Safeguarded Newton inside a sign bracket.
ProfilePoint profile_at(const ExcessData& data, double xi, double sigma_hint) {
    const double n = static_cast<double>(data.z.size());
    if (std::fabs(xi) < kShapeZeroBand) {
        return {data.mean, -n * (std::log(data.mean) + 1.0)};
    }
    const double target = n * xi / (1.0 + xi);
    double lo, hi;
    double s1, s2;
    int guard = 0;
    if (xi > 0.0) {
        // sum falls from n (sigma -> 0) to 0; the root is where it meets target
        lo = hi = std::max(sigma_hint, 1e-300);
        stationarity_sums(data.z, xi / lo, s1, s2);
        if (s1 - target > 0.0) {
            do {
                hi *= 4.0;
                stationarity_sums(data.z, xi / hi, s1, s2);
                if (++guard > 600)
                    throw numerical_error("fit_gpd: scale bracketing did not terminate");
            } while (s1 - target > 0.0);
        } else {
            do {
                lo *= 0.25;
                stationarity_sums(data.z, xi / lo, s1, s2);
                if (++guard > 600)
                    throw numerical_error("fit_gpd: scale bracketing did not terminate");
            } while (s1 - target < 0.0);
        }
    } else {
        // feasibility floor: sigma must exceed -xi * max(z)
        const double floor = -xi * data.max;
        lo = floor * (1.0 + 1e-10);
        hi = std::max({sigma_hint, 2.0 * floor, (1.0 + xi) * data.mean});
        stationarity_sums(data.z, xi / hi, s1, s2);
        while (s1 - target < 0.0) {
            hi *= 2.0;
            stationarity_sums(data.z, xi / hi, s1, s2);
            if (++guard > 600)
                throw numerical_error("fit_gpd: scale bracketing did not terminate");
        }
    }
    double sigma = std::clamp(sigma_hint, std::nextafter(lo, hi), std::nextafter(hi, lo));
    for (int iter = 0; iter < 100; ++iter) {
        stationarity_sums(data.z, xi / sigma, s1, s2);
        const double g = s1 - target;
        if (std::fabs(g) <= n * 1e-13) break;
        // keep the bracket: g has the sign of (root - sigma) * sign(-xi)
        const bool g_positive = g > 0.0;
        if ((xi > 0.0) == g_positive)
            lo = sigma;
        else
            hi = sigma;
        const double gprime = -s2 / sigma;
        double next = sigma - g / gprime;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - sigma) <= 1e-14 * sigma) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    return {sigma, gpd_log_likelihood(data.z, xi, sigma)};
}

struct ShapeEval {
    double xi;
    ProfilePoint point;
};

} // namespace

PotConfig::PotConfig(double threshold_, double critical_value_, TailDirection direction_,
                     double decluster_gap_km_, std::size_t min_exceedances_)
    : threshold(threshold_), critical_value(critical_value_), direction(direction_),
      decluster_gap_km(decluster_gap_km_), min_exceedances(min_exceedances_) {
    if (!std::isfinite(threshold) || !std::isfinite(critical_value))
        throw validation_error("pot config: threshold and critical value must be finite");
    if (!(decluster_gap_km >= 0.0) || !std::isfinite(decluster_gap_km))
        throw validation_error("pot config: decluster gap must be nonnegative and finite");
    if (min_exceedances < 1)
        throw validation_error("pot config: at least one exceedance must be required");
    if (excess_of(critical_value) < 0.0)
        throw validation_error(
            "pot config: critical value lies on the safe side of the threshold");
}

double PotConfig::excess_of(double value) const {
    return direction == TailDirection::ExceedHigh ? value - threshold : threshold - value;
}

Exceedances extract_exceedances(const EventLog& log, const PotConfig& config) {
    if (log.pm_samples.empty())
        throw validation_error("extract_exceedances: log carries no performance samples");
    if (!(log.total_distance_km > 0.0))
        throw validation_error("extract_exceedances: log distance must be positive");
    Exceedances out;
    out.total_distance_km = log.total_distance_km;
    bool cluster_open = false;
    double peak = 0.0, peak_distance = 0.0, last_exceedance_distance = 0.0;
    for (const PmSample& sample : log.pm_samples) {
        const double excess = config.excess_of(sample.value);
        if (!(excess > 0.0)) continue;
        const bool same_cluster =
            cluster_open && config.decluster_gap_km > 0.0 &&
            sample.distance_km - last_exceedance_distance <= config.decluster_gap_km;
        if (same_cluster) {
            if (excess > peak) {
                peak = excess;
                peak_distance = sample.distance_km;
            }
        } else {
            if (cluster_open) {
                out.excesses.push_back(peak);
                out.distances_km.push_back(peak_distance);
            }
            cluster_open = true;
            peak = excess;
            peak_distance = sample.distance_km;
        }
        last_exceedance_distance = sample.distance_km;
    }
    if (cluster_open) {
        out.excesses.push_back(peak);
        out.distances_km.push_back(peak_distance);
    }
    out.rate_per_km =
        static_cast<double>(out.excesses.size()) / out.total_distance_km;
    return out;
}

double gpd_survival(double excess, double shape, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw validation_error("gpd_survival: scale must be positive and finite");
    if (!std::isfinite(shape) || !std::isfinite(excess))
        throw validation_error("gpd_survival: arguments must be finite");
    if (excess <= 0.0) return 1.0;
    if (std::fabs(shape) < kShapeZeroBand) return std::exp(-excess / scale);
    const double t = 1.0 + shape * excess / scale;
    if (t <= 0.0) return 0.0; // beyond the finite endpoint (shape < 0)
    return std::exp(-std::log(t) / shape);
}

GpdFit fit_gpd(std::span<const double> excesses, double exceedance_rate_per_km,
               std::size_t min_count) {
    if (!(exceedance_rate_per_km > 0.0) || !std::isfinite(exceedance_rate_per_km))
        throw validation_error("fit_gpd: exceedance rate must be positive and finite");
    const std::size_t n = excesses.size();
    if (n < min_count)
        throw validation_error("fit_gpd: insufficient data, " + std::to_string(n) +
                               " excesses where at least " + std::to_string(min_count) +
                               " are required");
    double zmax = 0.0, zmin = std::numeric_limits<double>::infinity(), sum = 0.0;
    for (const double z : excesses) {
        if (!(z > 0.0) || !std::isfinite(z))
            throw validation_error("fit_gpd: excesses must be positive and finite");
        zmax = std::max(zmax, z);
        zmin = std::min(zmin, z);
        sum += z;
    }
    if (zmax == zmin)
        throw validation_error("fit_gpd: degenerate data, all excesses are identical");
    const ExcessData data{excesses, sum / static_cast<double>(n), zmax};

    // Coarse profile over the shape, widened while the optimum sits on the
    // rim, then golden-section refinement between the neighbors of the best.
    std::vector<ShapeEval> evals;
    auto eval_at = [&](double xi, double hint) {
        const ProfilePoint p = profile_at(data, xi, hint);
        const auto pos = std::lower_bound(
            evals.begin(), evals.end(), xi,
            [](const ShapeEval& e, double v) { return e.xi < v; });
        evals.insert(pos, ShapeEval{xi, p});
        return p;
    };
    double hint = data.mean;
    for (int i = 0; i <= 16; ++i) {
        const double xi = -0.90 + 0.15 * static_cast<double>(i);
        hint = eval_at(xi, hint).sigma;
    }
    auto best_index = [&]() {
        std::size_t best = 0;
        for (std::size_t i = 1; i < evals.size(); ++i) {
            if (evals[i].point.log_likelihood > evals[best].point.log_likelihood) best = i;
        }
        return best;
    };
    std::size_t best = best_index();
    for (int guard = 0; guard < 60; ++guard) {
        if (best == 0 && evals.front().xi > kShapeSearchLo + 1e-12) {
            const double front = evals.front().xi;
            const double xi = std::max(kShapeSearchLo, -1.0 + 0.6 * (1.0 + front));
            eval_at(xi, evals.front().point.sigma);
        } else if (best == evals.size() - 1 && evals.back().xi < kShapeSearchHi - 1e-12) {
            const double xi = std::min(kShapeSearchHi, evals.back().xi * 1.5 + 0.3);
            eval_at(xi, evals.back().point.sigma);
        } else {
            break;
        }
        best = best_index();
    }
    double a = best > 0 ? evals[best - 1].xi : evals[best].xi;
    double b = best + 1 < evals.size() ? evals[best + 1].xi : evals[best].xi;
    double best_xi = evals[best].xi;
    ProfilePoint best_point = evals[best].point;
    if (b > a) {
        double x1 = b - kGolden * (b - a);
        double x2 = a + kGolden * (b - a);
        ProfilePoint p1 = profile_at(data, x1, best_point.sigma);
        ProfilePoint p2 = profile_at(data, x2, best_point.sigma);
        while (b - a > 1e-8 * std::max(1.0, std::fabs(best_xi))) {
            if (p1.log_likelihood >= p2.log_likelihood) {
                b = x2;
                x2 = x1;
                p2 = p1;
                x1 = b - kGolden * (b - a);
                p1 = profile_at(data, x1, p2.sigma);
            } else {
                a = x1;
                x1 = x2;
                p1 = p2;
                x2 = a + kGolden * (b - a);
                p2 = profile_at(data, x2, p1.sigma);
            }
        }
        const ProfilePoint& refined = p1.log_likelihood >= p2.log_likelihood ? p1 : p2;
        const double refined_xi = p1.log_likelihood >= p2.log_likelihood ? x1 : x2;
        if (refined.log_likelihood > best_point.log_likelihood) {
            best_point = refined;
            best_xi = refined_xi;
        }
    }

    GpdFit fit;
    fit.shape = std::fabs(best_xi) < kShapeZeroBand ? 0.0 : best_xi;
    fit.scale = best_point.sigma;
    fit.exceedance_rate_per_km = exceedance_rate_per_km;
    fit.count = n;
    fit.log_likelihood = best_point.log_likelihood;
    if (fit.shape < 0.0) fit.excess_endpoint = -fit.scale / fit.shape;
    fit.at_search_bound = best_xi <= kShapeSearchLo + 1e-6 || best_xi >= kShapeSearchHi - 1e-6;
    return fit;
}

RateExtrapolation extrapolate_rate(const GpdFit& fit, const PotConfig& config) {
    const double zc = config.excess_of(config.critical_value);
    const double survival = gpd_survival(zc, fit.shape, fit.scale);
    bool beyond = false;
    if (fit.shape < 0.0 && zc > 0.0 && 1.0 + fit.shape * zc / fit.scale <= 0.0)
        beyond = true;
    return {fit.exceedance_rate_per_km * survival, beyond};
}

namespace {

// Best gpd parameters for a fixed extrapolated rate r: maximize
//   phi(xi, sigma) = n ln(r / S) - (r / S) D + gpd log likelihood,
// where S is the survival of the critical excess, i.e. the cluster rate is
// forced to r / S. Grid over the shape with an inner golden section over
// log sigma; coarse is fine here because the outer bisection only needs the
// deviance to a fraction of a chi-squared unit.
class FixedRateProfile {
public:
    FixedRateProfile(const Exceedances& exc, const GpdFit& fit, double critical_excess)
        : z_(exc.excesses), distance_(exc.total_distance_km), zc_(critical_excess),
          fit_(fit) {
        n_ = static_cast<double>(z_.size());
        double zmax = 0.0, sum = 0.0;
        for (const double zi : z_) {
            zmax = std::max(zmax, zi);
            sum += zi;
        }
        zmax_ = zmax;
        mean_ = sum / n_;
    }

    double phi(double r, double xi, double sigma) const {
        if (!(sigma > 0.0)) return kNegInf;
        double survival;
        if (zc_ <= 0.0) {
            survival = 1.0;
        } else if (std::fabs(xi) < kShapeZeroBand) {
            survival = std::exp(-zc_ / sigma);
        } else {
            const double t = 1.0 + xi * zc_ / sigma;
            if (t <= 0.0) return kNegInf;
            survival = std::exp(-std::log(t) / xi);
        }
        if (!(survival > 0.0)) return kNegInf;
        const double zeta = r / survival;
        if (!std::isfinite(zeta)) return kNegInf;
        const double ll_g = gpd_log_likelihood(z_, xi, sigma);
        if (!std::isfinite(ll_g)) return kNegInf;
        return n_ * std::log(zeta) - zeta * distance_ + ll_g;
    }

    double best_for_shape(double r, double xi) const {
        double lo = std::log(mean_) - 6.0;
        const double hi = std::log(std::max(mean_, zc_ > 0.0 ? zc_ : mean_)) + 6.0;
        if (xi < 0.0) lo = std::max(lo, std::log(-xi * zmax_) + 1e-9);
        if (!(lo < hi)) return kNegInf;
        double a = lo, b = hi;
        double x1 = b - kGolden * (b - a);
        double x2 = a + kGolden * (b - a);
        double f1 = phi(r, xi, std::exp(x1));
        double f2 = phi(r, xi, std::exp(x2));
        for (int i = 0; i < 40; ++i) {
            if (f1 >= f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - kGolden * (b - a);
                f1 = phi(r, xi, std::exp(x1));
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + kGolden * (b - a);
                f2 = phi(r, xi, std::exp(x2));
            }
        }
        return std::max(f1, f2);
    }

    double log_likelihood(double r) const {
        double best_xi = fit_.shape;
        double best = best_for_shape(r, fit_.shape);
        for (double xi = -0.8; xi <= 1.2001; xi += 0.2) {
            const double value = best_for_shape(r, xi);
            if (value > best) {
                best = value;
                best_xi = xi;
            }
        }
        double a = std::max(kShapeSearchLo, best_xi - 0.2);
        double b = std::min(kShapeSearchHi, best_xi + 0.2);
        double x1 = b - kGolden * (b - a);
        double x2 = a + kGolden * (b - a);
        double f1 = best_for_shape(r, x1);
        double f2 = best_for_shape(r, x2);
        for (int i = 0; i < 25; ++i) {
            if (f1 >= f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - kGolden * (b - a);
                f1 = best_for_shape(r, x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + kGolden * (b - a);
                f2 = best_for_shape(r, x2);
            }
        }
        best = std::max({best, f1, f2});
        // the direct Poisson term at the unconstrained gpd optimum
        const double direct = phi(r, fit_.shape, fit_.scale);
        return std::max(best, direct);
    }

private:
    std::span<const double> z_;
    double distance_;
    double zc_;
    GpdFit fit_;
    double n_ = 0.0;
    double zmax_ = 0.0;
    double mean_ = 0.0;
};

} // namespace

double profile_rate_upper_bound(const Exceedances& exceedances, const GpdFit& fit,
                                const PotConfig& config, double confidence) {
    if (!(confidence > 0.5) || !(confidence < 1.0))
        throw validation_error(
            "profile_rate_upper_bound: confidence must lie strictly between 0.5 and 1");
    const std::size_t n = exceedances.excesses.size();
    if (n == 0)
        throw validation_error("profile_rate_upper_bound: no exceedances to profile");
    if (!(exceedances.total_distance_km > 0.0))
        throw validation_error("profile_rate_upper_bound: distance must be positive");
    const double nd = static_cast<double>(n);
    const double distance = exceedances.total_distance_km;
    const double zeta_hat = nd / distance;
    const double zc = config.excess_of(config.critical_value);
    // one-sided bound: two-sided chi-squared level 2c - 1 keeps c below
    const double q = special::chi_squared_quantile(2.0 * confidence - 1.0, 1.0);

    const FixedRateProfile profile(exceedances, fit, zc);
    const double ll_max =
        nd * std::log(zeta_hat) - zeta_hat * distance + fit.log_likelihood;
    const auto deviance_gap = [&](double r) {
        return 2.0 * (ll_max - profile.log_likelihood(r)) - q;
    };
    const double r_hat = zeta_hat * gpd_survival(zc, fit.shape, fit.scale);
    double lo = r_hat;
    double f_lo = -q; // the profile deviance vanishes at the estimate
    double hi = std::max(r_hat * 2.0, zeta_hat * 0x1.0p-40);
    double f_hi = deviance_gap(hi);
    int guard = 0;
    while (f_hi < 0.0) {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = deviance_gap(hi);
        if (++guard > 300)
            throw numerical_error("profile_rate_upper_bound: failed to bracket the bound");
    }
    const special::Bracket bracket =
        special::bisect(deviance_gap, lo, hi, f_lo, f_hi, 1e-7);
    return bracket.hi;
}

double bootstrap_rate_upper_bound(const Exceedances& exceedances, const PotConfig& config,
                                  double confidence, std::size_t resamples,
                                  std::uint64_t seed) {
    if (!(confidence > 0.0) || !(confidence < 1.0))
        throw validation_error(
            "bootstrap_rate_upper_bound: confidence must lie strictly between 0 and 1");
    if (resamples < 1)
        throw validation_error("bootstrap_rate_upper_bound: at least one resample required");
    const std::size_t n = exceedances.excesses.size();
    if (n < 2)
        throw validation_error("bootstrap_rate_upper_bound: too few exceedances");
    const double zc = config.excess_of(config.critical_value);
    std::vector<double> rates;
    rates.reserve(resamples);
    std::vector<double> sample;
    for (std::size_t b = 0; b < resamples; ++b) {
        SplitMix64 rng(replication_seed(seed, b));
        for (int attempt = 0; attempt < 100; ++attempt) {
            // cluster count resampled as Poisson(n) via unit-rate waiting times
            std::size_t m = 0;
            double acc = exponential_gap(rng, 1.0);
            while (acc <= static_cast<double>(n)) {
                ++m;
                acc += exponential_gap(rng, 1.0);
            }
            if (m < 5) continue;
            sample.clear();
            sample.reserve(m);
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t idx = std::min(
                    n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)));
                sample.push_back(exceedances.excesses[idx]);
            }
            const double zeta = static_cast<double>(m) / exceedances.total_distance_km;
            try {
                const GpdFit fit = fit_gpd(sample, zeta, 5);
                rates.push_back(zeta * gpd_survival(zc, fit.shape, fit.scale));
                break;
            } catch (const error&) {
                continue; // degenerate resample; redraw
            }
        }
    }
    if (rates.empty())
        throw numerical_error("bootstrap_rate_upper_bound: no usable resamples");
    std::sort(rates.begin(), rates.end());
    const double pos = confidence * static_cast<double>(rates.size());
    std::size_t index = static_cast<std::size_t>(std::ceil(pos));
    if (index == 0) index = 1;
    if (index > rates.size()) index = rates.size();
    return rates[index - 1];
}

Verdict eva_verdict(double rate_estimate, double rate_upper_bound,
                    const AcceptanceCriterion& criterion) {
    if (!(rate_estimate >= 0.0) || !std::isfinite(rate_estimate))
        throw validation_error("eva_verdict: rate estimate must be nonnegative and finite");
    if (!(rate_upper_bound >= rate_estimate) || !std::isfinite(rate_upper_bound))
        throw validation_error("eva_verdict: upper bound must not fall below the estimate");
    return rate_upper_bound <= criterion.max_event_rate_per_km ? Verdict::Pass
                                                               : Verdict::Fail;
}

} // namespace qsv
