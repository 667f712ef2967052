#include "qsv/frequentist.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "qsv/special.hpp"

namespace qsv {

namespace {

// Below this lambda the smallest term exp(-lambda) is representable and the
// direct recurrence is exact to rounding; above it, work in log space.
constexpr double kDirectLambdaLimit = 700.0;

double poisson_cdf_direct(std::int64_t k, double lambda) {
    double term = std::exp(-lambda);
    double sum = term;
    double comp = 0.0; // compensated summation keeps 1e-16 relative error
    for (std::int64_t i = 1; i <= k; ++i) {
        term *= lambda / static_cast<double>(i);
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (static_cast<double>(i) > lambda && term < sum * 1e-18) break;
    }
    return std::min(sum, 1.0);
}

double poisson_cdf_logspace(std::int64_t k, double lambda) {
    // Anchor at the largest term in [0, k]; both directions decay from it.
    const std::int64_t m = std::min(k, static_cast<std::int64_t>(lambda));
    const double log_anchor = -lambda + static_cast<double>(m) * std::log(lambda) -
                              special::log_gamma(static_cast<double>(m) + 1.0);
    double sum = 1.0;
    double ratio = 1.0;
    for (std::int64_t i = m; i-- > 0;) {
        ratio *= static_cast<double>(i + 1) / lambda;
        sum += ratio;
        if (ratio < sum * 1e-18) break;
    }
    ratio = 1.0;
    for (std::int64_t i = m + 1; i <= k; ++i) {
        ratio *= lambda / static_cast<double>(i);
        sum += ratio;
        if (ratio < sum * 1e-18) break;
    }
    const double log_cdf = log_anchor + std::log(sum);
    if (log_cdf >= 0.0) return 1.0;
    return std::exp(log_cdf);
}

} // namespace

double poisson_cdf(std::int64_t k, double lambda) {
    if (k < 0) throw validation_error("poisson_cdf: event count must be nonnegative");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw validation_error("poisson_cdf: mean must be nonnegative and finite");
    if (lambda == 0.0) return 1.0;
    if (lambda <= kDirectLambdaLimit) return poisson_cdf_direct(k, lambda);
    return poisson_cdf_logspace(k, lambda);
}

double poisson_quantile_lambda(std::int64_t k, double alpha) {
    if (k < 0) throw validation_error("poisson_quantile_lambda: event count must be nonnegative");
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw validation_error("poisson_quantile_lambda: alpha must lie strictly between 0 and 1");
    const double kd = static_cast<double>(k);
    const double hi = kd + 50.0 * (std::sqrt(kd) + 1.0);
    const auto cdf_gap = [&](double lambda) { return poisson_cdf(k, lambda) - alpha; };
    const double f_hi = cdf_gap(hi);
    if (!(f_hi <= 0.0))
        throw numerical_error("poisson_quantile_lambda: bracket does not reach the root");
    // CDF decreases from 1 at lambda = 0; take the bracket end with CDF <= alpha.
    const special::Bracket b = special::bisect(cdf_gap, 0.0, hi, 1.0 - alpha, f_hi, 1e-12);
    return b.hi;
}

double binomial_cdf(std::int64_t trials, std::int64_t successes, double p) {
    if (trials < 0) throw validation_error("binomial_cdf: trials must be nonnegative");
    if (!(p >= 0.0) || !(p <= 1.0))
        throw validation_error("binomial_cdf: probability must lie in [0, 1]");
    if (successes < 0) return 0.0;
    if (successes >= trials) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0; // successes < trials here
    // Anchor at the modal term within [0, successes]; terms decay outward.
    const double n = static_cast<double>(trials);
    const std::int64_t mode = static_cast<std::int64_t>((n + 1.0) * p);
    const std::int64_t m = std::min(successes, std::max<std::int64_t>(mode, 0));
    const double md = static_cast<double>(m);
    const double log_anchor = special::log_gamma(n + 1.0) - special::log_gamma(md + 1.0) -
                              special::log_gamma(n - md + 1.0) + md * std::log(p) +
                              (n - md) * std::log1p(-p);
    const double odds = p / (1.0 - p);
    double sum = 1.0;
    double ratio = 1.0;
    for (std::int64_t i = m; i-- > 0;) {
        // term(i) = term(i+1) * (i+1) / ((n-i) * odds)
        ratio *= static_cast<double>(i + 1) / (static_cast<double>(trials - i) * odds);
        sum += ratio;
        if (ratio < sum * 1e-18) break;
    }
    ratio = 1.0;
    for (std::int64_t i = m + 1; i <= successes; ++i) {
        ratio *= static_cast<double>(trials - i + 1) * odds / static_cast<double>(i);
        sum += ratio;
        if (ratio < sum * 1e-18) break;
    }
    const double log_cdf = log_anchor + std::log(sum);
    if (log_cdf >= 0.0) return 1.0;
    return std::exp(log_cdf);
}

ValidationTarget validation_target(const AcceptanceCriterion& criterion,
                                   const TestParameters& params) {
    const double rate = criterion.max_event_rate_per_km;
    double lambda_star;
    if (params.allowed_events == 0) {
        lambda_star = -std::log(params.significance);
    } else {
        lambda_star = poisson_quantile_lambda(params.allowed_events, params.significance);
    }
    const double tau = lambda_star / rate;
    return ValidationTarget(tau, params, criterion, StatModel::PoissonNhst);
}

Verdict evaluate(const ValidationTarget& target, const EventLog& log) {
    const double tau = target.required_distance_km;
    std::int64_t within = 0;
    for (const double s : log.event_stamps_km) {
        if (s <= tau) ++within;
    }
    if (within > target.params.allowed_events) return Verdict::Fail;
    if (log.total_distance_km >= tau) return Verdict::Pass;
    return Verdict::Incomplete;
}

EvaluationSession::EvaluationSession(ValidationTarget target)
    : target_(std::move(target)) {}

Verdict EvaluationSession::observe(const EventLog& log) {
    if (verdict_ != Verdict::Incomplete)
        throw protocol_error(
            "test already concluded; extending a concluded test would raise the "
            "realized type-I error above the nominal significance");
    if (any_observation_ && log.total_distance_km < last_total_km_)
        throw validation_error(
            "observation total distance decreased; logs must extend the drive");
    verdict_ = evaluate(target_, log);
    last_total_km_ = log.total_distance_km;
    any_observation_ = true;
    return verdict_;
}

OperatingPoint pass_probability(const ValidationTarget& target, double true_rate_per_km) {
    if (!(true_rate_per_km >= 0.0) || !std::isfinite(true_rate_per_km))
        throw validation_error("pass_probability: rate must be nonnegative and finite");
    const double mean = true_rate_per_km * target.required_distance_km;
    return {true_rate_per_km, poisson_cdf(target.params.allowed_events, mean)};
}

const ValidationTarget& SensitivityTable::at(std::size_t sig_index,
                                             std::size_t events_index) const {
    if (sig_index >= significances.size() || events_index >= allowed_events.size())
        throw validation_error("sensitivity table: index out of range");
    return cells[sig_index * allowed_events.size() + events_index];
}

SensitivityTable sensitivity_table(const AcceptanceCriterion& criterion,
                                   std::span<const double> significances,
                                   std::span<const std::int64_t> allowed_events) {
    if (significances.empty() || allowed_events.empty())
        throw validation_error("sensitivity table: both parameter lists must be non-empty");
    SensitivityTable table;
    table.significances.assign(significances.begin(), significances.end());
    table.allowed_events.assign(allowed_events.begin(), allowed_events.end());
    table.cells.reserve(significances.size() * allowed_events.size());
    for (const double sig : significances) {
        for (const std::int64_t k : allowed_events) {
            table.cells.push_back(validation_target(criterion, TestParameters(sig, k)));
        }
    }
    return table;
}

} // namespace qsv
