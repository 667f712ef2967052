#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qsv/types.hpp"

namespace qsv {

/// P(X <= k) for X ~ Poisson(lambda). Direct compensated summation of the
/// term recurrence for moderate lambda; log-space summation anchored at the
/// largest term for large lambda, so tails keep full relative accuracy.
double poisson_cdf(std::int64_t k, double lambda);

/// The lambda at which P(X <= k) equals alpha, found by bracketed bisection
/// to relative tolerance 1e-12. Returns the upper end of the final bracket,
/// so poisson_cdf(k, result) <= alpha is guaranteed.
double poisson_quantile_lambda(std::int64_t k, double alpha);

/// P(X <= successes) for X ~ Binomial(trials, p). Summed from the largest
/// term outward in scaled space, so small tails keep relative accuracy.
double binomial_cdf(std::int64_t trials, std::int64_t successes, double p);

/// Plan the fixed-distance test for a criterion: the shortest distance at
/// which observing at most `allowed_events` events rejects the hypothesis
/// that the event rate exceeds the criterion at level `significance`.
/// For zero allowed events this is the closed form -ln(alpha) / rate.
ValidationTarget validation_target(const AcceptanceCriterion& criterion,
                                   const TestParameters& params);

/// Decision rule for a (possibly partial) test drive against a target:
/// Fail as soon as more than allowed_events events fall within the planned
/// distance, Pass only when the full distance is driven, Incomplete before.
Verdict evaluate(const ValidationTarget& target, const EventLog& log);

/// Stateful wrapper around `evaluate` enforcing the test protocol: logs are
/// observed in order of increasing distance, and a test that has concluded
/// (Pass or Fail) may not be extended. Extending a concluded test would
/// raise the realized type-I error above the nominal significance, so it is
/// a protocol violation, not a larger sample.
class EvaluationSession {
public:
    explicit EvaluationSession(ValidationTarget target);

    Verdict observe(const EventLog& log);

    const ValidationTarget& target() const { return target_; }
    Verdict verdict() const { return verdict_; }

private:
    ValidationTarget target_;
    Verdict verdict_ = Verdict::Incomplete;
    double last_total_km_ = 0.0;
    bool any_observation_ = false;
};

/// Probability that a system with true event rate `true_rate_per_km` passes
/// the planned test.
struct OperatingPoint {
    double true_rate_per_km;
    double pass_probability;
};

OperatingPoint pass_probability(const ValidationTarget& target, double true_rate_per_km);

/// Grid of targets across significance levels (rows) and allowed event
/// counts (columns), for exploring how certainty trades against distance.
struct SensitivityTable {
    std::vector<double> significances;
    std::vector<std::int64_t> allowed_events;
    std::vector<ValidationTarget> cells; // row-major: significance outer

    const ValidationTarget& at(std::size_t sig_index, std::size_t events_index) const;
};

SensitivityTable sensitivity_table(const AcceptanceCriterion& criterion,
                                   std::span<const double> significances,
                                   std::span<const std::int64_t> allowed_events);

} // namespace qsv
