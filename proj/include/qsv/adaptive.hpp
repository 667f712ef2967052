#pragma once

#include <cstdint>
#include <optional>

#include "qsv/types.hpp"

namespace qsv {

/// Sequential probability ratio test between two Poisson event rates:
/// H0 "rate = rate_h0" (the unsafe side, at the acceptance criterion) versus
/// H1 "rate = rate_h1 < rate_h0" (the design discrimination point).
/// Crossing the upper threshold accepts the safe hypothesis.
struct SprtConfig {
    double rate_h0_per_km;
    double rate_h1_per_km;
    double alpha; // type-I target: accepting safe although the rate is rate_h0
    double beta;  // type-II target: rejecting safe although the rate is rate_h1
    std::optional<double> truncation_km;

    SprtConfig(double rate_h0_per_km_, double rate_h1_per_km_, double alpha_,
               double beta_, std::optional<double> truncation_km_ = std::nullopt);

    double upper_threshold() const; // ln((1 - beta) / alpha)
    double lower_threshold() const; // ln(beta / (1 - alpha))
    double event_llr() const;       // ln(rate_h1 / rate_h0), negative
    double drift_per_km() const;    // rate_h0 - rate_h1, positive
};

enum class SprtDecision { Continue, AcceptSafe, RejectSafe };

struct SprtState {
    double log_likelihood_ratio = 0.0;
    double distance_km = 0.0;
    std::int64_t events = 0;
    SprtDecision decision = SprtDecision::Continue;
};

/// Advance a running test by a driven increment and the events observed in
/// it. The log likelihood ratio is linear in both, so any partition of the
/// same increment and events yields the same ratio. Updating a state that
/// has already decided is a protocol violation.
SprtState sprt_update(const SprtConfig& config, const SprtState& state,
                      double increment_km, std::int64_t new_events);

/// Force a decision at the truncation point: the boundary closest to the
/// current log likelihood ratio wins; ties reject (conservative).
SprtState sprt_finalize_at_truncation(const SprtConfig& config, const SprtState& state);

/// Wald approximation of the probability that the test accepts the safe
/// hypothesis when the true rate is `true_rate_per_km`.
double sprt_accept_probability(const SprtConfig& config, double true_rate_per_km);

/// Wald approximation of the expected distance to a decision at the given
/// true rate, with the indifference-point limit handled explicitly.
double sprt_expected_distance(const SprtConfig& config, double true_rate_per_km);

/// Gamma distribution over an event rate, parameterized as pseudo-evidence:
/// `shape` counts pseudo-events observed over `pseudo_distance_km`.
/// pseudo_distance_km = 0 with shape 1 is the flat reference prior.
struct GammaPrior {
    double shape;
    double pseudo_distance_km;

    GammaPrior(double shape_, double pseudo_distance_km_);
};

/// Conjugate update: add observed events to the shape and driven distance to
/// the pseudo-distance.
GammaPrior bayes_posterior(const GammaPrior& prior, const EventLog& log);

/// P(rate <= rate_per_km) under the distribution. Zero pseudo-distance gives
/// probability 0 for every finite rate: no evidence, no credibility.
double gamma_rate_cdf(const GammaPrior& distribution, double rate_per_km);

/// Pass when the posterior puts at least 1 - significance of its mass at or
/// below the criterion rate; otherwise Incomplete (more evidence needed).
/// A Bayesian evaluation never returns Fail: weak evidence is absence of a
/// demonstration, not a demonstration of absence.
Verdict bayes_decision(const GammaPrior& posterior, const AcceptanceCriterion& criterion,
                       double significance);

/// Smallest event-free distance (on top of `assumed_events` further events)
/// after which bayes_decision passes. Bisection to relative 1e-12.
double bayes_required_distance(const GammaPrior& prior, const AcceptanceCriterion& criterion,
                               double significance, std::int64_t assumed_events = 0);

} // namespace qsv
