#include "qsv/adaptive.hpp"

#include <algorithm>
#include <cmath>

#include "qsv/special.hpp"

namespace qsv {

SprtConfig::SprtConfig(double rate_h0_per_km_, double rate_h1_per_km_, double alpha_,
                       double beta_, std::optional<double> truncation_km_)
    : rate_h0_per_km(rate_h0_per_km_), rate_h1_per_km(rate_h1_per_km_), alpha(alpha_),
      beta(beta_), truncation_km(truncation_km_) {
    if (!(rate_h0_per_km > 0.0) || !std::isfinite(rate_h0_per_km))
        throw validation_error("sprt: rate under H0 must be positive and finite");
    if (!(rate_h1_per_km > 0.0) || !(rate_h1_per_km < rate_h0_per_km))
        throw validation_error("sprt: rate under H1 must lie strictly between 0 and the H0 rate");
    if (!(alpha > 0.0) || !(alpha < 1.0) || !(beta > 0.0) || !(beta < 1.0))
        throw validation_error("sprt: alpha and beta must lie strictly between 0 and 1");
    if (!(alpha + beta < 1.0))
        throw validation_error("sprt: alpha + beta must be below 1");
    if (truncation_km && !(*truncation_km > 0.0))
        throw validation_error("sprt: truncation distance must be positive");
}

double SprtConfig::upper_threshold() const { return std::log((1.0 - beta) / alpha); }
double SprtConfig::lower_threshold() const { return std::log(beta / (1.0 - alpha)); }
double SprtConfig::event_llr() const { return std::log(rate_h1_per_km / rate_h0_per_km); }
double SprtConfig::drift_per_km() const { return rate_h0_per_km - rate_h1_per_km; }

SprtState sprt_update(const SprtConfig& config, const SprtState& state,
                      double increment_km, std::int64_t new_events) {
    if (state.decision != SprtDecision::Continue)
        throw protocol_error("sprt: updating a decided test is a protocol violation");
    if (!(increment_km >= 0.0) || !std::isfinite(increment_km))
        throw validation_error("sprt: distance increment must be nonnegative and finite");
    if (new_events < 0)
        throw validation_error("sprt: event count must be nonnegative");
    SprtState next = state;
    next.log_likelihood_ratio += static_cast<double>(new_events) * config.event_llr() +
                                 config.drift_per_km() * increment_km;
    next.distance_km += increment_km;
    next.events += new_events;
    if (next.log_likelihood_ratio >= config.upper_threshold())
        next.decision = SprtDecision::AcceptSafe;
    else if (next.log_likelihood_ratio <= config.lower_threshold())
        next.decision = SprtDecision::RejectSafe;
    return next;
}

SprtState sprt_finalize_at_truncation(const SprtConfig& config, const SprtState& state) {
    if (state.decision != SprtDecision::Continue) return state;
    SprtState next = state;
    const double to_upper = config.upper_threshold() - state.log_likelihood_ratio;
    const double to_lower = state.log_likelihood_ratio - config.lower_threshold();
    next.decision =
        to_upper < to_lower ? SprtDecision::AcceptSafe : SprtDecision::RejectSafe;
    return next;
}

namespace {

// Nonzero root in h of  R ((r1/r0)^h - 1) + h (r0 - r1) = 0, the exponent of
// the exponential martingale at true rate R. The function is convex with a
// root at 0; the second root has the opposite sign of the drift.
// h = 1 at R = r0 and h = -1 at R = r1.
double martingale_exponent(const SprtConfig& config, double true_rate) {
    const double log_ratio = config.event_llr();
    const double drift = config.drift_per_km();
    const auto f = [&](double h) {
        return true_rate * std::expm1(h * log_ratio) + h * drift;
    };
    const double slope_at_zero = true_rate * log_ratio + drift;
    if (slope_at_zero == 0.0) return 0.0;
    if (slope_at_zero < 0.0) {
        // root on the positive side
        double lo = 1e-12;
        if (f(lo) >= 0.0) return 0.0; // indistinguishable from the indifference point
        double hi = 1.0;
        int guard = 0;
        while (f(hi) <= 0.0) {
            lo = hi;
            hi *= 2.0;
            if (++guard > 80) throw numerical_error("sprt: failed to bracket the exponent");
        }
        return special::bisect(f, lo, hi, f(lo), f(hi), 1e-13).midpoint();
    }
    double hi = -1e-12;
    if (f(hi) >= 0.0) return 0.0;
    double lo = -1.0;
    int guard = 0;
    while (f(lo) <= 0.0) {
        hi = lo;
        lo *= 2.0;
        if (++guard > 80) throw numerical_error("sprt: failed to bracket the exponent");
    }
    return special::bisect(f, lo, hi, f(lo), f(hi), 1e-13).midpoint();
}

// P(hit upper boundary) = (1 - e^{h b}) / (e^{h a} - e^{h b}), evaluated
// through expm1 so the h -> 0 limit -b/(a-b) comes out of the same formula.
double wald_accept_from_h(double h, double a, double b) {
    if (h == 0.0) return -b / (a - b);
    const double ha = h * a;
    const double hb = h * b;
    if (ha > 700.0) return std::exp(-ha) * (-std::expm1(hb));
    if (hb > 700.0) return 1.0 + std::expm1(ha) * std::exp(-hb);
    const double p = -std::expm1(hb) / (std::expm1(ha) - std::expm1(hb));
    return std::clamp(p, 0.0, 1.0);
}

} // namespace

double sprt_accept_probability(const SprtConfig& config, double true_rate_per_km) {
    if (!(true_rate_per_km >= 0.0) || !std::isfinite(true_rate_per_km))
        throw validation_error("sprt: rate must be nonnegative and finite");
    if (true_rate_per_km == 0.0) return 1.0;
    const double h = martingale_exponent(config, true_rate_per_km);
    return wald_accept_from_h(h, config.upper_threshold(), config.lower_threshold());
}

double sprt_expected_distance(const SprtConfig& config, double true_rate_per_km) {
    if (!(true_rate_per_km >= 0.0) || !std::isfinite(true_rate_per_km))
        throw validation_error("sprt: rate must be nonnegative and finite");
    const double a = config.upper_threshold();
    const double b = config.lower_threshold();
    const double drift = config.drift_per_km();
    if (true_rate_per_km == 0.0) return a / drift; // deterministic climb to accept
    const double llr_drift = true_rate_per_km * config.event_llr() + drift;
    if (std::fabs(llr_drift) <= 1e-6 * drift) {
        // indifference point: first-order drift vanishes, use the second moment
        const double lr = config.event_llr();
        return -a * b / (true_rate_per_km * lr * lr);
    }
    const double accept = sprt_accept_probability(config, true_rate_per_km);
    return ((1.0 - accept) * b + accept * a) / llr_drift;
}

GammaPrior::GammaPrior(double shape_, double pseudo_distance_km_)
    : shape(shape_), pseudo_distance_km(pseudo_distance_km_) {
    if (!(shape > 0.0) || !std::isfinite(shape))
        throw validation_error("gamma prior: shape must be positive and finite");
    if (!(pseudo_distance_km >= 0.0) || !std::isfinite(pseudo_distance_km))
        throw validation_error("gamma prior: pseudo-distance must be nonnegative and finite");
}

GammaPrior bayes_posterior(const GammaPrior& prior, const EventLog& log) {
    return GammaPrior(prior.shape + static_cast<double>(log.event_stamps_km.size()),
                      prior.pseudo_distance_km + log.total_distance_km);
}

double gamma_rate_cdf(const GammaPrior& distribution, double rate_per_km) {
    if (!(rate_per_km >= 0.0) || !std::isfinite(rate_per_km))
        throw validation_error("gamma_rate_cdf: rate must be nonnegative and finite");
    return special::regularized_gamma_p(distribution.shape,
                                        rate_per_km * distribution.pseudo_distance_km);
}

Verdict bayes_decision(const GammaPrior& posterior, const AcceptanceCriterion& criterion,
                       double significance) {
    if (!(significance > 0.0) || !(significance < 1.0))
        throw validation_error("bayes_decision: significance must lie strictly between 0 and 1");
    const double credibility = gamma_rate_cdf(posterior, criterion.max_event_rate_per_km);
    return credibility >= 1.0 - significance ? Verdict::Pass : Verdict::Incomplete;
}

double bayes_required_distance(const GammaPrior& prior, const AcceptanceCriterion& criterion,
                               double significance, std::int64_t assumed_events) {
    if (!(significance > 0.0) || !(significance < 1.0))
        throw validation_error(
            "bayes_required_distance: significance must lie strictly between 0 and 1");
    if (assumed_events < 0)
        throw validation_error("bayes_required_distance: assumed events must be nonnegative");
    const double shape = prior.shape + static_cast<double>(assumed_events);
    const double rate = criterion.max_event_rate_per_km;
    const double needed = 1.0 - significance;
    const auto credibility_gap = [&](double t) {
        return special::regularized_gamma_p(shape, rate * (prior.pseudo_distance_km + t)) -
               needed;
    };
    const double at_zero = credibility_gap(0.0);
    if (at_zero >= 0.0) return 0.0; // prior alone is already conclusive
    double hi = (shape - std::log(significance)) / rate;
    int guard = 0;
    while (credibility_gap(hi) < 0.0) {
        hi *= 2.0;
        if (++guard > 200)
            throw numerical_error("bayes_required_distance: failed to bracket the distance");
    }
    const special::Bracket b =
        special::bisect(credibility_gap, 0.0, hi, at_zero, credibility_gap(hi), 1e-12);
    return b.hi; // the side where the credibility requirement holds
}

} // namespace qsv
