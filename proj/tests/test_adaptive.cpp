#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracle.hpp"
#include "qsv/acceptance.hpp"
#include "qsv/adaptive.hpp"
#include "qsv/errors.hpp"
#include "qsv/frequentist.hpp"
#include "qsv/rng.hpp"
#include "qsv/types.hpp"

using namespace qsv;

namespace {

double rel_err(double got, double want) {
    if (want == 0.0) return std::fabs(got);
    return std::fabs(got - want) / std::fabs(want);
}

AcceptanceCriterion inverse_km_criterion(double rate_per_km) {
    const Benchmark b = derive_benchmark(TrafficStatistic(1.0 / rate_per_km, 1.0));
    return derive_acceptance_criterion(b, FactorSet{}, HazardousBehavior("hb"),
                                       RiskAcceptanceRationale::Prb);
}

const SprtConfig kReference(1e-6, 5e-7, 0.05, 0.05);

} // namespace

TEST_CASE("sprt config validates its hypotheses and error targets") {
    CHECK_THROWS_AS(SprtConfig(1e-6, 1e-6, 0.05, 0.05), validation_error);
    CHECK_THROWS_AS(SprtConfig(1e-6, 2e-6, 0.05, 0.05), validation_error);
    CHECK_THROWS_AS(SprtConfig(1e-6, 0.0, 0.05, 0.05), validation_error);
    CHECK_THROWS_AS(SprtConfig(1e-6, 5e-7, 0.0, 0.05), validation_error);
    CHECK_THROWS_AS(SprtConfig(1e-6, 5e-7, 0.6, 0.5), validation_error);
    CHECK_THROWS_AS(SprtConfig(1e-6, 5e-7, 0.05, 0.05, -1.0), validation_error);
    CHECK(kReference.upper_threshold() == doctest::Approx(std::log(19.0)));
    CHECK(kReference.lower_threshold() == doctest::Approx(-std::log(19.0)));
    CHECK(kReference.upper_threshold() > 0.0);
    CHECK(kReference.lower_threshold() < 0.0);
    CHECK(kReference.event_llr() == doctest::Approx(std::log(0.5)));
    CHECK(kReference.drift_per_km() == doctest::Approx(5e-7));
}

TEST_CASE("event-free driving accepts at the threshold distance") {
    // llr grows by drift * distance when nothing happens; acceptance at
    // ln((1-beta)/alpha) / (r0 - r1)
    const double accept_km = std::log(19.0) / 5e-7;
    CHECK(accept_km == doctest::Approx(5.888878e6).epsilon(1e-6));

    SprtState state;
    state = sprt_update(kReference, state, accept_km * 0.999, 0);
    CHECK(state.decision == SprtDecision::Continue);
    state = sprt_update(kReference, state, accept_km * 0.002, 0);
    CHECK(state.decision == SprtDecision::AcceptSafe);
    CHECK(state.events == 0);
}

TEST_CASE("a strong discrimination point approaches the fixed-test distance") {
    // as rate_h1 goes to zero the zero-event acceptance distance approaches
    // ln((1-beta)/alpha) / r0, about 2.944e6 km here
    const SprtConfig config(1e-6, 1e-12, 0.05, 0.05);
    const double accept_km = config.upper_threshold() / config.drift_per_km();
    CHECK(rel_err(accept_km, std::log(19.0) / 1e-6) < 1e-5);
}

TEST_CASE("an event at distance zero drops the ratio by the event llr") {
    SprtState state = sprt_update(kReference, SprtState{}, 0.0, 1);
    CHECK(state.log_likelihood_ratio == doctest::Approx(std::log(0.5)).epsilon(1e-14));
    CHECK(state.events == 1);
    CHECK(state.distance_km == 0.0);
    CHECK(state.decision == SprtDecision::Continue);
}

TEST_CASE("sprt update rejects invalid increments") {
    CHECK_THROWS_AS(sprt_update(kReference, SprtState{}, -1.0, 0), validation_error);
    CHECK_THROWS_AS(sprt_update(kReference, SprtState{}, 1.0, -1), validation_error);
}

TEST_CASE("the ratio is additive over any partition of the same drive") {
    SplitMix64 rng(0xabcdefULL);
    for (int round = 0; round < 50; ++round) {
        const double total = 1e6 * (0.5 + rng.uniform());
        const std::int64_t events = static_cast<std::int64_t>(rng.next() % 8);

        SprtState one_shot = sprt_update(kReference, SprtState{}, total, events);

        SprtState pieces;
        double remaining = total;
        std::int64_t remaining_events = events;
        while (remaining > 0.0 && pieces.decision == SprtDecision::Continue) {
            double step = remaining * rng.uniform();
            if (remaining < 1.0) step = remaining;
            const std::int64_t e = remaining_events > 0 ? (rng.next() % 2) : 0;
            pieces = sprt_update(kReference, pieces, step, e);
            remaining -= step;
            remaining_events -= e;
        }
        if (remaining_events > 0 && pieces.decision == SprtDecision::Continue)
            pieces = sprt_update(kReference, pieces, 0.0, remaining_events);

        if (pieces.decision == SprtDecision::Continue &&
            one_shot.decision == SprtDecision::Continue) {
            CAPTURE(round);
            CHECK(rel_err(pieces.log_likelihood_ratio, one_shot.log_likelihood_ratio) <
                  1e-11);
            CHECK(pieces.events == one_shot.events);
        }
    }
}

TEST_CASE("an event burst rejects and further updates are protocol errors") {
    SprtState state = sprt_update(kReference, SprtState{}, 100.0, 25);
    CHECK(state.decision == SprtDecision::RejectSafe);
    CHECK_THROWS_AS(sprt_update(kReference, state, 1.0, 0), protocol_error);
}

TEST_CASE("truncation decides for the closest boundary and ties reject") {
    const double a = kReference.upper_threshold();
    const double b = kReference.lower_threshold();

    SprtState high;
    high.log_likelihood_ratio = 0.9 * a;
    high.distance_km = 1e6;
    CHECK(sprt_finalize_at_truncation(kReference, high).decision ==
          SprtDecision::AcceptSafe);

    SprtState low;
    low.log_likelihood_ratio = 0.9 * b;
    low.distance_km = 1e6;
    CHECK(sprt_finalize_at_truncation(kReference, low).decision ==
          SprtDecision::RejectSafe);

    SprtState tie;
    tie.log_likelihood_ratio = 0.5 * (a + b); // equidistant
    tie.distance_km = 1e6;
    CHECK(sprt_finalize_at_truncation(kReference, tie).decision ==
          SprtDecision::RejectSafe);

    // finalizing adds no evidence, so it is idempotent on a decided state
    SprtState decided = low;
    decided.decision = SprtDecision::AcceptSafe;
    CHECK(sprt_finalize_at_truncation(kReference, decided).decision ==
          SprtDecision::AcceptSafe);
}

TEST_CASE("wald operating characteristic hits the design points exactly") {
    for (const auto& [alpha, beta] : std::vector<std::pair<double, double>>{
             {0.05, 0.05}, {0.1, 0.2}, {0.01, 0.1}}) {
        const SprtConfig config(1e-6, 5e-7, alpha, beta);
        CAPTURE(alpha);
        CAPTURE(beta);
        CHECK(rel_err(sprt_accept_probability(config, 1e-6), alpha) < 1e-9);
        CHECK(rel_err(sprt_accept_probability(config, 5e-7), 1.0 - beta) < 1e-9);
    }
}

TEST_CASE("accept probability is monotone falling in the true rate") {
    double previous = 1.1;
    for (double rate : {0.0, 1e-7, 3e-7, 5e-7, 7e-7, 1e-6, 2e-6, 5e-6}) {
        const double p = sprt_accept_probability(kReference, rate);
        CAPTURE(rate);
        CHECK(p < previous);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        previous = p;
    }
    CHECK(sprt_accept_probability(kReference, 0.0) == 1.0);
}

TEST_CASE("expected distance is continuous through the indifference rate") {
    // the rate at which the ratio neither climbs nor falls on average
    const double r0 = kReference.rate_h0_per_km;
    const double r1 = kReference.rate_h1_per_km;
    const double indifference = (r0 - r1) / std::log(r0 / r1);
    const double at = sprt_expected_distance(kReference, indifference);
    const double just_below = sprt_expected_distance(kReference, indifference * (1 - 1e-7));
    const double just_above = sprt_expected_distance(kReference, indifference * (1 + 1e-7));
    CHECK(rel_err(just_below, at) < 1e-3);
    CHECK(rel_err(just_above, at) < 1e-3);

    const double a = kReference.upper_threshold();
    const double b = kReference.lower_threshold();
    const double lr = std::log(r1 / r0);
    CHECK(rel_err(at, -a * b / (indifference * lr * lr)) < 1e-9);
    // event-free limit
    CHECK(rel_err(sprt_expected_distance(kReference, 0.0), a / (r0 - r1)) < 1e-12);
}

TEST_CASE("simulated sprt error rates stay inside the wald bounds") {
    // small replication of the operating characteristic; the acceptance
    // suite runs the full-size version
    auto simulate_once = [](const SprtConfig& config, double true_rate,
                            std::uint64_t seed) {
        SplitMix64 rng(seed);
        SprtState state;
        while (state.decision == SprtDecision::Continue) {
            const double gap = exponential_gap(rng, true_rate);
            state = sprt_update(config, state, gap, 0);
            if (state.decision != SprtDecision::Continue) break;
            state = sprt_update(config, state, 0.0, 1);
        }
        return state.decision;
    };

    const int n = 2000;
    int accepts_at_h0 = 0;
    int rejects_at_h1 = 0;
    for (int i = 0; i < n; ++i) {
        if (simulate_once(kReference, kReference.rate_h0_per_km,
                          replication_seed(0x5151u, static_cast<std::uint64_t>(i))) ==
            SprtDecision::AcceptSafe)
            ++accepts_at_h0;
        if (simulate_once(kReference, kReference.rate_h1_per_km,
                          replication_seed(0x5252u, static_cast<std::uint64_t>(i))) ==
            SprtDecision::RejectSafe)
            ++rejects_at_h1;
    }
    const double alpha_hat = static_cast<double>(accepts_at_h0) / n;
    const double beta_hat = static_cast<double>(rejects_at_h1) / n;
    const double se = std::sqrt(0.05 * 0.95 / n); // about 0.0049
    // the unsafe-side rate may exceed alpha by the overshoot-free bound
    // alpha / (1 - beta); the safe-side rate must respect beta itself
    CHECK(alpha_hat <= 0.05 / 0.95 + 3.0 * se);
    CHECK(beta_hat <= 0.05 + 3.0 * se);
    CHECK(alpha_hat > 0.0);
}

TEST_CASE("gamma prior validates and updates conjugately") {
    CHECK_THROWS_AS(GammaPrior(0.0, 1.0), validation_error);
    CHECK_THROWS_AS(GammaPrior(1.0, -1.0), validation_error);
    CHECK_NOTHROW(GammaPrior(1.0, 0.0));

    const GammaPrior prior(2.5, 1e5);
    const EventLog log(4e5, {1e3, 2e5});
    const GammaPrior posterior = bayes_posterior(prior, log);
    CHECK(posterior.shape == 2.5 + 2.0);
    CHECK(posterior.pseudo_distance_km == 1e5 + 4e5);
}

TEST_CASE("gamma rate cdf closed forms and quadrature oracle") {
    // no pseudo-evidence means no credibility at any finite rate
    const GammaPrior flat(1.0, 0.0);
    CHECK(gamma_rate_cdf(flat, 1e-6) == 0.0);
    CHECK(gamma_rate_cdf(flat, 1e6) == 0.0);

    // shape 1 is exponential: P(R <= r) = 1 - exp(-r t)
    const GammaPrior unit(1.0, 2e6);
    for (double rate : {1e-8, 1e-7, 1e-6, 5e-6})
        CHECK(rel_err(gamma_rate_cdf(unit, rate), -std::expm1(-rate * 2e6)) < 1e-13);

    // general shapes against adaptive quadrature of the density
    for (double shape : {1.0, 2.0, 7.5}) {
        for (double rate : {5e-7, 1e-6, 3e-6}) {
            const GammaPrior g(shape, 1.5e6);
            const double want = static_cast<double>(
                oracle::gamma_rate_cdf(shape, 1.5e6, rate));
            CAPTURE(shape);
            CAPTURE(rate);
            CHECK(rel_err(gamma_rate_cdf(g, rate), want) < 1e-9);
        }
    }
}

TEST_CASE("bayes decision passes only with enough credibility") {
    const AcceptanceCriterion criterion = inverse_km_criterion(1e-6);
    const double needed = -std::log(0.05) / 1e-6;
    const GammaPrior enough(1.0, needed * (1 + 1e-9));
    const GammaPrior not_enough(1.0, needed * (1 - 1e-9));
    CHECK(bayes_decision(enough, criterion, 0.05) == Verdict::Pass);
    CHECK(bayes_decision(not_enough, criterion, 0.05) == Verdict::Incomplete);
    CHECK_THROWS_AS(bayes_decision(enough, criterion, 0.0), validation_error);
    CHECK_THROWS_AS(bayes_decision(enough, criterion, 1.0), validation_error);
}

TEST_CASE("bayes required distance from the reference prior is the fixed test") {
    const AcceptanceCriterion criterion = inverse_km_criterion(1e-6);
    const GammaPrior reference(1.0, 0.0);
    const double required = bayes_required_distance(reference, criterion, 0.05);
    CHECK(rel_err(required, -std::log(0.05) / 1e-6) < 1e-11);
}

TEST_CASE("bayes required distance credits prior pseudo-distance linearly") {
    const AcceptanceCriterion criterion = inverse_km_criterion(1e-6);
    const double bare = -std::log(0.05) / 1e-6;
    const GammaPrior informed(1.0, 1e6);
    const double required = bayes_required_distance(informed, criterion, 0.05);
    CHECK(rel_err(required, bare - 1e6) < 1e-9);
}

TEST_CASE("a conclusive prior requires no further distance") {
    const AcceptanceCriterion criterion = inverse_km_criterion(1e-6);
    const GammaPrior conclusive(1.0, 1e8);
    CHECK(bayes_required_distance(conclusive, criterion, 0.05) == 0.0);
}

TEST_CASE("bayes required distance lands on the passing side") {
    const AcceptanceCriterion criterion = inverse_km_criterion(1e-6);
    for (double shape : {1.0, 2.0, 5.0}) {
        for (std::int64_t assumed : {std::int64_t{0}, std::int64_t{2}}) {
            const GammaPrior prior(shape, 5e5);
            const double required =
                bayes_required_distance(prior, criterion, 0.05, assumed);
            CAPTURE(shape);
            CAPTURE(assumed);
            const GammaPrior at(prior.shape + static_cast<double>(assumed),
                                prior.pseudo_distance_km + required);
            CHECK(gamma_rate_cdf(at, 1e-6) >= 0.95);
            const GammaPrior below(prior.shape + static_cast<double>(assumed),
                                   prior.pseudo_distance_km + required * (1 - 1e-6));
            CHECK(gamma_rate_cdf(below, 1e-6) < 0.95);
        }
    }
}

TEST_CASE("flat-prior bayes with assumed events matches the frequentist plan") {
    // with the reference prior and k assumed events the credibility demand
    // reproduces the fixed-distance plan for k allowed events
    const AcceptanceCriterion criterion = inverse_km_criterion(1e-6);
    for (std::int64_t k : {0, 1, 2, 5}) {
        for (double alpha : {0.01, 0.05, 0.1}) {
            const double bayes_km = bayes_required_distance(GammaPrior(1.0, 0.0),
                                                            criterion, alpha, k);
            const double freq_km =
                validation_target(criterion, TestParameters(alpha, k)).required_distance_km;
            CAPTURE(k);
            CAPTURE(alpha);
            CHECK(rel_err(bayes_km, freq_km) < 1e-10);
        }
    }
}
