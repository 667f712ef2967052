#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsv/errors.hpp"

namespace qsv {

/// One vehicle-level hazardous behavior whose residual risk is being
/// quantified. Criteria, targets and log evaluations are all per behavior.
struct HazardousBehavior {
    std::string id;
    std::string description;
    std::string severity_note;

    explicit HazardousBehavior(std::string id_, std::string description_ = "",
                               std::string severity_note_ = "");
};

/// Field statistics a benchmark is taken from. The distance is an
/// upper-bound estimate and the event count a lower-bound estimate, so the
/// derived benchmark distance errs on the demanding side.
struct TrafficStatistic {
    double total_distance_km_per_year;
    double events_per_year;
    std::string source;

    TrafficStatistic(double total_distance_km_per_year_, double events_per_year_,
                     std::string source_ = "");
};

/// Mean distance between events of the benchmarked population.
/// Invariant: distance_between_events_km equals the quotient of the two
/// statistic fields bit for bit.
struct Benchmark {
    double distance_between_events_km;
    TrafficStatistic statistic;

    explicit Benchmark(TrafficStatistic statistic_);
    /// Reconstructing constructor (deserialization); rejects a stored
    /// distance that disagrees with the statistic.
    Benchmark(double distance_between_events_km_, TrafficStatistic statistic_);
};

/// Multiplicative adjustments applied when turning a benchmark into an
/// acceptance criterion. Defaults are the identity.
struct FactorSet {
    /// >= 1; tightens the criterion relative to the benchmark.
    double safety_factor = 1.0;
    /// (0, 1]; share of benchmark events that remain comparable once events
    /// with a justified cause are excluded from the reference data.
    double reference_share = 1.0;
    /// (0, 1]; fraction of the remaining benchmark events the system under
    /// test could plausibly prevent.
    double effectiveness = 1.0;

    FactorSet() = default;
    FactorSet(double safety_factor_, double reference_share_, double effectiveness_);
};

/// Risk-acceptance principle the criterion derivation is justified under.
enum class RiskAcceptanceRationale { Alarp, Mem, Prb, GameGamab, Enfli, Other };

/// One multiplicative step applied on top of the base derivation (budget
/// share, precursor scaling). Steps are ordered; replaying them reproduces
/// the stored rate exactly.
struct AdjustmentStep {
    double factor;
    std::string reason;

    AdjustmentStep(double factor_, std::string reason_);
};

/// Canonical recombination of a criterion's derivation: base rate from the
/// factor set and benchmark, then the adjustment steps in order. Every code
/// path that produces a criterion rate goes through this one function, so
/// recombination reproduces stored rates bit for bit.
double recombined_rate(const FactorSet& factors, const Benchmark& benchmark,
                       const std::vector<AdjustmentStep>& adjustments);

/// Maximum acceptable event rate for one hazardous behavior, together with
/// the complete audit trail of how it was derived.
struct AcceptanceCriterion {
    double max_event_rate_per_km;
    HazardousBehavior behavior;
    RiskAcceptanceRationale rationale;
    FactorSet factors;
    Benchmark benchmark;
    std::vector<AdjustmentStep> adjustments;

    AcceptanceCriterion(double max_event_rate_per_km_, HazardousBehavior behavior_,
                        RiskAcceptanceRationale rationale_, FactorSet factors_,
                        Benchmark benchmark_,
                        std::vector<AdjustmentStep> adjustments_ = {});
};

/// Parameters of a fixed-distance hypothesis test: significance level and
/// the number of events the test tolerates before failing.
struct TestParameters {
    double significance;
    std::int64_t allowed_events;

    TestParameters(double significance_, std::int64_t allowed_events_);
};

enum class StatModel { PoissonNhst, Sprt, BayesGammaPoisson, Eva };

/// A planned validation test: drive required_distance_km and pass if at most
/// params.allowed_events events occur.
struct ValidationTarget {
    double required_distance_km;
    TestParameters params;
    AcceptanceCriterion criterion;
    StatModel model;

    ValidationTarget(double required_distance_km_, TestParameters params_,
                     AcceptanceCriterion criterion_, StatModel model_);
};

/// One performance-measure observation at a distance stamp.
struct PmSample {
    double distance_km;
    double value;
};

/// Outcome record of (part of) a field test: cumulative distance, event
/// distance stamps, and optional performance-measure samples.
/// Stamps are strictly increasing and lie within [0, total_distance_km].
struct EventLog {
    double total_distance_km;
    std::vector<double> event_stamps_km;
    std::vector<PmSample> pm_samples;

    explicit EventLog(double total_distance_km_,
                      std::vector<double> event_stamps_km_ = {},
                      std::vector<PmSample> pm_samples_ = {});
};

/// Outcome of applying a decision rule to an event log.
enum class Verdict { Pass, Fail, Incomplete };

const char* to_string(RiskAcceptanceRationale r);
const char* to_string(StatModel m);
const char* to_string(Verdict v);
RiskAcceptanceRationale rationale_from_string(const std::string& s);
StatModel stat_model_from_string(const std::string& s);

} // namespace qsv
