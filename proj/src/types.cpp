#include "qsv/types.hpp"

#include <cmath>
#include <utility>

namespace qsv {

namespace {

void require_finite_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw validation_error(std::string(what) + " must be positive and finite");
}

} // namespace

HazardousBehavior::HazardousBehavior(std::string id_, std::string description_,
                                     std::string severity_note_)
    : id(std::move(id_)), description(std::move(description_)),
      severity_note(std::move(severity_note_)) {
    if (id.empty()) throw validation_error("hazardous behavior id must not be empty");
}

TrafficStatistic::TrafficStatistic(double total_distance_km_per_year_,
                                   double events_per_year_, std::string source_)
    : total_distance_km_per_year(total_distance_km_per_year_),
      events_per_year(events_per_year_), source(std::move(source_)) {
    require_finite_positive(total_distance_km_per_year, "traffic statistic: total distance");
    require_finite_positive(events_per_year, "traffic statistic: events per year");
}

Benchmark::Benchmark(TrafficStatistic statistic_)
    : distance_between_events_km(statistic_.total_distance_km_per_year /
                                 statistic_.events_per_year),
      statistic(std::move(statistic_)) {
    require_finite_positive(distance_between_events_km, "benchmark distance");
}

Benchmark::Benchmark(double distance_between_events_km_, TrafficStatistic statistic_)
    : distance_between_events_km(distance_between_events_km_),
      statistic(std::move(statistic_)) {
    require_finite_positive(distance_between_events_km, "benchmark distance");
    const double expected =
        statistic.total_distance_km_per_year / statistic.events_per_year;
    if (distance_between_events_km != expected)
        throw integrity_error("benchmark distance does not match its statistic");
}

FactorSet::FactorSet(double safety_factor_, double reference_share_,
                     double effectiveness_)
    : safety_factor(safety_factor_), reference_share(reference_share_),
      effectiveness(effectiveness_) {
    if (!(safety_factor >= 1.0) || !std::isfinite(safety_factor))
        throw validation_error("safety factor must be >= 1 and finite");
    if (!(reference_share > 0.0) || !(reference_share <= 1.0))
        throw validation_error("reference share must lie in (0, 1]");
    if (!(effectiveness > 0.0) || !(effectiveness <= 1.0))
        throw validation_error("effectiveness must lie in (0, 1]");
}

AdjustmentStep::AdjustmentStep(double factor_, std::string reason_)
    : factor(factor_), reason(std::move(reason_)) {
    require_finite_positive(factor, "adjustment factor");
}

double recombined_rate(const FactorSet& factors, const Benchmark& benchmark,
                       const std::vector<AdjustmentStep>& adjustments) {
    double rate = (factors.reference_share * factors.effectiveness) /
                  (factors.safety_factor * benchmark.distance_between_events_km);
    for (const AdjustmentStep& step : adjustments) rate *= step.factor;
    return rate;
}

AcceptanceCriterion::AcceptanceCriterion(double max_event_rate_per_km_,
                                         HazardousBehavior behavior_,
                                         RiskAcceptanceRationale rationale_,
                                         FactorSet factors_, Benchmark benchmark_,
                                         std::vector<AdjustmentStep> adjustments_)
    : max_event_rate_per_km(max_event_rate_per_km_), behavior(std::move(behavior_)),
      rationale(rationale_), factors(factors_), benchmark(std::move(benchmark_)),
      adjustments(std::move(adjustments_)) {
    require_finite_positive(max_event_rate_per_km, "acceptance criterion rate");
    if (max_event_rate_per_km != recombined_rate(factors, benchmark, adjustments))
        throw integrity_error(
            "acceptance criterion rate is not reproduced by its factor trail");
}

TestParameters::TestParameters(double significance_, std::int64_t allowed_events_)
    : significance(significance_), allowed_events(allowed_events_) {
    if (!(significance > 0.0) || !(significance < 1.0))
        throw validation_error("significance must lie strictly between 0 and 1");
    if (allowed_events < 0)
        throw validation_error("allowed event count must be nonnegative");
}

ValidationTarget::ValidationTarget(double required_distance_km_, TestParameters params_,
                                   AcceptanceCriterion criterion_, StatModel model_)
    : required_distance_km(required_distance_km_), params(params_),
      criterion(std::move(criterion_)), model(model_) {
    require_finite_positive(required_distance_km, "required distance");
}

EventLog::EventLog(double total_distance_km_, std::vector<double> event_stamps_km_,
                   std::vector<PmSample> pm_samples_)
    : total_distance_km(total_distance_km_),
      event_stamps_km(std::move(event_stamps_km_)),
      pm_samples(std::move(pm_samples_)) {
    if (!(total_distance_km >= 0.0) || !std::isfinite(total_distance_km))
        throw validation_error("event log: total distance must be nonnegative and finite");
    double prev = -1.0;
    for (const double s : event_stamps_km) {
        if (!std::isfinite(s) || s < 0.0 || s > total_distance_km)
            throw validation_error("event log: stamp outside [0, total distance]");
        if (s <= prev && prev >= 0.0)
            throw validation_error("event log: stamps must be strictly increasing");
        prev = s;
    }
    prev = 0.0;
    for (const PmSample& p : pm_samples) {
        if (!std::isfinite(p.distance_km) || p.distance_km <= 0.0 ||
            p.distance_km > total_distance_km)
            throw validation_error(
                "event log: performance sample outside (0, total distance]");
        if (p.distance_km <= prev && prev > 0.0)
            throw validation_error(
                "event log: performance samples must be strictly increasing in distance");
        if (!std::isfinite(p.value))
            throw validation_error("event log: performance value must be finite");
        prev = p.distance_km;
    }
}

const char* to_string(RiskAcceptanceRationale r) {
    switch (r) {
        case RiskAcceptanceRationale::Alarp: return "ALARP";
        case RiskAcceptanceRationale::Mem: return "MEM";
        case RiskAcceptanceRationale::Prb: return "PRB";
        case RiskAcceptanceRationale::GameGamab: return "GAME/GAMAB";
        case RiskAcceptanceRationale::Enfli: return "ENFLI";
        case RiskAcceptanceRationale::Other: return "other";
    }
    return "other";
}

const char* to_string(StatModel m) {
    switch (m) {
        case StatModel::PoissonNhst: return "poisson_nhst";
        case StatModel::Sprt: return "sprt";
        case StatModel::BayesGammaPoisson: return "bayes_gamma_poisson";
        case StatModel::Eva: return "eva";
    }
    return "poisson_nhst";
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::Incomplete: return "incomplete";
    }
    return "incomplete";
}

RiskAcceptanceRationale rationale_from_string(const std::string& s) {
    if (s == "ALARP") return RiskAcceptanceRationale::Alarp;
    if (s == "MEM") return RiskAcceptanceRationale::Mem;
    if (s == "PRB") return RiskAcceptanceRationale::Prb;
    if (s == "GAME/GAMAB") return RiskAcceptanceRationale::GameGamab;
    if (s == "ENFLI") return RiskAcceptanceRationale::Enfli;
    if (s == "other") return RiskAcceptanceRationale::Other;
    throw validation_error("unknown risk-acceptance rationale: " + s);
}

StatModel stat_model_from_string(const std::string& s) {
    if (s == "poisson_nhst") return StatModel::PoissonNhst;
    if (s == "sprt") return StatModel::Sprt;
    if (s == "bayes_gamma_poisson") return StatModel::BayesGammaPoisson;
    if (s == "eva") return StatModel::Eva;
    throw validation_error("unknown statistical model: " + s);
}

} // namespace qsv
