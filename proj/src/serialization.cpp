#include "qsv/serialization.hpp"

namespace qsv {

using nlohmann::json;

namespace jsonio {

const json& require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key))
        throw ingestion_error(std::string("missing field '") + key + "'");
    return j.at(key);
}

double get_number(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number())
        throw ingestion_error(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

double get_number_or(const json& j, const char* key, double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return get_number(j, key);
}

std::int64_t get_integer(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number_integer())
        throw ingestion_error(std::string("field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

std::int64_t get_integer_or(const json& j, const char* key, std::int64_t fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return get_integer(j, key);
}

std::string get_string(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_string())
        throw ingestion_error(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::string get_string_or(const json& j, const char* key, std::string fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return get_string(j, key);
}

bool get_bool_or(const json& j, const char* key, bool fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean())
        throw ingestion_error(std::string("field '") + key + "' must be a boolean");
    return v.get<bool>();
}

} // namespace jsonio

using namespace jsonio;

json to_json(const HazardousBehavior& v) {
    return {{"id", v.id}, {"description", v.description}, {"severity_note", v.severity_note}};
}

json to_json(const TrafficStatistic& v) {
    return {{"total_distance_km_per_year", v.total_distance_km_per_year},
            {"events_per_year", v.events_per_year},
            {"source", v.source}};
}

json to_json(const Benchmark& v) {
    return {{"distance_between_events_km", v.distance_between_events_km},
            {"statistic", to_json(v.statistic)}};
}

json to_json(const FactorSet& v) {
    return {{"safety_factor", v.safety_factor},
            {"reference_share", v.reference_share},
            {"effectiveness", v.effectiveness}};
}

json to_json(const AdjustmentStep& v) {
    return {{"factor", v.factor}, {"reason", v.reason}};
}

json to_json(const AcceptanceCriterion& v) {
    json adjustments = json::array();
    for (const AdjustmentStep& s : v.adjustments) adjustments.push_back(to_json(s));
    return {{"max_event_rate_per_km", v.max_event_rate_per_km},
            {"behavior", to_json(v.behavior)},
            {"rationale", to_string(v.rationale)},
            {"factors", to_json(v.factors)},
            {"benchmark", to_json(v.benchmark)},
            {"adjustments", std::move(adjustments)}};
}

json to_json(const TestParameters& v) {
    return {{"significance", v.significance}, {"allowed_events", v.allowed_events}};
}

json to_json(const ValidationTarget& v) {
    return {{"required_distance_km", v.required_distance_km},
            {"params", to_json(v.params)},
            {"criterion", to_json(v.criterion)},
            {"model", to_string(v.model)}};
}

json to_json(const EventLog& v) {
    json pm = json::array();
    for (const PmSample& s : v.pm_samples)
        pm.push_back({{"distance_km", s.distance_km}, {"value", s.value}});
    return {{"total_distance_km", v.total_distance_km},
            {"event_stamps_km", v.event_stamps_km},
            {"pm_samples", std::move(pm)}};
}

json to_json(const GammaPrior& v) {
    return {{"shape", v.shape}, {"pseudo_distance_km", v.pseudo_distance_km}};
}

json to_json(const SprtConfig& v) {
    json j = {{"rate_h0_per_km", v.rate_h0_per_km},
              {"rate_h1_per_km", v.rate_h1_per_km},
              {"alpha", v.alpha},
              {"beta", v.beta}};
    if (v.truncation_km) j["truncation_km"] = *v.truncation_km;
    return j;
}

json to_json(const GpdFit& v) {
    json j = {{"shape", v.shape},
              {"scale", v.scale},
              {"exceedance_rate_per_km", v.exceedance_rate_per_km},
              {"count", v.count},
              {"log_likelihood", v.log_likelihood},
              {"at_search_bound", v.at_search_bound}};
    if (v.excess_endpoint) j["excess_endpoint"] = *v.excess_endpoint;
    return j;
}

json to_json(const CampaignResult& v) {
    json outcomes = json::array();
    for (const ReplicationOutcome& o : v.outcomes)
        outcomes.push_back({{"verdict", to_string(o.verdict)},
                            {"decision_distance_km", o.decision_distance_km}});
    return {{"replications", v.replications},
            {"passes", v.passes},
            {"fails", v.fails},
            {"incompletes", v.incompletes},
            {"pass_fraction", v.pass_fraction},
            {"pass_fraction_se", v.pass_fraction_se},
            {"mean_decision_distance_km", v.mean_decision_distance_km},
            {"outcomes", std::move(outcomes)}};
}

HazardousBehavior hazardous_behavior_from_json(const json& j) {
    return HazardousBehavior(get_string(j, "id"), get_string_or(j, "description", ""),
                             get_string_or(j, "severity_note", ""));
}

TrafficStatistic traffic_statistic_from_json(const json& j) {
    return TrafficStatistic(get_number(j, "total_distance_km_per_year"),
                            get_number(j, "events_per_year"),
                            get_string_or(j, "source", ""));
}

Benchmark benchmark_from_json(const json& j) {
    TrafficStatistic statistic = traffic_statistic_from_json(require(j, "statistic"));
    return Benchmark(get_number(j, "distance_between_events_km"), std::move(statistic));
}

FactorSet factor_set_from_json(const json& j) {
    return FactorSet(get_number_or(j, "safety_factor", 1.0),
                     get_number_or(j, "reference_share", 1.0),
                     get_number_or(j, "effectiveness", 1.0));
}

AdjustmentStep adjustment_step_from_json(const json& j) {
    return AdjustmentStep(get_number(j, "factor"), get_string_or(j, "reason", ""));
}

AcceptanceCriterion criterion_from_json(const json& j) {
    std::vector<AdjustmentStep> adjustments;
    if (j.contains("adjustments")) {
        const json& list = j.at("adjustments");
        if (!list.is_array())
            throw ingestion_error("field 'adjustments' must be an array");
        for (const json& item : list) adjustments.push_back(adjustment_step_from_json(item));
    }
    return AcceptanceCriterion(get_number(j, "max_event_rate_per_km"),
                               hazardous_behavior_from_json(require(j, "behavior")),
                               rationale_from_string(get_string(j, "rationale")),
                               factor_set_from_json(require(j, "factors")),
                               benchmark_from_json(require(j, "benchmark")),
                               std::move(adjustments));
}

TestParameters test_parameters_from_json(const json& j) {
    return TestParameters(get_number(j, "significance"), get_integer(j, "allowed_events"));
}

ValidationTarget validation_target_from_json(const json& j) {
    return ValidationTarget(get_number(j, "required_distance_km"),
                            test_parameters_from_json(require(j, "params")),
                            criterion_from_json(require(j, "criterion")),
                            stat_model_from_string(get_string(j, "model")));
}

EventLog event_log_from_json(const json& j) {
    std::vector<double> stamps;
    if (j.contains("event_stamps_km")) {
        const json& list = j.at("event_stamps_km");
        if (!list.is_array())
            throw ingestion_error("field 'event_stamps_km' must be an array");
        for (const json& item : list) {
            if (!item.is_number())
                throw ingestion_error("event stamps must be numbers");
            stamps.push_back(item.get<double>());
        }
    }
    std::vector<PmSample> pm;
    if (j.contains("pm_samples")) {
        const json& list = j.at("pm_samples");
        if (!list.is_array())
            throw ingestion_error("field 'pm_samples' must be an array");
        for (const json& item : list)
            pm.push_back(PmSample{get_number(item, "distance_km"), get_number(item, "value")});
    }
    return EventLog(get_number(j, "total_distance_km"), std::move(stamps), std::move(pm));
}

GammaPrior gamma_prior_from_json(const json& j) {
    return GammaPrior(get_number(j, "shape"), get_number(j, "pseudo_distance_km"));
}

SprtConfig sprt_config_from_json(const json& j) {
    std::optional<double> truncation;
    if (j.contains("truncation_km") && !j.at("truncation_km").is_null())
        truncation = get_number(j, "truncation_km");
    return SprtConfig(get_number(j, "rate_h0_per_km"), get_number(j, "rate_h1_per_km"),
                      get_number(j, "alpha"), get_number(j, "beta"), truncation);
}

} // namespace qsv
