#pragma once

#include <json.hpp>

#include "qsv/adaptive.hpp"
#include "qsv/eva.hpp"
#include "qsv/simulate.hpp"
#include "qsv/types.hpp"

namespace qsv {

/// JSON views of the core artifacts. Numbers survive a round trip bit for
/// bit (shortest-representation printing, exact parsing), and every
/// from-json path runs through the validating constructors, so a tampered
/// document is rejected the same way a bad value would be.

nlohmann::json to_json(const HazardousBehavior& v);
nlohmann::json to_json(const TrafficStatistic& v);
nlohmann::json to_json(const Benchmark& v);
nlohmann::json to_json(const FactorSet& v);
nlohmann::json to_json(const AdjustmentStep& v);
nlohmann::json to_json(const AcceptanceCriterion& v);
nlohmann::json to_json(const TestParameters& v);
nlohmann::json to_json(const ValidationTarget& v);
nlohmann::json to_json(const EventLog& v);
nlohmann::json to_json(const GammaPrior& v);
nlohmann::json to_json(const SprtConfig& v);
nlohmann::json to_json(const GpdFit& v);
nlohmann::json to_json(const CampaignResult& v);

HazardousBehavior hazardous_behavior_from_json(const nlohmann::json& j);
TrafficStatistic traffic_statistic_from_json(const nlohmann::json& j);
Benchmark benchmark_from_json(const nlohmann::json& j);
FactorSet factor_set_from_json(const nlohmann::json& j);
AdjustmentStep adjustment_step_from_json(const nlohmann::json& j);
AcceptanceCriterion criterion_from_json(const nlohmann::json& j);
TestParameters test_parameters_from_json(const nlohmann::json& j);
ValidationTarget validation_target_from_json(const nlohmann::json& j);
EventLog event_log_from_json(const nlohmann::json& j);
GammaPrior gamma_prior_from_json(const nlohmann::json& j);
SprtConfig sprt_config_from_json(const nlohmann::json& j);

namespace jsonio {

/// Field accessors that name the missing or mistyped key in the error.
const nlohmann::json& require(const nlohmann::json& j, const char* key);
double get_number(const nlohmann::json& j, const char* key);
double get_number_or(const nlohmann::json& j, const char* key, double fallback);
std::int64_t get_integer(const nlohmann::json& j, const char* key);
std::int64_t get_integer_or(const nlohmann::json& j, const char* key, std::int64_t fallback);
std::string get_string(const nlohmann::json& j, const char* key);
std::string get_string_or(const nlohmann::json& j, const char* key, std::string fallback);
bool get_bool_or(const nlohmann::json& j, const char* key, bool fallback);

} // namespace jsonio

} // namespace qsv
