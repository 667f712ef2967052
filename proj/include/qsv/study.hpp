#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsv/adaptive.hpp"
#include "qsv/eva.hpp"
#include "qsv/simulate.hpp"
#include "qsv/structural.hpp"
#include "qsv/types.hpp"

namespace qsv {

/// Study configuration: one hazardous behavior, the benchmark inputs, the
/// base test parameters, and the optional method sections. Parsed from a
/// JSON document; every value runs through the core validating constructors.

struct SensitivitySpec {
    std::vector<double> significances;
    std::vector<std::int64_t> allowed_events;
};

struct SprtSpec {
    double rate_h1_per_km;
    double alpha;
    double beta;
    std::optional<double> truncation_km;
};

struct BayesSpec {
    GammaPrior prior;
    double significance;
    std::int64_t assumed_events;
};

struct BudgetSpec {
    std::vector<BudgetShare> shares;
};

struct EvaSpec {
    PotConfig pot;
    double confidence;
    std::optional<double> expected_exceedances_per_km;
    std::size_t bootstrap_resamples; // 0 disables the cross-check
};

struct SimulationSpec {
    CampaignMethod method;
    std::int64_t replications;
    std::uint64_t seed;
    GroundTruth truth;
    std::vector<double> sampling_profile;
    std::optional<double> eva_distance_km;
};

struct StudyConfig {
    HazardousBehavior behavior;
    TrafficStatistic statistic;
    FactorSet factors;
    RiskAcceptanceRationale rationale;
    TestParameters test;
    int digits = 6;
    std::optional<SensitivitySpec> sensitivity;
    std::optional<SprtSpec> sprt;
    std::optional<BayesSpec> bayes;
    std::optional<HbDecomposition> decomposition;
    std::optional<BudgetSpec> budget;
    std::optional<RedundancyModel> redundancy;
    std::optional<EvaSpec> eva;
    std::optional<SimulationSpec> simulation;

    static StudyConfig load(const std::string& path);
    static StudyConfig parse(const nlohmann::json& document, const std::string& base_dir);

    Benchmark benchmark() const;
    AcceptanceCriterion criterion() const;
    /// SPRT design with the criterion rate as the unsafe hypothesis.
    SprtConfig sprt_config() const;
    CampaignPlan campaign_plan() const;
};

} // namespace qsv
