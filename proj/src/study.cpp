#include "qsv/study.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include "qsv/acceptance.hpp"
#include "qsv/csv.hpp"
#include "qsv/errors.hpp"
#include "qsv/serialization.hpp"

namespace qsv {

namespace {

using jsonio::get_bool_or;
using jsonio::get_integer;
using jsonio::get_integer_or;
using jsonio::get_number;
using jsonio::get_number_or;
using jsonio::get_string;
using jsonio::get_string_or;
using jsonio::require;

std::vector<double> number_list(const nlohmann::json& j, const char* key) {
    const nlohmann::json& arr = require(j, key);
    if (!arr.is_array() || arr.empty())
        throw ingestion_error(std::string("field '") + key + "' must be a non-empty array");
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number())
            throw ingestion_error(std::string("field '") + key + "' must contain numbers only");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<std::int64_t> integer_list(const nlohmann::json& j, const char* key) {
    const nlohmann::json& arr = require(j, key);
    if (!arr.is_array() || arr.empty())
        throw ingestion_error(std::string("field '") + key + "' must be a non-empty array");
    std::vector<std::int64_t> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number_integer())
            throw ingestion_error(std::string("field '") + key + "' must contain integers only");
        out.push_back(v.get<std::int64_t>());
    }
    return out;
}

TrafficStatistic parse_traffic(const nlohmann::json& j, const std::string& base_dir) {
    if (j.contains("csv")) {
        std::filesystem::path p(get_string(j, "csv"));
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        return ingest_traffic_csv(p.string());
    }
    return traffic_statistic_from_json(j);
}

HbDecomposition parse_decomposition(const nlohmann::json& j) {
    std::string precursor = get_string(j, "precursor_id");
    bool independent = get_bool_or(j, "independence_justified", false);
    if (j.contains("trials")) {
        // Estimate the conditional step from bench observations and bound it
        // by a one-sided upper confidence limit.
        std::int64_t trials = get_integer(j, "trials");
        std::int64_t occurrences = get_integer(j, "occurrences");
        double confidence = get_number(j, "confidence");
        double upper = bound_conditional_p(trials, occurrences, confidence);
        double estimate = get_number_or(j, "conditional_p", 0.0);
        if (estimate <= 0.0) {
            double numer = occurrences > 0 ? static_cast<double>(occurrences) : 0.5;
            estimate = numer / static_cast<double>(trials);
        }
        if (estimate > upper) estimate = upper;
        return HbDecomposition(precursor, estimate, upper, independent);
    }
    double p = get_number(j, "conditional_p");
    double upper = get_number_or(j, "conditional_p_upper", p);
    return HbDecomposition(precursor, p, upper, independent);
}

TailDirection direction_from_string(const std::string& s) {
    if (s == "exceed_high") return TailDirection::ExceedHigh;
    if (s == "exceed_low") return TailDirection::ExceedLow;
    throw ingestion_error("unknown tail direction '" + s + "'");
}

EvaSpec parse_eva(const nlohmann::json& j) {
    std::int64_t min_exceedances = get_integer_or(j, "min_exceedances", 30);
    if (min_exceedances < 1) throw ingestion_error("field 'min_exceedances' must be positive");
    PotConfig pot(get_number(j, "threshold"),
                  get_number(j, "critical_value"),
                  direction_from_string(get_string_or(j, "direction", "exceed_high")),
                  get_number_or(j, "decluster_gap_km", 1.0),
                  static_cast<std::size_t>(min_exceedances));
    double confidence = get_number(j, "confidence");
    std::optional<double> expected;
    if (j.contains("expected_exceedances_per_km"))
        expected = get_number(j, "expected_exceedances_per_km");
    std::int64_t resamples = get_integer_or(j, "bootstrap_resamples", 0);
    if (resamples < 0) throw ingestion_error("field 'bootstrap_resamples' must not be negative");
    return EvaSpec{std::move(pot), confidence, expected, static_cast<std::size_t>(resamples)};
}

PmModel parse_pm_model(const nlohmann::json& j) {
    std::string family = get_string(j, "family");
    double location = get_number(j, "location");
    double scale = get_number(j, "scale");
    if (family == "gaussian") return PmModel(PmModel::Family::Gaussian, location, scale);
    if (family == "exponential_tail")
        return PmModel(PmModel::Family::ExponentialTail, location, scale);
    if (family == "gpd_tail")
        return PmModel(PmModel::Family::GpdTail, location, scale, get_number(j, "shape"));
    throw ingestion_error("unknown performance measure family '" + family + "'");
}

GroundTruth parse_truth(const nlohmann::json& j, std::optional<PmModel> pm) {
    if (j.contains("strata")) {
        const nlohmann::json& arr = require(j, "strata");
        if (!arr.is_array() || arr.empty())
            throw ingestion_error("field 'strata' must be a non-empty array");
        std::vector<Stratum> strata;
        strata.reserve(arr.size());
        for (const auto& s : arr)
            strata.emplace_back(get_string(s, "id"), get_number(s, "rate_per_km"),
                                get_number(s, "natural_share"));
        return GroundTruth(std::move(strata), std::move(pm));
    }
    return GroundTruth::homogeneous(get_number(j, "rate_per_km"), std::move(pm));
}

SimulationSpec parse_simulation(const nlohmann::json& j) {
    CampaignMethod method = campaign_method_from_string(get_string(j, "method"));
    std::int64_t replications = get_integer(j, "replications");
    if (replications <= 0) throw ingestion_error("field 'replications' must be positive");
    auto seed = static_cast<std::uint64_t>(get_integer_or(j, "seed", 1));
    std::optional<PmModel> pm;
    if (j.contains("pm_model")) pm = parse_pm_model(require(j, "pm_model"));
    GroundTruth truth = parse_truth(require(j, "truth"), std::move(pm));
    std::vector<double> profile;
    if (j.contains("sampling_profile")) profile = number_list(j, "sampling_profile");
    std::optional<double> eva_distance;
    if (j.contains("eva_distance_km")) eva_distance = get_number(j, "eva_distance_km");
    return SimulationSpec{method, replications, seed, std::move(truth),
                          std::move(profile), eva_distance};
}

} // namespace

StudyConfig StudyConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ingestion_error("cannot open config file '" + path + "'");
    nlohmann::json document;
    try {
        in >> document;
    } catch (const nlohmann::json::parse_error& e) {
        throw ingestion_error(path + ": " + e.what());
    }
    return parse(document, std::filesystem::path(path).parent_path().string());
}

StudyConfig StudyConfig::parse(const nlohmann::json& document, const std::string& base_dir) {
    if (!document.is_object()) throw ingestion_error("config root must be a JSON object");

    StudyConfig config{
        hazardous_behavior_from_json(require(document, "behavior")),
        parse_traffic(require(document, "traffic"), base_dir),
        document.contains("factors") ? factor_set_from_json(require(document, "factors"))
                                     : FactorSet{},
        rationale_from_string(get_string_or(document, "rationale", "other")),
        test_parameters_from_json(require(document, "test")),
        6,  {}, {}, {}, {}, {}, {}, {}, {}};
    config.digits = static_cast<int>(get_integer_or(document, "digits", 6));
    if (config.digits < 1 || config.digits > 17)
        throw ingestion_error("field 'digits' must lie in [1, 17]");

    if (document.contains("sensitivity")) {
        const nlohmann::json& s = require(document, "sensitivity");
        config.sensitivity = SensitivitySpec{number_list(s, "significances"),
                                             integer_list(s, "allowed_events")};
    }
    if (document.contains("sprt")) {
        const nlohmann::json& s = require(document, "sprt");
        std::optional<double> truncation;
        if (s.contains("truncation_km")) truncation = get_number(s, "truncation_km");
        config.sprt = SprtSpec{get_number(s, "rate_h1_per_km"), get_number(s, "alpha"),
                               get_number(s, "beta"), truncation};
    }
    if (document.contains("bayes")) {
        const nlohmann::json& b = require(document, "bayes");
        config.bayes = BayesSpec{gamma_prior_from_json(require(b, "prior")),
                                 get_number(b, "significance"),
                                 get_integer_or(b, "assumed_events", 0)};
    }
    if (document.contains("decomposition"))
        config.decomposition = parse_decomposition(require(document, "decomposition"));
    if (document.contains("budget")) {
        const nlohmann::json& arr = require(require(document, "budget"), "shares");
        if (!arr.is_array() || arr.empty())
            throw ingestion_error("field 'shares' must be a non-empty array");
        BudgetSpec spec;
        spec.shares.reserve(arr.size());
        for (const auto& s : arr)
            spec.shares.emplace_back(get_string(s, "id"), get_number(s, "fraction"));
        config.budget = std::move(spec);
    }
    if (document.contains("redundancy")) {
        const nlohmann::json& r = require(document, "redundancy");
        config.redundancy = RedundancyModel(
            number_list(r, "channel_failure_probabilities"),
            get_number(r, "demand_rate_per_km"),
            get_bool_or(r, "independence_justified", false));
    }
    if (document.contains("eva")) config.eva = parse_eva(require(document, "eva"));
    if (document.contains("simulation"))
        config.simulation = parse_simulation(require(document, "simulation"));
    return config;
}

Benchmark StudyConfig::benchmark() const { return derive_benchmark(statistic); }

AcceptanceCriterion StudyConfig::criterion() const {
    return derive_acceptance_criterion(benchmark(), factors, behavior, rationale);
}

SprtConfig StudyConfig::sprt_config() const {
    if (!sprt) throw validation_error("the config has no sprt section");
    return SprtConfig(criterion().max_event_rate_per_km, sprt->rate_h1_per_km, sprt->alpha,
                      sprt->beta, sprt->truncation_km);
}

CampaignPlan StudyConfig::campaign_plan() const {
    if (!simulation) throw validation_error("the config has no simulation section");
    const SimulationSpec& sim = *simulation;
    AcceptanceCriterion crit = criterion();
    CampaignPlan::Config method_config = [&]() -> CampaignPlan::Config {
        switch (sim.method) {
        case CampaignMethod::PoissonNhst:
            return NhstCampaign{crit, test};
        case CampaignMethod::Sprt:
            return SprtCampaign{sprt_config()};
        case CampaignMethod::Bayes: {
            if (!bayes) throw validation_error("the config has no bayes section");
            return BayesCampaign{crit, bayes->prior, bayes->significance,
                                 bayes->assumed_events};
        }
        case CampaignMethod::Eva: {
            if (!eva) throw validation_error("the config has no eva section");
            if (!sim.eva_distance_km)
                throw validation_error("simulation of an eva campaign needs 'eva_distance_km'");
            return EvaCampaign{crit, eva->pot, eva->confidence, *sim.eva_distance_km};
        }
        }
        throw validation_error("unknown campaign method");
    }();
    return CampaignPlan{sim.method, std::move(method_config), sim.replications, sim.seed,
                        sim.sampling_profile};
}

} // namespace qsv
