#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qsv/adaptive.hpp"
#include "qsv/eva.hpp"
#include "qsv/types.hpp"

namespace qsv {

/// Distribution of the per-kilometer performance-measure extremum for
/// synthetic logs. One sample per whole kilometer.
struct PmModel {
    enum class Family { Gaussian, ExponentialTail, GpdTail };
    Family family;
    double location;
    double scale;
    double shape = 0.0; // GpdTail only

    PmModel(Family family_, double location_, double scale_, double shape_ = 0.0);
};

/// One exposure stratum of the simulated ground truth: its true event rate
/// and its share of natural (field) driving.
struct Stratum {
    std::string id;
    double event_rate_per_km;
    double natural_share;

    Stratum(std::string id_, double event_rate_per_km_, double natural_share_);
};

/// Simulated ground truth: event rates by stratum (shares summing to 1)
/// plus an optional performance-measure model.
struct GroundTruth {
    std::vector<Stratum> strata;
    std::optional<PmModel> pm_model;

    explicit GroundTruth(std::vector<Stratum> strata_,
                         std::optional<PmModel> pm_model_ = std::nullopt);

    static GroundTruth homogeneous(double event_rate_per_km,
                                   std::optional<PmModel> pm_model_ = std::nullopt);

    /// Mean event rate under the given exposure shares (natural if empty).
    double mixed_rate(std::span<const double> exposure_shares = {}) const;
};

/// A generated log together with the stratum of each event and the distance
/// driven per stratum (the bookkeeping an exposure-corrected estimate needs).
struct StratifiedLog {
    EventLog log;
    std::vector<std::size_t> event_strata;
    std::vector<double> stratum_distance_km;

    StratifiedLog(EventLog log_, std::vector<std::size_t> event_strata_,
                  std::vector<double> stratum_distance_km_);
};

/// Draw one synthetic drive: per stratum a Poisson event stream at the
/// stratum rate thinned by its exposure share, interleaved over the same
/// odometer; one performance sample per whole kilometer when a model is
/// present. Deterministic in (truth, distance, shares, seed); substreams
/// are derived per stratum so the draw does not depend on evaluation order.
StratifiedLog generate_log(const GroundTruth& truth, double distance_km,
                           std::span<const double> exposure_shares, std::uint64_t seed);

enum class CampaignMethod { PoissonNhst, Sprt, Bayes, Eva };

struct NhstCampaign {
    AcceptanceCriterion criterion;
    TestParameters params;
};

struct SprtCampaign {
    SprtConfig config;
};

struct BayesCampaign {
    AcceptanceCriterion criterion;
    GammaPrior prior;
    double significance;
    std::int64_t assumed_events = 0;
};

struct EvaCampaign {
    AcceptanceCriterion criterion;
    PotConfig pot;
    double confidence;
    double test_distance_km;
};

/// A replicated simulation study of one validation method against a ground
/// truth. Replication r uses its own rng stream derived via replication_seed,
/// so results are bit-identical for a given plan regardless of threading.
std::string to_string(CampaignMethod method);
CampaignMethod campaign_method_from_string(const std::string& name);

struct CampaignPlan {
    using Config = std::variant<NhstCampaign, SprtCampaign, BayesCampaign, EvaCampaign>;

    CampaignMethod method;
    Config config;
    std::int64_t replications;
    std::uint64_t seed;
    /// Exposure shares used during testing; empty means natural exposure.
    std::vector<double> sampling_profile;
};

struct ReplicationOutcome {
    Verdict verdict;
    double decision_distance_km;
};

struct CampaignResult {
    std::int64_t replications = 0;
    std::int64_t passes = 0;
    std::int64_t fails = 0;
    std::int64_t incompletes = 0;
    double pass_fraction = 0.0;
    double pass_fraction_se = 0.0;
    double mean_decision_distance_km = 0.0;
    std::vector<ReplicationOutcome> outcomes;
};

CampaignResult run_campaign(const CampaignPlan& plan, const GroundTruth& truth,
                            unsigned n_threads = 1);

/// Exposure-corrected event-rate estimate from a log driven under a biased
/// sampling profile: per-stratum observed rates reweighted by the natural
/// shares. The variance treats per-stratum counts as Poisson.
struct RateEstimate {
    double rate_per_km;
    double standard_error;
};

RateEstimate importance_corrected_rate(const StratifiedLog& log,
                                       std::span<const double> natural_shares,
                                       std::span<const double> test_shares);

} // namespace qsv
