#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsv/types.hpp"

namespace qsv {

enum class TailDirection { ExceedHigh, ExceedLow };

/// Peaks-over-threshold configuration: which tail of the performance
/// measure is dangerous, where the modeling threshold sits, and which
/// critical value an extrapolated event corresponds to. The critical value
/// may equal the threshold (the extrapolation then reproduces the raw
/// exceedance rate) but must not fall on the safe side of it.
struct PotConfig {
    double threshold;
    double critical_value;
    TailDirection direction = TailDirection::ExceedHigh;
    /// Exceedances closer than this along the drive are treated as one
    /// cluster and only the worst one is kept; 0 disables declustering.
    double decluster_gap_km = 1.0;
    std::size_t min_exceedances = 30;

    PotConfig(double threshold_, double critical_value_,
              TailDirection direction_ = TailDirection::ExceedHigh,
              double decluster_gap_km_ = 1.0, std::size_t min_exceedances_ = 30);

    /// Excess of a raw value over the threshold in the dangerous direction.
    double excess_of(double value) const;
};

/// Declustered threshold exceedances of a log's performance samples.
struct Exceedances {
    std::vector<double> excesses;       // positive, one per cluster peak
    std::vector<double> distances_km;   // stamp of each cluster peak
    double total_distance_km = 0.0;
    double rate_per_km = 0.0;           // cluster rate: count / total distance
};

Exceedances extract_exceedances(const EventLog& log, const PotConfig& config);

/// Generalized Pareto fit to excesses, by maximum likelihood over the
/// profile in the shape parameter.
struct GpdFit {
    double shape;              // xi
    double scale;              // sigma
    double exceedance_rate_per_km;
    std::size_t count;
    double log_likelihood;
    /// Finite upper endpoint of the excess distribution when shape < 0.
    std::optional<double> excess_endpoint;
    /// Set when the optimum sat on the shape search bound; treat the fit as
    /// unreliable evidence.
    bool at_search_bound = false;
};

/// Survival function of the fitted excess distribution at excess z >= 0.
double gpd_survival(double excess, double shape, double scale);

/// Fit a GPD to the excesses: profile likelihood over the shape with the
/// scale solved from the inner stationarity condition at each shape, then
/// golden-section refinement. Throws on fewer than `min_count` excesses
/// (insufficient data) and on all-identical excesses (degenerate data).
GpdFit fit_gpd(std::span<const double> excesses, double exceedance_rate_per_km,
               std::size_t min_count = 30);

/// Event rate implied at the critical value: cluster rate times the fitted
/// survival of the required excess.
struct RateExtrapolation {
    double rate_per_km;
    bool beyond_endpoint; // critical value outside the fitted support
};

RateExtrapolation extrapolate_rate(const GpdFit& fit, const PotConfig& config);

/// One-sided profile-likelihood upper confidence bound on the extrapolated
/// rate: the full likelihood (Poisson cluster count times GPD excesses) is
/// reparameterized so the extrapolated rate is an explicit parameter, and
/// the bound is where the profile deviance reaches the chi-squared quantile
/// matching a one-sided interval at `confidence`.
double profile_rate_upper_bound(const Exceedances& exceedances, const GpdFit& fit,
                                const PotConfig& config, double confidence);

/// Bootstrap cross-check of the upper bound: resamples the cluster count
/// (Poisson) and the excesses (with replacement), refits, and returns the
/// `confidence` quantile of the extrapolated rates.
double bootstrap_rate_upper_bound(const Exceedances& exceedances, const PotConfig& config,
                                  double confidence, std::size_t resamples,
                                  std::uint64_t seed);

/// Pass when even the upper confidence bound of the extrapolated rate stays
/// at or below the criterion rate.
Verdict eva_verdict(double rate_estimate, double rate_upper_bound,
                    const AcceptanceCriterion& criterion);

} // namespace qsv
