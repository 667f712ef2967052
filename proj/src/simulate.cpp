#include "qsv/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <utility>

#include "qsv/frequentist.hpp"
#include "qsv/rng.hpp"

namespace qsv {

namespace {

constexpr std::uint64_t kStratumStreamTag = 0x73747261746100ULL;
constexpr std::uint64_t kPmStreamTag = 0x706D5F73616D70ULL;
constexpr std::uint64_t kSprtStreamTag = 0x7370727400ULL;
constexpr std::int64_t kMaxSimulatedEvents = 100000000;

void validate_shares(std::span<const double> shares, std::size_t expected,
                     const char* what) {
    if (shares.size() != expected)
        throw validation_error(std::string(what) + ": share count does not match strata");
    double sum = 0.0;
    for (const double s : shares) {
        if (!(s >= 0.0) || !std::isfinite(s))
            throw validation_error(std::string(what) + ": shares must be nonnegative");
        sum += s;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw validation_error(std::string(what) + ": shares must sum to 1");
}

double draw_pm_value(SplitMix64& rng, const PmModel& model) {
    switch (model.family) {
        case PmModel::Family::Gaussian:
            return model.location + model.scale * standard_normal(rng);
        case PmModel::Family::ExponentialTail:
            return model.location - model.scale * std::log(rng.uniform_positive());
        case PmModel::Family::GpdTail:
            return model.location + generalized_pareto(rng, model.shape, model.scale);
    }
    throw validation_error("pm model: unknown family");
}

} // namespace

PmModel::PmModel(Family family_, double location_, double scale_, double shape_)
    : family(family_), location(location_), scale(scale_), shape(shape_) {
    if (!std::isfinite(location) || !std::isfinite(shape))
        throw validation_error("pm model: parameters must be finite");
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw validation_error("pm model: scale must be positive and finite");
    if (family != Family::GpdTail && shape != 0.0)
        throw validation_error("pm model: shape applies to the gpd tail family only");
}

Stratum::Stratum(std::string id_, double event_rate_per_km_, double natural_share_)
    : id(std::move(id_)), event_rate_per_km(event_rate_per_km_),
      natural_share(natural_share_) {
    if (id.empty()) throw validation_error("stratum: id must not be empty");
    if (!(event_rate_per_km >= 0.0) || !std::isfinite(event_rate_per_km))
        throw validation_error("stratum: event rate must be nonnegative and finite");
    if (!(natural_share >= 0.0) || !(natural_share <= 1.0))
        throw validation_error("stratum: natural share must lie in [0, 1]");
}

GroundTruth::GroundTruth(std::vector<Stratum> strata_, std::optional<PmModel> pm_model_)
    : strata(std::move(strata_)), pm_model(std::move(pm_model_)) {
    if (strata.empty()) throw validation_error("ground truth: at least one stratum required");
    double sum = 0.0;
    for (const Stratum& s : strata) sum += s.natural_share;
    if (std::fabs(sum - 1.0) > 1e-9)
        throw validation_error("ground truth: natural shares must sum to 1");
}

GroundTruth GroundTruth::homogeneous(double event_rate_per_km,
                                     std::optional<PmModel> pm_model_) {
    return GroundTruth({Stratum("all", event_rate_per_km, 1.0)}, std::move(pm_model_));
}

double GroundTruth::mixed_rate(std::span<const double> exposure_shares) const {
    if (!exposure_shares.empty())
        validate_shares(exposure_shares, strata.size(), "mixed_rate");
    double rate = 0.0;
    for (std::size_t s = 0; s < strata.size(); ++s) {
        const double share =
            exposure_shares.empty() ? strata[s].natural_share : exposure_shares[s];
        rate += share * strata[s].event_rate_per_km;
    }
    return rate;
}

StratifiedLog::StratifiedLog(EventLog log_, std::vector<std::size_t> event_strata_,
                             std::vector<double> stratum_distance_km_)
    : log(std::move(log_)), event_strata(std::move(event_strata_)),
      stratum_distance_km(std::move(stratum_distance_km_)) {
    if (event_strata.size() != log.event_stamps_km.size())
        throw validation_error("stratified log: one stratum label per event required");
    double sum = 0.0;
    for (const double d : stratum_distance_km) {
        if (!(d >= 0.0) || !std::isfinite(d))
            throw validation_error("stratified log: stratum distances must be nonnegative");
        sum += d;
    }
    if (std::fabs(sum - log.total_distance_km) > 1e-6 * std::max(1.0, log.total_distance_km))
        throw validation_error("stratified log: stratum distances must sum to the total");
    for (const std::size_t s : event_strata) {
        if (s >= stratum_distance_km.size())
            throw validation_error("stratified log: stratum label out of range");
    }
}

StratifiedLog generate_log(const GroundTruth& truth, double distance_km,
                           std::span<const double> exposure_shares, std::uint64_t seed) {
    if (!(distance_km > 0.0) || !std::isfinite(distance_km))
        throw validation_error("generate_log: distance must be positive and finite");
    if (!exposure_shares.empty())
        validate_shares(exposure_shares, truth.strata.size(), "generate_log");

    std::vector<std::pair<double, std::size_t>> stamped;
    std::vector<double> stratum_distance(truth.strata.size(), 0.0);
    for (std::size_t s = 0; s < truth.strata.size(); ++s) {
        const double share =
            exposure_shares.empty() ? truth.strata[s].natural_share : exposure_shares[s];
        stratum_distance[s] = share * distance_km;
        // events of stratum s interleave over the whole odometer with the
        // stratum rate thinned by its exposure share
        const double effective_rate = share * truth.strata[s].event_rate_per_km;
        if (!(effective_rate > 0.0)) continue;
        SplitMix64 rng(substream_seed(seed, kStratumStreamTag, s));
        double t = exponential_gap(rng, effective_rate);
        while (t < distance_km) {
            stamped.emplace_back(t, s);
            t += exponential_gap(rng, effective_rate);
        }
    }
    std::sort(stamped.begin(), stamped.end());
    std::vector<double> stamps;
    std::vector<std::size_t> labels;
    stamps.reserve(stamped.size());
    labels.reserve(stamped.size());
    for (const auto& [stamp, label] : stamped) {
        double value = stamp;
        if (!stamps.empty() && value <= stamps.back())
            value = std::nextafter(stamps.back(), distance_km); // measure-zero ties
        stamps.push_back(value);
        labels.push_back(label);
    }

    std::vector<PmSample> pm;
    if (truth.pm_model) {
        SplitMix64 rng(substream_seed(seed, kPmStreamTag, 0));
        const auto km = static_cast<std::int64_t>(distance_km);
        pm.reserve(static_cast<std::size_t>(std::max<std::int64_t>(km, 0)));
        for (std::int64_t i = 1; i <= km; ++i) {
            pm.push_back(PmSample{static_cast<double>(i), draw_pm_value(rng, *truth.pm_model)});
        }
    }

    return StratifiedLog(EventLog(distance_km, std::move(stamps), std::move(pm)),
                         std::move(labels), std::move(stratum_distance));
}

std::string to_string(CampaignMethod method) {
    switch (method) {
    case CampaignMethod::PoissonNhst: return "poisson_nhst";
    case CampaignMethod::Sprt: return "sprt";
    case CampaignMethod::Bayes: return "bayes";
    case CampaignMethod::Eva: return "eva";
    }
    return "unknown";
}

CampaignMethod campaign_method_from_string(const std::string& name) {
    if (name == "poisson_nhst") return CampaignMethod::PoissonNhst;
    if (name == "sprt") return CampaignMethod::Sprt;
    if (name == "bayes") return CampaignMethod::Bayes;
    if (name == "eva") return CampaignMethod::Eva;
    throw validation_error("unknown campaign method '" + name + "'");
}

namespace {

ReplicationOutcome run_nhst_replication(const NhstCampaign& campaign,
                                        const ValidationTarget& target,
                                        const GroundTruth& truth,
                                        std::span<const double> profile,
                                        std::uint64_t rep_seed) {
    const StratifiedLog log =
        generate_log(truth, target.required_distance_km, profile, rep_seed);
    const Verdict verdict = evaluate(target, log.log);
    double decided_at = target.required_distance_km;
    if (verdict == Verdict::Fail) {
        // the test stops at the first event beyond the allowance
        decided_at =
            log.log.event_stamps_km[static_cast<std::size_t>(campaign.params.allowed_events)];
    }
    return {verdict, decided_at};
}

ReplicationOutcome run_sprt_replication(const SprtCampaign& campaign, double pooled_rate,
                                        std::uint64_t rep_seed) {
    const SprtConfig& config = campaign.config;
    const double upper = config.upper_threshold();
    const double lower = config.lower_threshold();
    const double drift = config.drift_per_km();
    const double jump = config.event_llr();
    SplitMix64 rng(substream_seed(rep_seed, kSprtStreamTag, 0));
    double llr = 0.0;
    double t = 0.0;
    for (std::int64_t i = 0; i < kMaxSimulatedEvents; ++i) {
        const double to_crossing = (upper - llr) / drift;
        const double gap = pooled_rate > 0.0
                               ? exponential_gap(rng, pooled_rate)
                               : std::numeric_limits<double>::infinity();
        if (to_crossing <= gap) {
            const double crossing_at = t + to_crossing;
            if (config.truncation_km && crossing_at > *config.truncation_km) {
                const double at = *config.truncation_km;
                llr += (at - t) * drift;
                return {upper - llr < llr - lower ? Verdict::Pass : Verdict::Fail, at};
            }
            return {Verdict::Pass, crossing_at};
        }
        const double event_at = t + gap;
        if (config.truncation_km && event_at > *config.truncation_km) {
            const double at = *config.truncation_km;
            llr += (at - t) * drift;
            return {upper - llr < llr - lower ? Verdict::Pass : Verdict::Fail, at};
        }
        llr += gap * drift + jump;
        t = event_at;
        if (llr <= lower) return {Verdict::Fail, t};
    }
    throw numerical_error("sprt campaign: no decision within the event budget");
}

ReplicationOutcome run_bayes_replication(const BayesCampaign& campaign,
                                         double planned_distance,
                                         const GroundTruth& truth,
                                         std::span<const double> profile,
                                         std::uint64_t rep_seed) {
    if (planned_distance <= 0.0) return {Verdict::Pass, 0.0}; // prior already conclusive
    const StratifiedLog log = generate_log(truth, planned_distance, profile, rep_seed);
    const GammaPrior posterior = bayes_posterior(campaign.prior, log.log);
    const Verdict verdict =
        bayes_decision(posterior, campaign.criterion, campaign.significance);
    return {verdict, planned_distance};
}

ReplicationOutcome run_eva_replication(const EvaCampaign& campaign,
                                       const GroundTruth& truth,
                                       std::span<const double> profile,
                                       std::uint64_t rep_seed) {
    const StratifiedLog log =
        generate_log(truth, campaign.test_distance_km, profile, rep_seed);
    const Exceedances exc = extract_exceedances(log.log, campaign.pot);
    if (exc.excesses.size() < campaign.pot.min_exceedances)
        return {Verdict::Incomplete, campaign.test_distance_km};
    try {
        const GpdFit fit =
            fit_gpd(exc.excesses, exc.rate_per_km, campaign.pot.min_exceedances);
        const RateExtrapolation point = extrapolate_rate(fit, campaign.pot);
        double upper = profile_rate_upper_bound(exc, fit, campaign.pot, campaign.confidence);
        upper = std::max(upper, point.rate_per_km);
        return {eva_verdict(point.rate_per_km, upper, campaign.criterion),
                campaign.test_distance_km};
    } catch (const validation_error&) {
        return {Verdict::Incomplete, campaign.test_distance_km};
    } catch (const numerical_error&) {
        return {Verdict::Incomplete, campaign.test_distance_km};
    }
}

} // namespace

CampaignResult run_campaign(const CampaignPlan& plan, const GroundTruth& truth,
                            unsigned n_threads) {
    if (plan.replications < 1)
        throw validation_error("campaign: at least one replication required");
    const std::size_t method_index = static_cast<std::size_t>(plan.method);
    if (method_index != plan.config.index())
        throw validation_error("campaign: method does not match the supplied configuration");
    if (!plan.sampling_profile.empty())
        validate_shares(plan.sampling_profile, truth.strata.size(), "campaign");
    const std::span<const double> profile(plan.sampling_profile);

    // method-level preparation, shared across replications
    std::optional<ValidationTarget> nhst_target;
    double pooled_rate = 0.0;
    double bayes_distance = 0.0;
    switch (plan.method) {
        case CampaignMethod::PoissonNhst: {
            const auto& c = std::get<NhstCampaign>(plan.config);
            nhst_target = validation_target(c.criterion, c.params);
            break;
        }
        case CampaignMethod::Sprt:
            pooled_rate = truth.mixed_rate(profile);
            break;
        case CampaignMethod::Bayes: {
            const auto& c = std::get<BayesCampaign>(plan.config);
            bayes_distance = bayes_required_distance(c.prior, c.criterion, c.significance,
                                                     c.assumed_events);
            break;
        }
        case CampaignMethod::Eva: {
            const auto& c = std::get<EvaCampaign>(plan.config);
            if (!truth.pm_model)
                throw validation_error(
                    "campaign: the eva method needs a performance-measure model");
            if (!(c.test_distance_km > 0.0) || !std::isfinite(c.test_distance_km))
                throw validation_error("campaign: eva test distance must be positive");
            if (!(c.confidence > 0.5) || !(c.confidence < 1.0))
                throw validation_error(
                    "campaign: eva confidence must lie strictly between 0.5 and 1");
            break;
        }
    }

    const auto run_one = [&](std::int64_t rep) -> ReplicationOutcome {
        const std::uint64_t rep_seed =
            replication_seed(plan.seed, static_cast<std::uint64_t>(rep));
        switch (plan.method) {
            case CampaignMethod::PoissonNhst:
                return run_nhst_replication(std::get<NhstCampaign>(plan.config),
                                            *nhst_target, truth, profile, rep_seed);
            case CampaignMethod::Sprt:
                return run_sprt_replication(std::get<SprtCampaign>(plan.config),
                                            pooled_rate, rep_seed);
            case CampaignMethod::Bayes:
                return run_bayes_replication(std::get<BayesCampaign>(plan.config),
                                             bayes_distance, truth, profile, rep_seed);
            case CampaignMethod::Eva:
                return run_eva_replication(std::get<EvaCampaign>(plan.config), truth,
                                           profile, rep_seed);
        }
        throw validation_error("campaign: unknown method");
    };

    const auto n = static_cast<std::size_t>(plan.replications);
    std::vector<ReplicationOutcome> outcomes(n);
    if (n_threads <= 1 || n == 1) {
        for (std::size_t rep = 0; rep < n; ++rep)
            outcomes[rep] = run_one(static_cast<std::int64_t>(rep));
    } else {
        // static contiguous partition; replication seeds make the result
        // independent of the schedule
        const std::size_t workers = std::min<std::size_t>(n_threads, n);
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = n * w / workers;
            const std::size_t end = n * (w + 1) / workers;
            pool.emplace_back([&, begin, end]() {
                try {
                    for (std::size_t rep = begin; rep < end; ++rep)
                        outcomes[rep] = run_one(static_cast<std::int64_t>(rep));
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
        for (std::thread& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    CampaignResult result;
    result.replications = plan.replications;
    double distance_sum = 0.0;
    for (const ReplicationOutcome& o : outcomes) {
        switch (o.verdict) {
            case Verdict::Pass: ++result.passes; break;
            case Verdict::Fail: ++result.fails; break;
            case Verdict::Incomplete: ++result.incompletes; break;
        }
        distance_sum += o.decision_distance_km;
    }
    const double nd = static_cast<double>(n);
    result.pass_fraction = static_cast<double>(result.passes) / nd;
    result.pass_fraction_se =
        std::sqrt(result.pass_fraction * (1.0 - result.pass_fraction) / nd);
    result.mean_decision_distance_km = distance_sum / nd;
    result.outcomes = std::move(outcomes);
    return result;
}

RateEstimate importance_corrected_rate(const StratifiedLog& log,
                                       std::span<const double> natural_shares,
                                       std::span<const double> test_shares) {
    const std::size_t n_strata = log.stratum_distance_km.size();
    validate_shares(natural_shares, n_strata, "importance_corrected_rate: natural shares");
    validate_shares(test_shares, n_strata, "importance_corrected_rate: test shares");
    std::vector<std::int64_t> counts(n_strata, 0);
    for (const std::size_t s : log.event_strata) ++counts[s];
    double rate = 0.0;
    double variance = 0.0;
    for (std::size_t s = 0; s < n_strata; ++s) {
        const double driven = log.stratum_distance_km[s];
        if ((test_shares[s] == 0.0) != (driven == 0.0))
            throw validation_error(
                "importance_corrected_rate: test shares disagree with driven distances");
        if (natural_shares[s] == 0.0) continue; // no field exposure, no contribution
        if (driven == 0.0)
            throw validation_error(
                "importance_corrected_rate: a stratum with field exposure was never "
                "driven; its rate cannot be estimated from this log");
        const double observed = static_cast<double>(counts[s]);
        rate += natural_shares[s] * observed / driven;
        variance += natural_shares[s] * natural_shares[s] * observed / (driven * driven);
    }
    return {rate, std::sqrt(variance)};
}

} // namespace qsv
