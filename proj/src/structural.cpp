#include "qsv/structural.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "qsv/frequentist.hpp"
#include "qsv/special.hpp"

namespace qsv {

BudgetShare::BudgetShare(std::string sub_behavior_id_, double fraction_)
    : sub_behavior_id(std::move(sub_behavior_id_)), fraction(fraction_) {
    if (sub_behavior_id.empty())
        throw validation_error("budget share: sub-behavior id must not be empty");
    if (!(fraction > 0.0) || !(fraction <= 1.0))
        throw validation_error("budget share: fraction must lie in (0, 1]");
}

CriterionBudget::CriterionBudget(AcceptanceCriterion parent_,
                                 std::vector<BudgetShare> shares_)
    : parent(std::move(parent_)), shares(std::move(shares_)) {
    if (shares.empty())
        throw validation_error("criterion budget: at least one share is required");
    double sum = 0.0;
    for (const BudgetShare& s : shares) sum += s.fraction;
    if (sum > 1.0 + 1e-12)
        throw validation_error("criterion budget: shares must sum to at most 1");
}

std::vector<AcceptanceCriterion> split_criterion(const CriterionBudget& budget) {
    std::vector<AcceptanceCriterion> result;
    result.reserve(budget.shares.size());
    for (const BudgetShare& share : budget.shares) {
        std::vector<AdjustmentStep> trail = budget.parent.adjustments;
        trail.emplace_back(share.fraction, "budget share for " + share.sub_behavior_id);
        const double rate =
            recombined_rate(budget.parent.factors, budget.parent.benchmark, trail);
        result.emplace_back(
            rate,
            HazardousBehavior(share.sub_behavior_id, budget.parent.behavior.description,
                              budget.parent.behavior.severity_note),
            budget.parent.rationale, budget.parent.factors, budget.parent.benchmark,
            std::move(trail));
    }
    return result;
}

HbDecomposition::HbDecomposition(std::string precursor_id_, double conditional_p_,
                                 double conditional_p_upper_, bool independence_justified_)
    : precursor_id(std::move(precursor_id_)), conditional_p(conditional_p_),
      conditional_p_upper(conditional_p_upper_),
      independence_justified(independence_justified_) {
    if (precursor_id.empty())
        throw validation_error("decomposition: precursor id must not be empty");
    if (!(conditional_p > 0.0) || !(conditional_p <= 1.0))
        throw validation_error("decomposition: conditional probability must lie in (0, 1]");
    if (!(conditional_p_upper >= conditional_p) || !(conditional_p_upper <= 1.0))
        throw validation_error(
            "decomposition: conditional upper bound must lie in [estimate, 1]");
}

ValidationTarget decomposed_target(const AcceptanceCriterion& criterion,
                                   const HbDecomposition& decomposition,
                                   const TestParameters& params) {
    std::vector<AdjustmentStep> trail = criterion.adjustments;
    trail.emplace_back(1.0 / decomposition.conditional_p_upper,
                       "precursor scaling for " + decomposition.precursor_id);
    const double rate = recombined_rate(criterion.factors, criterion.benchmark, trail);
    AcceptanceCriterion precursor(
        rate,
        HazardousBehavior(decomposition.precursor_id, criterion.behavior.description,
                          criterion.behavior.severity_note),
        criterion.rationale, criterion.factors, criterion.benchmark, std::move(trail));
    return validation_target(precursor, params);
}

double bound_conditional_p(std::int64_t trials, std::int64_t occurrences,
                           double confidence) {
    if (trials <= 0) throw validation_error("bound_conditional_p: trials must be positive");
    if (occurrences < 0 || occurrences > trials)
        throw validation_error("bound_conditional_p: occurrences must lie in [0, trials]");
    if (!(confidence > 0.0) || !(confidence < 1.0))
        throw validation_error(
            "bound_conditional_p: confidence must lie strictly between 0 and 1");
    if (occurrences == trials) return 1.0;
    const double tail_target = 1.0 - confidence;
    const auto tail_gap = [&](double p) {
        return binomial_cdf(trials, occurrences, p) - tail_target;
    };
    // P(X <= occurrences) falls from 1 at p = 0 to 0 at p = 1.
    const special::Bracket b =
        special::bisect(tail_gap, 0.0, 1.0, confidence, -tail_target, 1e-13);
    return b.hi; // the side where the tail probability is at most 1 - confidence
}

RedundancyModel::RedundancyModel(std::vector<double> channel_failure_probabilities_,
                                 double demand_rate_per_km_, bool independence_justified_)
    : channel_failure_probabilities(std::move(channel_failure_probabilities_)),
      demand_rate_per_km(demand_rate_per_km_),
      independence_justified(independence_justified_) {
    if (channel_failure_probabilities.empty())
        throw validation_error("redundancy model: at least one channel is required");
    for (const double p : channel_failure_probabilities) {
        if (!(p > 0.0) || !(p <= 1.0))
            throw validation_error(
                "redundancy model: channel failure probabilities must lie in (0, 1]");
    }
    if (!(demand_rate_per_km > 0.0) || !std::isfinite(demand_rate_per_km))
        throw validation_error("redundancy model: demand rate must be positive and finite");
}

double redundancy_rate(const RedundancyModel& model) {
    if (!model.independence_justified)
        throw validation_error(
            "redundancy rate: the product rule requires justified channel "
            "independence; dependent or common-cause failures invalidate it");
    double rate = model.demand_rate_per_km;
    for (const double p : model.channel_failure_probabilities) rate *= p;
    return rate;
}

} // namespace qsv
