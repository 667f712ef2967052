#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsv/types.hpp"

namespace qsv {

/// One sub-behavior's share of a parent criterion's event-rate budget.
struct BudgetShare {
    std::string sub_behavior_id;
    double fraction; // (0, 1]; 1 is the identity split

    BudgetShare(std::string sub_behavior_id_, double fraction_);
};

/// Division of one criterion's rate across finer-grained sub-behaviors.
/// Shares must sum to at most 1 so the combined budget stays conservative.
struct CriterionBudget {
    AcceptanceCriterion parent;
    std::vector<BudgetShare> shares;

    CriterionBudget(AcceptanceCriterion parent_, std::vector<BudgetShare> shares_);
};

/// One derived criterion per budget share, each carrying the parent's trail
/// plus its own share step, so sub-criteria recombine exactly.
std::vector<AcceptanceCriterion> split_criterion(const CriterionBudget& budget);

/// Decomposition of a hazardous behavior into an observable precursor: the
/// behavior occurs only when the precursor occurs and a conditional step
/// (probability at most conditional_p_upper) follows.
struct HbDecomposition {
    std::string precursor_id;
    double conditional_p;       // best estimate
    double conditional_p_upper; // demonstrated upper confidence bound
    bool independence_justified;

    HbDecomposition(std::string precursor_id_, double conditional_p_,
                    double conditional_p_upper_, bool independence_justified_);
};

/// Validation target for the precursor: its acceptable rate is the parent
/// rate divided by the conditional upper bound, which shortens the required
/// distance by exactly that factor.
ValidationTarget decomposed_target(const AcceptanceCriterion& criterion,
                                   const HbDecomposition& decomposition,
                                   const TestParameters& params);

/// Exact one-sided upper confidence bound on a conditional probability from
/// `occurrences` positives in `trials` Bernoulli observations: the p at
/// which seeing this few positives has probability 1 - confidence
/// (Clopper-Pearson style, solved in the binomial tail).
double bound_conditional_p(std::int64_t trials, std::int64_t occurrences,
                           double confidence);

/// Redundant mitigation channels that must all fail, per demand, for the
/// hazardous behavior to occur.
struct RedundancyModel {
    std::vector<double> channel_failure_probabilities; // each in (0, 1]
    double demand_rate_per_km;
    bool independence_justified;

    RedundancyModel(std::vector<double> channel_failure_probabilities_,
                    double demand_rate_per_km_, bool independence_justified_);
};

/// System-level event rate under the product rule. Refuses to multiply
/// unjustified channels: with dependence or common-cause failures the
/// product underestimates the rate.
double redundancy_rate(const RedundancyModel& model);

} // namespace qsv
