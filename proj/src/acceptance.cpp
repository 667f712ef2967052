#include "qsv/acceptance.hpp"

#include <utility>

namespace qsv {

Benchmark derive_benchmark(TrafficStatistic statistic) {
    return Benchmark(std::move(statistic));
}

AcceptanceCriterion derive_acceptance_criterion(Benchmark benchmark, FactorSet factors,
                                                HazardousBehavior behavior,
                                                RiskAcceptanceRationale rationale) {
    const double rate = recombined_rate(factors, benchmark, {});
    return AcceptanceCriterion(rate, std::move(behavior), rationale, factors,
                               std::move(benchmark));
}

double recombine_trail(const AcceptanceCriterion& criterion) {
    const double rate =
        recombined_rate(criterion.factors, criterion.benchmark, criterion.adjustments);
    if (rate != criterion.max_event_rate_per_km)
        throw integrity_error(
            "criterion rate does not recombine from its factor trail; "
            "the stored fields have been modified inconsistently");
    return rate;
}

} // namespace qsv
