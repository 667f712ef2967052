#pragma once

#include "qsv/types.hpp"

namespace qsv {

/// Build the benchmark (mean distance between events) from field statistics.
Benchmark derive_benchmark(TrafficStatistic statistic);

/// Derive the maximum acceptable event rate from a benchmark and the
/// adjustment factors: demanding-side statistics plus a safety margin on
/// top, scaled by the shares of the reference data the system is actually
/// comparable to and able to affect.
AcceptanceCriterion derive_acceptance_criterion(Benchmark benchmark, FactorSet factors,
                                                HazardousBehavior behavior,
                                                RiskAcceptanceRationale rationale);

/// Replay the full factor trail of a criterion and return the recombined
/// rate. Throws integrity_error if the stored rate does not match bit for
/// bit, which catches any post-construction tampering with the fields.
double recombine_trail(const AcceptanceCriterion& criterion);

} // namespace qsv
