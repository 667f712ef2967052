#pragma once

#include <string>

#include "qsv/types.hpp"

namespace qsv {

/// Read a traffic statistic from a CSV file with the exact header
///   M_km_per_year,A_events_per_year,source
/// and a single data row. The returned statistic's source records the file
/// path, row number and the source cell. Parse errors name the file, line
/// and column; value errors propagate from the core constructors.
TrafficStatistic ingest_traffic_csv(const std::string& path);

/// Read an event log from a CSV file with the exact header
///   distance_km,event            or
///   distance_km,event,pm_value
/// One row per record: cumulative distance, an event flag in {0, 1}, and
/// optionally a performance-measure value (an empty cell means no sample on
/// that row). Distances must be strictly increasing; the last row's
/// distance is the total. Errors name the file and line.
EventLog ingest_event_log_csv(const std::string& path);

} // namespace qsv
