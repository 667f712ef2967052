#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsv/study.hpp"
#include "qsv/types.hpp"

namespace qsv {

/// Side-by-side comparison of the distance each configured method plans for
/// the same acceptance criterion, normalized against the fixed-distance
/// baseline. Each row carries the assumptions a reader has to accept before
/// trusting the reduction factor.

struct ReportRow {
    std::string method;
    double distance_km;
    double alpha;
    /// Error of the second kind for sequential designs, demanded posterior
    /// credibility for the conjugate design, confidence for tail
    /// extrapolation; absent where the concept does not apply.
    std::optional<double> beta_or_credibility;
    double reduction_factor;
    std::vector<std::string> caveats;
};

struct ComparisonReport {
    ValidationTarget baseline;
    std::vector<ReportRow> rows;
};

ComparisonReport compare(const StudyConfig& config);

enum class OutputFormat { Table, Csv, Json };

OutputFormat output_format_from_string(const std::string& name);

/// Fixed-point-free presentation: significant digits, default stream format.
std::string format_number(double value, int digits);

/// RFC 4180 quoting, applied only when the cell needs it.
std::string csv_escape(const std::string& cell);

std::string render_table(const ComparisonReport& report, int digits);
std::string render_csv(const ComparisonReport& report, int digits);
std::string render_json(const ComparisonReport& report);
std::string render(const ComparisonReport& report, OutputFormat format, int digits);

} // namespace qsv
