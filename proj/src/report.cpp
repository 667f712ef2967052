#include "qsv/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "qsv/adaptive.hpp"
#include "qsv/errors.hpp"
#include "qsv/frequentist.hpp"
#include "qsv/structural.hpp"

namespace qsv {

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

double reduction_against(double baseline_km, double distance_km) {
    if (distance_km <= 0.0) return std::numeric_limits<double>::infinity();
    return baseline_km / distance_km;
}

} // namespace

ComparisonReport compare(const StudyConfig& config) {
    const AcceptanceCriterion criterion = config.criterion();
    const ValidationTarget baseline = validation_target(criterion, config.test);
    const double tau0 = baseline.required_distance_km;

    std::vector<ReportRow> rows;
    rows.push_back(ReportRow{"poisson_nhst", tau0, config.test.significance, std::nullopt,
                             1.0, {}});

    if (config.decomposition) {
        const ValidationTarget scaled =
            decomposed_target(criterion, *config.decomposition, config.test);
        std::vector<std::string> caveats;
        caveats.push_back("target scaled by an upper bound on the precursor-to-event step;"
                          " that bound needs evidence gathered outside the field test");
        if (!config.decomposition->independence_justified)
            caveats.push_back("independence between precursor exposure and the conditional"
                              " step is not yet justified");
        rows.push_back(ReportRow{"decomposition", scaled.required_distance_km,
                                 config.test.significance, std::nullopt,
                                 reduction_against(tau0, scaled.required_distance_km),
                                 std::move(caveats)});
    }

    if (config.sprt) {
        const SprtConfig sprt = config.sprt_config();
        const double expected = sprt_expected_distance(sprt, sprt.rate_h1_per_km);
        rows.push_back(ReportRow{
            "sprt", expected, sprt.alpha, sprt.beta, reduction_against(tau0, expected),
            {"distance is the expectation at the design safe rate; individual runs vary"
             " and can exceed the fixed-distance plan"}});
    }

    if (config.bayes) {
        const BayesSpec& bayes = *config.bayes;
        const double required = bayes_required_distance(bayes.prior, criterion,
                                                        bayes.significance,
                                                        bayes.assumed_events);
        rows.push_back(ReportRow{
            "bayes", required, bayes.significance, 1.0 - bayes.significance,
            reduction_against(tau0, required),
            {"credit is taken for prior pseudo-exposure; the validity of that prior"
             " evidence lies outside the statistical argument"}});
    }

    if (config.eva && config.eva->expected_exceedances_per_km) {
        const EvaSpec& eva = *config.eva;
        const double expected_rate = *eva.expected_exceedances_per_km;
        if (expected_rate <= 0.0 || !std::isfinite(expected_rate))
            throw validation_error("'expected_exceedances_per_km' must be positive");
        const double planning =
            static_cast<double>(eva.pot.min_exceedances) / expected_rate;
        rows.push_back(ReportRow{
            "eva", planning, 1.0 - eva.confidence, eva.confidence,
            reduction_against(tau0, planning),
            {"the verdict extrapolates a fitted tail beyond the observed excesses",
             "the link between the performance measure and actual events needs"
             " separate validation"}});
    }

    return ComparisonReport{baseline, std::move(rows)};
}

OutputFormat output_format_from_string(const std::string& name) {
    if (name == "table") return OutputFormat::Table;
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    throw validation_error("unknown output format '" + name + "'");
}

std::string format_number(double value, int digits) {
    std::ostringstream out;
    out << std::setprecision(digits) << value;
    return out.str();
}

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace {

constexpr const char* kColumnNames[] = {"method", "tau_km", "alpha",
                                        "beta_or_credibility", "reduction_factor",
                                        "caveats"};

std::vector<std::string> row_cells(const ReportRow& row, int digits, const char* none) {
    return {row.method,
            format_number(row.distance_km, digits),
            format_number(row.alpha, digits),
            row.beta_or_credibility ? format_number(*row.beta_or_credibility, digits)
                                    : std::string(none),
            format_number(row.reduction_factor, digits),
            join(row.caveats, "; ")};
}

} // namespace

std::string render_table(const ComparisonReport& report, int digits) {
    std::vector<std::vector<std::string>> grid;
    grid.emplace_back(std::begin(kColumnNames), std::end(kColumnNames));
    for (const ReportRow& row : report.rows) grid.push_back(row_cells(row, digits, "-"));

    std::size_t widths[6] = {0, 0, 0, 0, 0, 0};
    for (const auto& cells : grid)
        for (std::size_t c = 0; c < 6; ++c) widths[c] = std::max(widths[c], cells[c].size());

    std::ostringstream out;
    for (const auto& cells : grid) {
        for (std::size_t c = 0; c < 6; ++c) {
            if (c > 0) out << "  ";
            // keep the last column ragged so caveat text has no trailing pad
            if (c == 5)
                out << cells[c];
            else
                out << std::left << std::setw(static_cast<int>(widths[c])) << cells[c];
        }
        out << '\n';
    }
    return out.str();
}

std::string render_csv(const ComparisonReport& report, int digits) {
    std::ostringstream out;
    out << join({std::begin(kColumnNames), std::end(kColumnNames)}, ",") << '\n';
    for (const ReportRow& row : report.rows) {
        std::vector<std::string> cells = row_cells(row, digits, "");
        for (std::string& cell : cells) cell = csv_escape(cell);
        out << join(cells, ",") << '\n';
    }
    return out.str();
}

std::string render_json(const ComparisonReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const ReportRow& row : report.rows) {
        nlohmann::json r{{"method", row.method},
                         {"tau_km", row.distance_km},
                         {"alpha", row.alpha},
                         {"reduction_factor", row.reduction_factor},
                         {"caveats", row.caveats}};
        r["beta_or_credibility"] =
            row.beta_or_credibility ? nlohmann::json(*row.beta_or_credibility)
                                    : nlohmann::json(nullptr);
        rows.push_back(std::move(r));
    }
    nlohmann::json doc{{"baseline_tau_km", report.baseline.required_distance_km},
                       {"rows", std::move(rows)}};
    return doc.dump(2) + "\n";
}

std::string render(const ComparisonReport& report, OutputFormat format, int digits) {
    switch (format) {
    case OutputFormat::Table: return render_table(report, digits);
    case OutputFormat::Csv: return render_csv(report, digits);
    case OutputFormat::Json: return render_json(report);
    }
    throw validation_error("unknown output format");
}

} // namespace qsv
