#include "qsv/csv.hpp"

#include <charconv>
#include <fstream>
#include <vector>

namespace qsv {

namespace {

std::string location(const std::string& path, std::size_t line) {
    return path + ":" + std::to_string(line);
}

// Split one CSV line at commas. No quoting: fields may not contain commas,
// except that callers may re-join trailing fields (free-text source cells).
std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& raw, const std::string& path, std::size_t line,
                    const char* column) {
    const std::string cell = trim(raw);
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || cell.empty())
        throw ingestion_error(location(path, line) + ": column '" + column +
                              "' is not a number: '" + cell + "'");
    return value;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ingestion_error("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

} // namespace

TrafficStatistic ingest_traffic_csv(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw ingestion_error(path + ": file is empty");
    const std::vector<std::string> header = split_fields(lines[0]);
    if (header.size() < 3 || trim(header[0]) != "M_km_per_year" ||
        trim(header[1]) != "A_events_per_year" || trim(header[2]) != "source")
        throw ingestion_error(
            location(path, 1) +
            ": header must be 'M_km_per_year,A_events_per_year,source'");
    std::size_t row = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        if (row != 0)
            throw ingestion_error(location(path, i + 1) +
                                  ": expected a single data row");
        row = i;
    }
    if (row == 0) throw ingestion_error(path + ": no data row");
    const std::vector<std::string> fields = split_fields(lines[row]);
    if (fields.size() < 2)
        throw ingestion_error(location(path, row + 1) + ": expected 3 columns");
    const double distance = parse_number(fields[0], path, row + 1, "M_km_per_year");
    const double events = parse_number(fields[1], path, row + 1, "A_events_per_year");
    // everything after the second comma is the free-text source cell
    std::string source;
    for (std::size_t i = 2; i < fields.size(); ++i) {
        if (i > 2) source += ",";
        source += fields[i];
    }
    source = trim(source);
    return TrafficStatistic(distance, events,
                            source + " (" + location(path, row + 1) + ")");
}

EventLog ingest_event_log_csv(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw ingestion_error(path + ": file is empty");
    const std::vector<std::string> header = split_fields(lines[0]);
    bool has_pm = false;
    if (header.size() == 2 && trim(header[0]) == "distance_km" &&
        trim(header[1]) == "event") {
        has_pm = false;
    } else if (header.size() == 3 && trim(header[0]) == "distance_km" &&
               trim(header[1]) == "event" && trim(header[2]) == "pm_value") {
        has_pm = true;
    } else {
        throw ingestion_error(location(path, 1) +
                              ": header must be 'distance_km,event' or "
                              "'distance_km,event,pm_value'");
    }
    std::vector<double> stamps;
    std::vector<PmSample> pm;
    double last_distance = -1.0;
    double total = 0.0;
    bool any = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::size_t line_no = i + 1;
        const std::vector<std::string> fields = split_fields(lines[i]);
        const std::size_t expected = has_pm ? 3 : 2;
        if (fields.size() != expected)
            throw ingestion_error(location(path, line_no) + ": expected " +
                                  std::to_string(expected) + " columns, found " +
                                  std::to_string(fields.size()));
        const double distance = parse_number(fields[0], path, line_no, "distance_km");
        if (any && distance <= last_distance)
            throw ingestion_error(location(path, line_no) +
                                  ": distance_km must be strictly increasing");
        const std::string event_cell = trim(fields[1]);
        if (event_cell != "0" && event_cell != "1")
            throw ingestion_error(location(path, line_no) +
                                  ": column 'event' must be 0 or 1, found '" +
                                  event_cell + "'");
        if (event_cell == "1") stamps.push_back(distance);
        if (has_pm && !trim(fields[2]).empty()) {
            pm.push_back(PmSample{distance, parse_number(fields[2], path, line_no, "pm_value")});
        }
        last_distance = distance;
        total = distance;
        any = true;
    }
    if (!any) throw ingestion_error(path + ": no data rows");
    return EventLog(total, std::move(stamps), std::move(pm));
}

} // namespace qsv
