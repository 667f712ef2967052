#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

// End-to-end checks of the command line binary, located via the
// QSV_CLI_BIN environment variable the test target exports.

namespace {

struct CommandResult {
    int exit_code;
    std::string output; // stdout and stderr merged
};

CommandResult run_cli(const std::string& args) {
    const char* bin = std::getenv("QSV_CLI_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "QSV_CLI_BIN must point at the cli binary");
    const std::string command = std::string(bin) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string output;
    char buffer[4096];
    std::size_t got = 0;
    while ((got = std::fread(buffer, 1, sizeof buffer, pipe)) > 0)
        output.append(buffer, got);
    const int status = pclose(pipe);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code, output};
}

std::filesystem::path scratch_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("qsv_cli_" + name);
}

std::string write_file(const std::string& name, const std::string& content) {
    const std::filesystem::path path = scratch_path(name);
    std::ofstream out(path);
    out << content;
    out.close();
    return path.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// benchmark 1e6 km between events, so the criterion rate is 1e-6 per km
const char* kBaseConfig = R"({
  "behavior": {"id": "hb-cut-in", "description": "cli fixture"},
  "traffic": {"total_distance_km_per_year": 1e9, "events_per_year": 1000},
  "rationale": "PRB",
  "test": {"significance": 0.05, "allowed_events": 0},
  "sensitivity": {"significances": [0.01, 0.05, 0.1], "allowed_events": [0, 1, 2]},
  "sprt": {"rate_h1_per_km": 5e-7, "alpha": 0.05, "beta": 0.05},
  "bayes": {"prior": {"shape": 1, "pseudo_distance_km": 1e6}, "significance": 0.05},
  "decomposition": {"precursor_id": "pre-brake", "conditional_p": 0.01,
                    "conditional_p_upper": 0.02, "independence_justified": true},
  "eva": {"threshold": 2.0, "critical_value": 4.0, "confidence": 0.95},
  "simulation": {"method": "poisson_nhst", "replications": 200, "seed": 7,
                 "truth": {"rate_per_km": 1e-6}}
})";

std::string base_config() { return write_file("base.json", kBaseConfig); }

bool contains(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("derive reports the acceptance criterion") {
    const std::string config = base_config();
    const CommandResult result = run_cli("derive -c " + config);
    CHECK(result.exit_code == 0);
    CHECK(contains(result.output, "max_event_rate_per_km"));
    CHECK(contains(result.output, "distance_between_events_km"));
    CHECK(contains(result.output, "1e-06"));
}

TEST_CASE("json output is machine readable") {
    const std::string config = base_config();
    const CommandResult result = run_cli("derive -c " + config + " -f json");
    CHECK(result.exit_code == 0);
    const nlohmann::json doc = nlohmann::json::parse(result.output);
    CHECK(doc["max_event_rate_per_km"].get<double>() == doctest::Approx(1e-6));
    CHECK(doc["distance_between_events_km"].get<double>() == doctest::Approx(1e6));
    CHECK(doc.contains("criterion"));
}

TEST_CASE("csv output starts with the field,value header") {
    const std::string config = base_config();
    const CommandResult result = run_cli("target -c " + config + " -f csv");
    CHECK(result.exit_code == 0);
    CHECK(result.output.rfind("field,value\n", 0) == 0);
    CHECK(contains(result.output, "required_distance_km,"));
}

TEST_CASE("digits can be overridden from the command line") {
    const std::string config = base_config();
    const CommandResult coarse = run_cli("target -c " + config);
    CHECK(coarse.exit_code == 0);
    CHECK(contains(coarse.output, "2.99573e+06"));

    const CommandResult fine = run_cli("target -c " + config + " --digits 12");
    CHECK(fine.exit_code == 0);
    CHECK(contains(fine.output, "2995732.27355"));
}

TEST_CASE("a config missing a required section names the field") {
    const std::string config = write_file("missing.json", R"({
      "behavior": {"id": "hb", "description": "x"},
      "traffic": {"total_distance_km_per_year": 1e9, "events_per_year": 1000}
    })");
    const CommandResult result = run_cli("derive -c " + config);
    CHECK(result.exit_code == 2);
    CHECK(contains(result.output, "'test'"));
}

TEST_CASE("an unreadable config fails cleanly") {
    const CommandResult result = run_cli("derive -c /nonexistent/config.json");
    CHECK(result.exit_code == 2);
    CHECK(contains(result.output, "config"));
}

TEST_CASE("target judges driven logs") {
    const std::string config = base_config();

    SUBCASE("an early event fails the zero-allowance test") {
        const std::string log = write_file("fail.csv",
                                           "distance_km,event\n"
                                           "1000,1\n"
                                           "500000,0\n");
        const CommandResult result = run_cli("target -c " + config + " --log " + log);
        CHECK(result.exit_code == 0);
        CHECK(contains(result.output, "verdict"));
        CHECK(contains(result.output, "fail"));
    }

    SUBCASE("an event-free drive past the requirement passes") {
        const std::string log = write_file("pass.csv",
                                           "distance_km,event\n"
                                           "3000000,0\n");
        const CommandResult result = run_cli("target -c " + config + " --log " + log);
        CHECK(result.exit_code == 0);
        CHECK(contains(result.output, "pass"));
    }

    SUBCASE("a short event-free drive stays incomplete") {
        const std::string log = write_file("short.csv",
                                           "distance_km,event\n"
                                           "1000000,0\n");
        const CommandResult result = run_cli("target -c " + config + " --log " + log);
        CHECK(result.exit_code == 0);
        CHECK(contains(result.output, "incomplete"));
    }
}

TEST_CASE("extending a concluded test is a protocol violation") {
    const std::string config = base_config();
    const std::string first = write_file("concluded.csv",
                                         "distance_km,event\n"
                                         "3000000,0\n");
    const std::string second = write_file("extension.csv",
                                          "distance_km,event\n"
                                          "3100000,0\n");
    const CommandResult result =
        run_cli("target -c " + config + " --log " + first + " --log " + second);
    CHECK(result.exit_code == 4);
    CHECK(contains(result.output, "protocol"));
}

TEST_CASE("a malformed log names the file and line") {
    const std::string config = base_config();
    const std::string log = write_file("broken.csv",
                                       "distance_km,event\n"
                                       "1000,0\n"
                                       "2000,maybe\n");
    const CommandResult result = run_cli("target -c " + config + " --log " + log);
    CHECK(result.exit_code == 2);
    CHECK(contains(result.output, log + ":3"));
}

TEST_CASE("sensitivity csv emits one row per grid cell") {
    const std::string config = base_config();
    const CommandResult result = run_cli("sensitivity -c " + config + " -f csv");
    CHECK(result.exit_code == 0);
    std::istringstream lines(result.output);
    std::string line;
    std::size_t count = 0;
    while (std::getline(lines, line))
        if (!line.empty()) ++count;
    CHECK(count == 1 + 3 * 3);
    CHECK(result.output.rfind("significance,allowed_events,tau_km\n", 0) == 0);
}

TEST_CASE("sprt replays an event-free log to acceptance") {
    const std::string config = base_config();
    const std::string log = write_file("quiet.csv",
                                       "distance_km,event\n"
                                       "6000000,0\n");
    const CommandResult result = run_cli("sprt -c " + config + " --log " + log);
    CHECK(result.exit_code == 0);
    CHECK(contains(result.output, "pass"));
    CHECK(contains(result.output, "log_likelihood_ratio"));
}

TEST_CASE("bayes credits the prior pseudo-distance") {
    const std::string config = base_config();
    const std::string log = write_file("bayes.csv",
                                       "distance_km,event\n"
                                       "2000000,0\n");
    const CommandResult result =
        run_cli("bayes -c " + config + " --log " + log + " -f json");
    CHECK(result.exit_code == 0);
    const nlohmann::json doc = nlohmann::json::parse(result.output);
    // prior 1e6 km plus 2e6 km driven exceeds the 2.9957e6 km requirement
    CHECK(doc["posterior_pseudo_distance_km"].get<double>() == doctest::Approx(3e6));
    CHECK(doc["credibility"].get<double>() > 0.95);
    CHECK(doc["verdict"].get<std::string>() == "pass");
}

TEST_CASE("compare emits the pinned csv schema") {
    const std::string config = base_config();
    const CommandResult result = run_cli("compare -c " + config + " -f csv");
    CHECK(result.exit_code == 0);
    CHECK(result.output.rfind(
              "method,tau_km,alpha,beta_or_credibility,reduction_factor,caveats\n", 0) == 0);
    CHECK(contains(result.output, "\npoisson_nhst,"));
    CHECK(contains(result.output, "\ndecomposition,"));
    CHECK(contains(result.output, "\nsprt,"));
    CHECK(contains(result.output, "\nbayes,"));
}

TEST_CASE("eva needs exactly one log") {
    const std::string config = base_config();
    const CommandResult result = run_cli("eva -c " + config);
    CHECK(result.exit_code == 2);
    CHECK(contains(result.output, "exactly one"));
}

TEST_CASE("simulate is reproducible byte for byte") {
    const std::string config = base_config();
    const std::string out_a = scratch_path("sim_a.json").string();
    const std::string out_b = scratch_path("sim_b.json").string();
    const std::string args = "simulate -c " + config +
                             " --replications 50 --seed 5 -f json -o ";
    CHECK(run_cli(args + out_a).exit_code == 0);
    CHECK(run_cli(args + out_b).exit_code == 0);
    const std::string first = read_file(out_a);
    CHECK(first == read_file(out_b));
    CHECK(!first.empty());

    const std::string out_c = scratch_path("sim_c.json").string();
    const std::string other = "simulate -c " + config +
                              " --replications 50 --seed 6 -f json -o " + out_c;
    CHECK(run_cli(other).exit_code == 0);
    CHECK(first != read_file(out_c));
}

TEST_CASE("parse failures exit with the ingestion code") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(contains(run_cli("--help").output, "derive"));
    CHECK(run_cli("frobnicate -c x.json").exit_code == 2);
    CHECK(run_cli("derive").exit_code == 2); // missing --config
    const std::string config = base_config();
    CHECK(run_cli("derive -c " + config + " -f yaml").exit_code == 2);
}
