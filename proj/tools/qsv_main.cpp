#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qsv/acceptance.hpp"
#include "qsv/adaptive.hpp"
#include "qsv/csv.hpp"
#include "qsv/errors.hpp"
#include "qsv/eva.hpp"
#include "qsv/frequentist.hpp"
#include "qsv/report.hpp"
#include "qsv/serialization.hpp"
#include "qsv/simulate.hpp"
#include "qsv/structural.hpp"
#include "qsv/study.hpp"
#include "qsv/types.hpp"

namespace {

using namespace qsv;

/// Key-value result that renders as an aligned table, a two-column csv, or
/// a json object (keys sorted). Values are formatted once so every format
/// shows the same digits.
class KvReport {
public:
    explicit KvReport(int digits) : digits_(digits) {}

    void add_number(const std::string& key, double value) {
        rows_.emplace_back(key, format_number(value, digits_));
        json_[key] = value;
    }
    void add_integer(const std::string& key, std::int64_t value) {
        rows_.emplace_back(key, std::to_string(value));
        json_[key] = value;
    }
    void add_text(const std::string& key, const std::string& value) {
        rows_.emplace_back(key, value);
        json_[key] = value;
    }
    void add_flag(const std::string& key, bool value) {
        rows_.emplace_back(key, value ? "true" : "false");
        json_[key] = value;
    }
    /// Structured payload visible in the json rendering only.
    void add_detail(const std::string& key, nlohmann::json value) {
        json_[key] = std::move(value);
    }

    std::string render(OutputFormat format) const {
        switch (format) {
        case OutputFormat::Json: return json_.dump(2) + "\n";
        case OutputFormat::Csv: {
            std::ostringstream out;
            out << "field,value\n";
            for (const auto& [key, value] : rows_)
                out << csv_escape(key) << ',' << csv_escape(value) << '\n';
            return out.str();
        }
        case OutputFormat::Table: {
            std::size_t width = 0;
            for (const auto& [key, value] : rows_) width = std::max(width, key.size());
            std::ostringstream out;
            for (const auto& [key, value] : rows_)
                out << key << std::string(width - key.size() + 2, ' ') << value << '\n';
            return out.str();
        }
        }
        return {};
    }

private:
    int digits_;
    std::vector<std::pair<std::string, std::string>> rows_;
    nlohmann::json json_ = nlohmann::json::object();
};

EventLog load_log(const std::string& path) {
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
        std::ifstream in(path);
        if (!in) throw ingestion_error("cannot open log file '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw ingestion_error(path + ": " + e.what());
        }
        return event_log_from_json(j);
    }
    return ingest_event_log_csv(path);
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw validation_error("cannot open output file '" + out_path + "'");
    out << text;
    if (!out) throw validation_error("writing output file '" + out_path + "' failed");
}

struct CommonOptions {
    std::string config_path;
    std::string out_path;
    std::string format = "table";
    int digits = 0; // 0 keeps the config's value
};

void add_common(CLI::App* cmd, CommonOptions& options) {
    cmd->add_option("-c,--config", options.config_path, "study configuration (json)")
        ->required();
    cmd->add_option("-o,--out", options.out_path, "write output to this file");
    cmd->add_option("-f,--format", options.format, "output format: table, csv or json")
        ->check(CLI::IsMember({"table", "csv", "json"}));
    cmd->add_option("--digits", options.digits, "significant digits in formatted output")
        ->check(CLI::Range(1, 17));
}

int effective_digits(const CommonOptions& options, const StudyConfig& config) {
    return options.digits > 0 ? options.digits : config.digits;
}

std::string verdict_text(Verdict v) { return to_string(v); }

std::string run_derive(const StudyConfig& config, OutputFormat format, int digits) {
    const AcceptanceCriterion criterion = config.criterion();
    KvReport kv(digits);
    kv.add_text("behavior", criterion.behavior.id);
    kv.add_number("total_distance_km_per_year",
                  criterion.benchmark.statistic.total_distance_km_per_year);
    kv.add_number("events_per_year", criterion.benchmark.statistic.events_per_year);
    kv.add_number("distance_between_events_km",
                  criterion.benchmark.distance_between_events_km);
    kv.add_number("safety_factor", criterion.factors.safety_factor);
    kv.add_number("reference_share", criterion.factors.reference_share);
    kv.add_number("effectiveness", criterion.factors.effectiveness);
    kv.add_text("rationale", to_string(criterion.rationale));
    kv.add_number("max_event_rate_per_km", criterion.max_event_rate_per_km);
    kv.add_detail("criterion", to_json(criterion));
    return kv.render(format);
}

std::string run_target(const StudyConfig& config, const std::vector<std::string>& logs,
                       OutputFormat format, int digits) {
    const ValidationTarget target = validation_target(config.criterion(), config.test);
    KvReport kv(digits);
    kv.add_text("behavior", target.criterion.behavior.id);
    kv.add_number("max_event_rate_per_km", target.criterion.max_event_rate_per_km);
    kv.add_number("significance", target.params.significance);
    kv.add_integer("allowed_events", target.params.allowed_events);
    kv.add_number("required_distance_km", target.required_distance_km);
    if (!logs.empty()) {
        EvaluationSession session(target);
        double observed_km = 0.0;
        std::int64_t observed_events = 0;
        for (const std::string& path : logs) {
            const EventLog log = load_log(path);
            session.observe(log);
            observed_km = log.total_distance_km;
            observed_events = static_cast<std::int64_t>(log.event_stamps_km.size());
        }
        kv.add_number("observed_distance_km", observed_km);
        kv.add_integer("observed_events", observed_events);
        kv.add_text("verdict", verdict_text(session.verdict()));
    }
    return kv.render(format);
}

std::string run_sensitivity(const StudyConfig& config, OutputFormat format, int digits) {
    if (!config.sensitivity)
        throw validation_error("the config has no sensitivity section");
    const SensitivitySpec& spec = *config.sensitivity;
    const SensitivityTable table =
        sensitivity_table(config.criterion(), spec.significances, spec.allowed_events);

    if (format == OutputFormat::Json) {
        nlohmann::json doc{{"significances", table.significances},
                           {"allowed_events", table.allowed_events}};
        nlohmann::json grid = nlohmann::json::array();
        for (std::size_t i = 0; i < table.significances.size(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t j = 0; j < table.allowed_events.size(); ++j)
                row.push_back(table.at(i, j).required_distance_km);
            grid.push_back(std::move(row));
        }
        doc["tau_km"] = std::move(grid);
        return doc.dump(2) + "\n";
    }

    if (format == OutputFormat::Csv) {
        std::ostringstream out;
        out << "significance,allowed_events,tau_km\n";
        for (std::size_t i = 0; i < table.significances.size(); ++i)
            for (std::size_t j = 0; j < table.allowed_events.size(); ++j)
                out << format_number(table.significances[i], digits) << ','
                    << table.allowed_events[j] << ','
                    << format_number(table.at(i, j).required_distance_km, digits) << '\n';
        return out.str();
    }

    // table: significances down, allowed event counts across
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header{"significance"};
    for (std::int64_t k : table.allowed_events) header.push_back("k=" + std::to_string(k));
    grid.push_back(std::move(header));
    for (std::size_t i = 0; i < table.significances.size(); ++i) {
        std::vector<std::string> row{format_number(table.significances[i], digits)};
        for (std::size_t j = 0; j < table.allowed_events.size(); ++j)
            row.push_back(format_number(table.at(i, j).required_distance_km, digits));
        grid.push_back(std::move(row));
    }
    std::vector<std::size_t> widths(grid.front().size(), 0);
    for (const auto& row : grid)
        for (std::size_t c = 0; c < row.size(); ++c)
            widths[c] = std::max(widths[c], row[c].size());
    std::ostringstream out;
    for (const auto& row : grid) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out << "  ";
            out << row[c] << std::string(widths[c] - row[c].size(), ' ');
        }
        out << '\n';
    }
    return out.str();
}

std::string run_sprt(const StudyConfig& config, const std::vector<std::string>& logs,
                     OutputFormat format, int digits) {
    const SprtConfig sprt = config.sprt_config();
    KvReport kv(digits);
    kv.add_number("rate_h0_per_km", sprt.rate_h0_per_km);
    kv.add_number("rate_h1_per_km", sprt.rate_h1_per_km);
    kv.add_number("alpha", sprt.alpha);
    kv.add_number("beta", sprt.beta);
    kv.add_number("upper_threshold", sprt.upper_threshold());
    kv.add_number("lower_threshold", sprt.lower_threshold());
    kv.add_number("zero_event_accept_km", sprt.upper_threshold() / sprt.drift_per_km());
    kv.add_number("expected_distance_safe_km",
                  sprt_expected_distance(sprt, sprt.rate_h1_per_km));
    kv.add_number("expected_distance_unsafe_km",
                  sprt_expected_distance(sprt, sprt.rate_h0_per_km));
    if (sprt.truncation_km) kv.add_number("truncation_km", *sprt.truncation_km);

    if (!logs.empty()) {
        SprtState state;
        for (const std::string& path : logs) {
            const EventLog log = load_log(path);
            double previous = 0.0;
            for (double stamp : log.event_stamps_km) {
                state = sprt_update(sprt, state, stamp - previous, 1);
                previous = stamp;
            }
            if (log.total_distance_km > previous)
                state = sprt_update(sprt, state, log.total_distance_km - previous, 0);
        }
        if (state.decision == SprtDecision::Continue && sprt.truncation_km &&
            state.distance_km >= *sprt.truncation_km)
            state = sprt_finalize_at_truncation(sprt, state);
        kv.add_number("observed_distance_km", state.distance_km);
        kv.add_integer("observed_events", state.events);
        kv.add_number("log_likelihood_ratio", state.log_likelihood_ratio);
        Verdict verdict = state.decision == SprtDecision::AcceptSafe ? Verdict::Pass
                          : state.decision == SprtDecision::RejectSafe
                              ? Verdict::Fail
                              : Verdict::Incomplete;
        kv.add_text("verdict", verdict_text(verdict));
    }
    return kv.render(format);
}

std::string run_bayes(const StudyConfig& config, const std::vector<std::string>& logs,
                      OutputFormat format, int digits) {
    if (!config.bayes) throw validation_error("the config has no bayes section");
    const BayesSpec& spec = *config.bayes;
    const AcceptanceCriterion criterion = config.criterion();
    KvReport kv(digits);
    kv.add_number("prior_shape", spec.prior.shape);
    kv.add_number("prior_pseudo_distance_km", spec.prior.pseudo_distance_km);
    kv.add_number("significance", spec.significance);
    kv.add_integer("assumed_events", spec.assumed_events);
    kv.add_number("required_distance_km",
                  bayes_required_distance(spec.prior, criterion, spec.significance,
                                          spec.assumed_events));
    if (!logs.empty()) {
        GammaPrior posterior = spec.prior;
        for (const std::string& path : logs)
            posterior = bayes_posterior(posterior, load_log(path));
        kv.add_number("posterior_shape", posterior.shape);
        kv.add_number("posterior_pseudo_distance_km", posterior.pseudo_distance_km);
        kv.add_number("credibility",
                      gamma_rate_cdf(posterior, criterion.max_event_rate_per_km));
        kv.add_text("verdict", verdict_text(bayes_decision(posterior, criterion,
                                                           spec.significance)));
    }
    return kv.render(format);
}

std::string run_decompose(const StudyConfig& config, OutputFormat format, int digits) {
    const AcceptanceCriterion criterion = config.criterion();
    KvReport kv(digits);
    kv.add_number("parent_rate_per_km", criterion.max_event_rate_per_km);
    bool any = false;

    if (config.decomposition) {
        any = true;
        const HbDecomposition& dec = *config.decomposition;
        const ValidationTarget base = validation_target(criterion, config.test);
        const ValidationTarget scaled = decomposed_target(criterion, dec, config.test);
        kv.add_text("precursor_id", dec.precursor_id);
        kv.add_number("conditional_p", dec.conditional_p);
        kv.add_number("conditional_p_upper", dec.conditional_p_upper);
        kv.add_flag("independence_justified", dec.independence_justified);
        kv.add_number("precursor_rate_per_km", scaled.criterion.max_event_rate_per_km);
        kv.add_number("required_distance_km", scaled.required_distance_km);
        kv.add_number("reduction_factor",
                      base.required_distance_km / scaled.required_distance_km);
    }

    if (config.budget) {
        any = true;
        const CriterionBudget budget(criterion, config.budget->shares);
        const std::vector<AcceptanceCriterion> parts = split_criterion(budget);
        nlohmann::json detail = nlohmann::json::array();
        for (const AcceptanceCriterion& part : parts) {
            kv.add_number("budget." + part.behavior.id + ".max_event_rate_per_km",
                          part.max_event_rate_per_km);
            const ValidationTarget part_target = validation_target(part, config.test);
            kv.add_number("budget." + part.behavior.id + ".required_distance_km",
                          part_target.required_distance_km);
            detail.push_back(to_json(part));
        }
        kv.add_detail("budget_criteria", std::move(detail));
    }

    if (config.redundancy) {
        any = true;
        kv.add_number("redundancy_rate_per_km", redundancy_rate(*config.redundancy));
    }

    if (!any)
        throw validation_error(
            "the config has no decomposition, budget or redundancy section");
    return kv.render(format);
}

std::string run_eva(const StudyConfig& config, const std::vector<std::string>& logs,
                    std::int64_t bootstrap_override, std::uint64_t seed,
                    OutputFormat format, int digits) {
    if (!config.eva) throw validation_error("the config has no eva section");
    if (logs.size() != 1)
        throw validation_error("eva evaluation needs exactly one --log");
    const EvaSpec& spec = *config.eva;
    const AcceptanceCriterion criterion = config.criterion();
    const EventLog log = load_log(logs.front());

    const Exceedances exceedances = extract_exceedances(log, spec.pot);
    const GpdFit fit = fit_gpd(exceedances.excesses, exceedances.rate_per_km,
                               spec.pot.min_exceedances);
    const RateExtrapolation point = extrapolate_rate(fit, spec.pot);
    double upper = profile_rate_upper_bound(exceedances, fit, spec.pot, spec.confidence);
    if (upper < point.rate_per_km) upper = point.rate_per_km;

    KvReport kv(digits);
    kv.add_number("threshold", spec.pot.threshold);
    kv.add_number("critical_value", spec.pot.critical_value);
    kv.add_integer("exceedances", static_cast<std::int64_t>(fit.count));
    kv.add_number("exceedance_rate_per_km", fit.exceedance_rate_per_km);
    kv.add_number("shape", fit.shape);
    kv.add_number("scale", fit.scale);
    if (fit.excess_endpoint) kv.add_number("excess_endpoint", *fit.excess_endpoint);
    kv.add_flag("at_search_bound", fit.at_search_bound);
    kv.add_number("rate_per_km", point.rate_per_km);
    kv.add_flag("beyond_endpoint", point.beyond_endpoint);
    kv.add_number("confidence", spec.confidence);
    kv.add_number("rate_upper_bound_per_km", upper);

    const std::size_t resamples = bootstrap_override >= 0
                                      ? static_cast<std::size_t>(bootstrap_override)
                                      : spec.bootstrap_resamples;
    if (resamples > 0)
        kv.add_number("bootstrap_upper_bound_per_km",
                      bootstrap_rate_upper_bound(exceedances, spec.pot, spec.confidence,
                                                 resamples, seed));
    kv.add_number("criterion_rate_per_km", criterion.max_event_rate_per_km);
    kv.add_text("verdict", verdict_text(eva_verdict(point.rate_per_km, upper, criterion)));
    return kv.render(format);
}

std::string run_simulate(const StudyConfig& config, bool seed_set, std::uint64_t seed,
                         bool reps_set, std::int64_t replications, unsigned threads,
                         bool emit_outcomes, OutputFormat format, int digits) {
    CampaignPlan plan = config.campaign_plan();
    if (seed_set) plan.seed = seed;
    if (reps_set) {
        if (replications <= 0) throw validation_error("--replications must be positive");
        plan.replications = replications;
    }
    const CampaignResult result = run_campaign(plan, config.simulation->truth, threads);

    KvReport kv(digits);
    kv.add_text("method", to_string(plan.method));
    kv.add_integer("replications", result.replications);
    kv.add_integer("seed", static_cast<std::int64_t>(plan.seed));
    kv.add_integer("passes", result.passes);
    kv.add_integer("fails", result.fails);
    kv.add_integer("incompletes", result.incompletes);
    kv.add_number("pass_fraction", result.pass_fraction);
    kv.add_number("pass_fraction_se", result.pass_fraction_se);
    kv.add_number("mean_decision_distance_km", result.mean_decision_distance_km);
    if (emit_outcomes) {
        nlohmann::json outcomes = nlohmann::json::array();
        for (const ReplicationOutcome& outcome : result.outcomes)
            outcomes.push_back({{"verdict", verdict_text(outcome.verdict)},
                                {"decision_distance_km", outcome.decision_distance_km}});
        kv.add_detail("outcomes", std::move(outcomes));
    }
    return kv.render(format);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"distance-based safety validation: planning, evaluation and simulation"};
    app.require_subcommand(1);

    CommonOptions derive_opts, target_opts, sensitivity_opts, sprt_opts, bayes_opts,
        decompose_opts, eva_opts, simulate_opts, compare_opts;
    std::vector<std::string> target_logs, sprt_logs, bayes_logs, eva_logs;
    std::int64_t eva_bootstrap = -1;
    std::uint64_t eva_seed = 1;
    std::uint64_t sim_seed = 0;
    std::int64_t sim_replications = 0;
    unsigned sim_threads = 1;
    bool sim_emit_outcomes = false;

    CLI::App* derive = app.add_subcommand(
        "derive", "derive the benchmark and acceptance criterion");
    add_common(derive, derive_opts);

    CLI::App* target = app.add_subcommand(
        "target", "plan the fixed-distance test, optionally judging driven logs");
    add_common(target, target_opts);
    target->add_option("--log", target_logs,
                       "event log (csv, or json by extension); repeatable, in test order");

    CLI::App* sensitivity = app.add_subcommand(
        "sensitivity", "required distance across significance levels and event budgets");
    add_common(sensitivity, sensitivity_opts);

    CLI::App* sprt = app.add_subcommand(
        "sprt", "sequential test design, optionally replaying driven logs");
    add_common(sprt, sprt_opts);
    sprt->add_option("--log", sprt_logs, "event log; repeatable, replayed in order");

    CLI::App* bayes = app.add_subcommand(
        "bayes", "conjugate evaluation against the criterion");
    add_common(bayes, bayes_opts);
    bayes->add_option("--log", bayes_logs, "event log; repeatable, accumulated in order");

    CLI::App* decompose = app.add_subcommand(
        "decompose", "structural reductions: precursor scaling, budgets, redundancy");
    add_common(decompose, decompose_opts);

    CLI::App* eva = app.add_subcommand(
        "eva", "tail extrapolation from performance-measure samples in a log");
    add_common(eva, eva_opts);
    eva->add_option("--log", eva_logs, "event log with performance samples (exactly one)");
    eva->add_option("--bootstrap", eva_bootstrap,
                    "bootstrap resamples for the upper-bound cross-check");
    eva->add_option("--seed", eva_seed, "bootstrap seed");

    CLI::App* simulate = app.add_subcommand(
        "simulate", "replicated campaign of the configured method against a ground truth");
    add_common(simulate, simulate_opts);
    CLI::Option* seed_opt =
        simulate->add_option("--seed", sim_seed, "override the configured seed");
    CLI::Option* reps_opt = simulate->add_option("--replications", sim_replications,
                                                 "override the configured replications");
    simulate->add_option("--threads", sim_threads, "worker threads")
        ->check(CLI::Range(1u, 64u));
    simulate->add_flag("--emit-outcomes", sim_emit_outcomes,
                       "include per-replication outcomes (json rendering)");

    CLI::App* compare = app.add_subcommand(
        "compare", "side-by-side distance comparison of the configured methods");
    add_common(compare, compare_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const CommonOptions& opts = derive->parsed()        ? derive_opts
                                    : target->parsed()      ? target_opts
                                    : sensitivity->parsed() ? sensitivity_opts
                                    : sprt->parsed()        ? sprt_opts
                                    : bayes->parsed()       ? bayes_opts
                                    : decompose->parsed()   ? decompose_opts
                                    : eva->parsed()         ? eva_opts
                                    : simulate->parsed()    ? simulate_opts
                                                            : compare_opts;
        const StudyConfig config = StudyConfig::load(opts.config_path);
        const OutputFormat format = output_format_from_string(opts.format);
        const int digits = effective_digits(opts, config);

        std::string output;
        if (derive->parsed()) {
            output = run_derive(config, format, digits);
        } else if (target->parsed()) {
            output = run_target(config, target_logs, format, digits);
        } else if (sensitivity->parsed()) {
            output = run_sensitivity(config, format, digits);
        } else if (sprt->parsed()) {
            output = run_sprt(config, sprt_logs, format, digits);
        } else if (bayes->parsed()) {
            output = run_bayes(config, bayes_logs, format, digits);
        } else if (decompose->parsed()) {
            output = run_decompose(config, format, digits);
        } else if (eva->parsed()) {
            output = run_eva(config, eva_logs, eva_bootstrap, eva_seed, format, digits);
        } else if (simulate->parsed()) {
            output = run_simulate(config, seed_opt->count() > 0, sim_seed,
                                  reps_opt->count() > 0, sim_replications, sim_threads,
                                  sim_emit_outcomes, format, digits);
        } else {
            output = render(qsv::compare(config), format, digits);
        }
        write_output(output, opts.out_path);
    } catch (const protocol_error& e) {
        std::cerr << "protocol error: " << e.what() << '\n';
        return 4;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const qsv::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
