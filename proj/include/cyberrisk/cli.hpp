#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "ingestion.hpp"
#include "report_io.hpp"
#include "risk_measures.hpp"
#include "scenario.hpp"

// Command-line front end. run_cli never calls exit(); it returns the process
// exit code so tests can drive it in-process.
namespace cyberrisk::cli {

enum ExitCode : int {
    kOk = 0,
    kIoError = 1,
    kUsageError = 2,
    kNumericFault = 3,
    kInsufficientData = 4,
};

namespace detail {

inline void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty() || out_path == "-") {
        out << text;
        out.flush();
        return;
    }
    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw InputError("cannot open output file '" + out_path + "'");
    file << text;
    if (!file.flush()) throw InputError("failed writing output file '" + out_path + "'");
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw InputError("failed reading '" + path + "'");
    return buf.str();
}

// One decimal per line; '#' starts a comment; blank lines are skipped.
inline std::vector<double> parse_samples(const std::string& text) {
    std::vector<double> values;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        const std::string_view tok(line.data() + b, e - b + 1);
        double x = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || !std::isfinite(x))
            throw ConfigError("line " + std::to_string(lineno) + ": '" + std::string(tok) +
                              "' is not a finite decimal");
        values.push_back(x);
    }
    return values;
}

inline std::vector<double> parse_rho_list(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find(',', pos), text.size());
        std::string tok = text.substr(pos, end - pos);
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        double x = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
        if (tok.empty() || res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
            throw ConfigError("confidence level '" + tok + "' is not a number");
        if (!(x > 0.0 && x < 1.0))
            throw ConfigError("confidence level " + tok + " must lie strictly between 0 and 1");
        out.push_back(x);
        pos = end + 1;
    }
    return out;
}

inline std::optional<std::chrono::year_month_day> date_flag(const std::string& text,
                                                            const char* flag) {
    if (text.empty()) return std::nullopt;
    const auto d = parse_iso_date(text);
    if (!d) throw ConfigError(std::string(flag) + " expects YYYY-MM-DD, got '" + text + "'");
    return d;
}

} // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Monte Carlo cyber-risk simulator for IoT device portfolios", "cyberrisk"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kEngineVersion) + " (" + kStreamFormatVersion + ")");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run the Monte Carlo experiment from a config file");
    std::string config_path;
    std::optional<std::uint64_t> seed_flag;
    std::optional<std::uint64_t> reps_flag;
    std::string format = "table";
    std::string out_path;
    unsigned workers = 0;
    sim->add_option("--config", config_path, "JSON config file")->required();
    sim->add_option("--seed", seed_flag, "Master seed (default: config seed, 42)");
    sim->add_option("--reps", reps_flag, "Repetitions, overrides the config");
    sim->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"table", "csv", "json"}))
        ->capture_default_str();
    sim->add_option("--out", out_path, "Output file (default stdout)");
    sim->add_option("--workers", workers, "Worker threads (0 = all cores)")
        ->envname("CYBERRISK_WORKERS");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Derive the baseline attack proportion and level table");
    ScenarioConfig cal_scenario;
    cal->add_option("--attack-window-min", cal_scenario.attack_window_minutes,
                    "Minutes from connection to attack")
        ->capture_default_str();
    cal->add_option("--unrecorded-frac", cal_scenario.unrecorded_fraction,
                    "Fraction of the year not recorded")
        ->capture_default_str();
    cal->add_option("--population", cal_scenario.population, "Device population")
        ->capture_default_str();
    cal->add_option("--minutes-per-year", cal_scenario.minutes_per_year, "Minutes per year")
        ->capture_default_str();

    // fit
    auto* fit = app.add_subcommand("fit", "Estimate intensity and severity from threat records");
    std::string input_path;
    std::string fit_format = "csv";
    std::string severity = "lognormal";
    std::optional<double> x_min;
    std::string from_text, to_text;
    fit->add_option("--input", input_path, "Threat record file")->required();
    fit->add_option("--format", fit_format, "Input format")
        ->check(CLI::IsMember({"csv", "jsonl"}))
        ->capture_default_str();
    fit->add_option("--severity", severity, "Severity family")
        ->check(CLI::IsMember({"lognormal", "pareto"}))
        ->capture_default_str();
    fit->add_option("--x-min", x_min, "Pareto tail threshold (required for pareto)");
    fit->add_option("--from", from_text, "Window start, YYYY-MM-DD");
    fit->add_option("--to", to_text, "Window end, YYYY-MM-DD");

    // report
    auto* rep = app.add_subcommand("report", "Risk metrics for an existing loss sample");
    std::string samples_path;
    double pool = 0.0;
    std::string levels_text = ".90,.95,.99";
    std::string rep_format = "table";
    rep->add_option("--samples", samples_path, "One loss per line, '#' comments")->required();
    rep->add_option("--premium-pool", pool, "Premium pool")->required();
    rep->add_option("--levels", levels_text, "Comma-separated confidence levels")
        ->capture_default_str();
    rep->add_option("--format", rep_format, "Output format")
        ->check(CLI::IsMember({"table", "csv", "json"}))
        ->capture_default_str();
    rep->add_option("--out", out_path, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*sim) {
            SimulationSpec spec = load_config(config_path);
            if (seed_flag) spec.seed = *seed_flag;
            if (reps_flag) spec.repetitions = *reps_flag;
            validate(spec);
            const RiskReport report = run_simulation(spec, RunOptions{workers});
            const std::string text = format == "json" ? report_json_text(report)
                                     : format == "csv" ? report_csv_text(report)
                                                       : report_table_text(report);
            detail::emit(text, out_path, out);
        } else if (*cal) {
            try {
                validate(cal_scenario);
            } catch (const DomainError& e) {
                throw ConfigError(e.what());
            }
            const ProportionChain chain =
                proportion_chain(cal_scenario.minutes_per_year, cal_scenario.unrecorded_fraction,
                                 cal_scenario.attack_window_minutes, cal_scenario.population);
            const double theta = base_attack_intensity(cal_scenario);
            nlohmann::ordered_json j;
            j["p"] = chain.proportion;
            j["theta"] = theta;
            nlohmann::ordered_json chain_json;
            chain_json["exposed_minutes"] = chain.exposed_minutes;
            chain_json["attacked_slots"] = chain.attacked_slots;
            chain_json["attacked_fraction"] = chain.attacked_fraction;
            j["chain"] = chain_json;
            nlohmann::ordered_json level_theta;
            for (RiskLevel l : kAllRiskLevels)
                level_theta[std::string(level_key(l))] =
                    theta * cal_scenario.intensity_multiplier[index_of(l)];
            j["level_theta"] = level_theta;
            j["scenario"] = scenario_to_json(cal_scenario);
            out << j.dump(2) << '\n';
        } else if (*fit) {
            if (severity == "pareto" && !x_min) {
                err << "error: --x-min is required with --severity pareto\n\n" << fit->help();
                return kUsageError;
            }
            if (severity != "pareto" && x_min) {
                err << "error: --x-min only applies to --severity pareto\n\n" << fit->help();
                return kUsageError;
            }
            const auto from = detail::date_flag(from_text, "--from");
            const auto to = detail::date_flag(to_text, "--to");
            const std::string text = detail::read_file(input_path);
            const ParseResult parsed = parse_records(
                std::string_view{text}, fit_format == "csv" ? RecordFormat::Csv : RecordFormat::JsonLines);
            if (!parsed.rejects.empty()) {
                err << parsed.rejects.size() << " of " << parsed.rows() << " rows rejected\n";
                for (const RecordReject& r : parsed.rejects)
                    err << "  line " << r.line << " (" << r.field << "): " << r.message << '\n';
            }
            if (parsed.records.empty()) throw InsufficientDataError("no usable records in input");
            std::optional<DateRange> window;
            if (from || to) {
                const DateRange all = span_of(parsed.records);
                window = DateRange{from ? *from : all.from, to ? *to : all.to};
                if (window->days() < 1) throw ConfigError("--from must not be after --to");
            }
            const FittedParameters p =
                fit_parameters(parsed.records, window,
                               severity == "pareto" ? SeverityFamily::Pareto : SeverityFamily::Lognormal,
                               x_min);
            for (const std::string& w : p.warnings) err << "warning: " << w << '\n';
            nlohmann::ordered_json j;
            nlohmann::ordered_json agg;
            agg["event_rate"] = p.intensity_per_day * 365.0;
            agg["severity"] =
                nlohmann::ordered_json::parse(cyberrisk::detail::severity_to_json(p.severity).dump());
            j["aggregate_channel"] = agg;
            nlohmann::ordered_json info;
            info["intensity_per_day"] = p.intensity_per_day;
            info["from"] = format_iso_date(p.window.from);
            info["to"] = format_iso_date(p.window.to);
            info["days"] = p.window.days();
            info["records_used"] = p.records_used;
            info["events"] = p.events;
            info["losses_used"] = p.losses_used;
            info["rows_rejected"] = parsed.rejects.size();
            j["fit"] = info;
            out << j.dump(2) << '\n';
        } else if (*rep) {
            const std::vector<double> rhos = detail::parse_rho_list(levels_text);
            if (!(pool >= 0.0) || !std::isfinite(pool))
                throw ConfigError("--premium-pool must be a nonnegative number");
            std::vector<double> values = detail::parse_samples(detail::read_file(samples_path));
            if (values.empty()) throw InsufficientDataError("sample file holds no values");
            const EmpiricalDistribution dist(std::move(values));
            const RiskMetrics m = summarize_level(dist, pool, rhos);
            const std::string text = rep_format == "json" ? metrics_json_text(m)
                                     : rep_format == "csv" ? metrics_csv_text(m)
                                                           : metrics_table_text(m);
            detail::emit(text, out_path, out);
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const NumericFault& e) {
        err << "error: " << e.what() << '\n';
        return kNumericFault;
    } catch (const InsufficientDataError& e) {
        err << "error: " << e.what() << '\n';
        return kInsufficientData;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    return kOk;
}

} // namespace cyberrisk::cli
