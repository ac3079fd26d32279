#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "engine.hpp"
#include "errors.hpp"

// Report serializers. JSON and CSV are locale independent and carry enough
// provenance to rerun the experiment; wall time is never written so equal specs
// give equal bytes.
//
// Monetary amounts are written as fixed-notation decimal strings holding the
// shortest digits that parse back to the same double, so the JSON round-trips
// exactly and never switches to exponent form.
namespace cyberrisk {

inline constexpr int kReportSchemaVersion = 1;

inline std::string format_money(double x) {
    char buf[512];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed);
    if (res.ec != std::errc{}) throw DomainError("cannot format monetary value");
    return std::string(buf, res.ptr);
}

inline double parse_money(std::string_view text) {
    double x = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw FormatError("bad monetary value '" + std::string(text) + "'");
    return x;
}

// Shortest round-trip text in general notation, for CSV cells.
inline std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson optional_number(const std::optional<double>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

inline std::optional<double> read_optional(const nlohmann::json& v) {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

} // namespace detail

inline nlohmann::ordered_json metrics_to_json(const RiskMetrics& m) {
    using detail::ojson;
    ojson j;
    j["expected_loss"] = format_money(m.expected_loss);
    j["premium_pool"] = format_money(m.premium_pool);
    j["shortfall_probability"] = m.shortfall_probability;
    j["expected_shortfall"] = format_money(m.expected_shortfall);
    ojson tail = ojson::array();
    for (const TailMetric& t : m.tail) {
        ojson e;
        e["confidence"] = t.confidence;
        e["var"] = format_money(t.var);
        e["cte"] = format_money(t.cte);
        e["var_margin"] = detail::optional_number(t.var_margin);
        e["cte_margin"] = detail::optional_number(t.cte_margin);
        tail.push_back(e);
    }
    j["tail"] = tail;
    return j;
}

inline RiskMetrics metrics_from_json(const nlohmann::json& j) {
    RiskMetrics m;
    m.expected_loss = parse_money(j.at("expected_loss").get<std::string>());
    m.premium_pool = parse_money(j.at("premium_pool").get<std::string>());
    m.shortfall_probability = j.at("shortfall_probability").get<double>();
    m.expected_shortfall = parse_money(j.at("expected_shortfall").get<std::string>());
    for (const auto& e : j.at("tail")) {
        TailMetric t;
        t.confidence = e.at("confidence").get<double>();
        t.var = parse_money(e.at("var").get<std::string>());
        t.cte = parse_money(e.at("cte").get<std::string>());
        t.var_margin = detail::read_optional(e.at("var_margin"));
        t.cte_margin = detail::read_optional(e.at("cte_margin"));
        m.tail.push_back(t);
    }
    return m;
}

inline nlohmann::ordered_json report_to_json(const RiskReport& r) {
    using detail::ojson;
    ojson j;
    j["schema_version"] = kReportSchemaVersion;
    ojson prov;
    prov["engine_version"] = r.engine_version;
    prov["stream_format"] = r.stream_format;
    prov["seed"] = r.spec.seed;
    prov["config"] = config_to_json(r.spec);
    j["provenance"] = prov;
    j["baseline_expected_loss"] = format_money(r.baseline_expected_loss);
    ojson levels = ojson::array();
    for (const LevelReport& lr : r.levels) {
        ojson e;
        e["level"] = std::string(level_key(lr.level));
        e["label"] = std::string(level_label(lr.level));
        e["intensity_multiplier"] = lr.intensity_multiplier;
        e["mitigation_alpha"] = lr.mitigation_alpha;
        e["theta"] = lr.theta;
        e["mean_device_loss"] = format_money(lr.mean_device_loss);
        e["expected_present_loss"] = format_money(lr.expected_present_loss);
        e["metrics"] = metrics_to_json(lr.metrics);
        e["capped_devices"] = lr.capped_devices;
        e["killed_devices"] = lr.killed_devices;
        levels.push_back(e);
    }
    j["levels"] = levels;
    return j;
}

inline std::string report_json_text(const RiskReport& r) { return report_to_json(r).dump(2) + "\n"; }

// Inverse of report_to_json; wall_seconds comes back as zero.
inline RiskReport report_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kReportSchemaVersion)
            throw FormatError("unsupported report schema version");
        RiskReport r;
        const auto& prov = j.at("provenance");
        r.engine_version = prov.at("engine_version").get<std::string>();
        r.stream_format = prov.at("stream_format").get<std::string>();
        r.spec = parse_config(prov.at("config"));
        r.baseline_expected_loss = parse_money(j.at("baseline_expected_loss").get<std::string>());
        for (const auto& e : j.at("levels")) {
            LevelReport lr;
            const auto level = parse_level(e.at("level").get<std::string>());
            if (!level) throw FormatError("unknown level in report");
            lr.level = *level;
            lr.intensity_multiplier = e.at("intensity_multiplier").get<double>();
            lr.mitigation_alpha = e.at("mitigation_alpha").get<double>();
            lr.theta = e.at("theta").get<double>();
            lr.mean_device_loss = parse_money(e.at("mean_device_loss").get<std::string>());
            lr.expected_present_loss = parse_money(e.at("expected_present_loss").get<std::string>());
            lr.metrics = metrics_from_json(e.at("metrics"));
            lr.capped_devices = e.at("capped_devices").get<std::uint64_t>();
            lr.killed_devices = e.at("killed_devices").get<std::uint64_t>();
            r.levels.push_back(std::move(lr));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed report: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("malformed report config: ") + e.what());
    }
}

// Long-format CSV: one row per (level, metric, confidence). Provenance goes in
// leading '#' comment lines.
inline void write_metrics_csv_rows(std::ostream& out, std::string_view level, const RiskMetrics& m) {
    auto row = [&](std::string_view metric, const std::string& rho, const std::string& value) {
        out << level << ',' << metric << ',' << rho << ',' << value << '\n';
    };
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    row("expected_loss", "", format_money(m.expected_loss));
    row("premium_pool", "", format_money(m.premium_pool));
    row("shortfall_probability", "", format_number(m.shortfall_probability));
    row("expected_shortfall", "", format_money(m.expected_shortfall));
    for (const TailMetric& t : m.tail) row("var", format_number(t.confidence), format_money(t.var));
    for (const TailMetric& t : m.tail) row("cte", format_number(t.confidence), format_money(t.cte));
    for (const TailMetric& t : m.tail) row("var_margin", format_number(t.confidence), opt(t.var_margin));
    for (const TailMetric& t : m.tail) row("cte_margin", format_number(t.confidence), opt(t.cte_margin));
}

inline std::string report_csv_text(const RiskReport& r) {
    std::ostringstream out;
    out << "# schema_version: " << kReportSchemaVersion << '\n';
    out << "# engine_version: " << r.engine_version << '\n';
    out << "# stream_format: " << r.stream_format << '\n';
    out << "# config: " << config_to_json(r.spec).dump() << '\n';
    out << "# baseline_expected_loss: " << format_money(r.baseline_expected_loss) << '\n';
    out << "level,metric,confidence,value\n";
    for (const LevelReport& lr : r.levels) {
        const std::string key(level_key(lr.level));
        out << key << ",expected_present_loss,," << format_money(lr.expected_present_loss) << '\n';
        write_metrics_csv_rows(out, key, lr.metrics);
    }
    return out.str();
}

namespace detail {

// Human-facing number: thousands grouping, fixed decimals.
inline std::string group_thousands(double x, int decimals) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s << std::fixed << std::setprecision(decimals) << std::fabs(x);
    std::string digits = s.str();
    const auto dot = digits.find('.');
    std::string int_part = digits.substr(0, dot);
    const std::string frac = dot == std::string::npos ? "" : digits.substr(dot);
    std::string grouped;
    for (std::size_t i = 0; i < int_part.size(); ++i) {
        if (i > 0 && (int_part.size() - i) % 3 == 0) grouped += ',';
        grouped += int_part[i];
    }
    return (x < 0 ? "-" : "") + grouped + frac;
}

inline std::string percent(double p) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s << std::fixed << std::setprecision(3) << p * 100.0 << '%';
    return s.str();
}

inline std::string ratio(const std::optional<double>& v) {
    if (!v) return "n/a";
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s << std::fixed << std::setprecision(4) << *v;
    return s.str();
}

inline std::string rho_label(double rho) {
    std::string s = format_number(rho);
    if (s.rfind("0.", 0) == 0) s.erase(0, 1);
    if (s.size() == 2 && s[0] == '.') s += '0';  // .9 -> .90
    return s;
}

struct TableColumn {
    std::string header;
    std::string expected_present_loss;  // empty for the report command
    const RiskMetrics* metrics;
};

inline std::string render_table(const std::vector<TableColumn>& cols) {
    std::vector<std::pair<std::string, std::vector<std::string>>> rows;
    auto add = [&](std::string name, auto cell) {
        std::vector<std::string> cells;
        for (const TableColumn& c : cols) cells.push_back(cell(c));
        rows.emplace_back(std::move(name), std::move(cells));
    };
    const bool have_epl = !cols.empty() && !cols.front().expected_present_loss.empty();
    if (have_epl)
        add("E(P1)", [](const TableColumn& c) { return c.expected_present_loss; });
    add("Prob(Shortfall)", [](const TableColumn& c) { return percent(c.metrics->shortfall_probability); });
    add("E(Shortfall)",
        [](const TableColumn& c) { return group_thousands(c.metrics->expected_shortfall, 2); });
    const std::size_t ntail = cols.empty() ? 0 : cols.front().metrics->tail.size();
    for (std::size_t i = 0; i < ntail; ++i)
        add("VAR(" + rho_label(cols.front().metrics->tail[i].confidence) + ")",
            [i](const TableColumn& c) { return group_thousands(c.metrics->tail[i].var, 2); });
    for (std::size_t i = 0; i < ntail; ++i)
        add("CTE(" + rho_label(cols.front().metrics->tail[i].confidence) + ")",
            [i](const TableColumn& c) { return group_thousands(c.metrics->tail[i].cte, 2); });
    for (std::size_t i = 0; i < ntail; ++i)
        add("Margin VAR(" + rho_label(cols.front().metrics->tail[i].confidence) + ")",
            [i](const TableColumn& c) { return ratio(c.metrics->tail[i].var_margin); });
    for (std::size_t i = 0; i < ntail; ++i)
        add("Margin CTE(" + rho_label(cols.front().metrics->tail[i].confidence) + ")",
            [i](const TableColumn& c) { return ratio(c.metrics->tail[i].cte_margin); });
    add("Premium pool", [](const TableColumn& c) { return group_thousands(c.metrics->premium_pool, 2); });
    add("E(L)", [](const TableColumn& c) { return group_thousands(c.metrics->expected_loss, 2); });

    std::size_t name_w = 0;
    for (const auto& r : rows) name_w = std::max(name_w, r.first.size());
    std::vector<std::size_t> col_w;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        std::size_t w = cols[c].header.size();
        for (const auto& r : rows) w = std::max(w, r.second[c].size());
        col_w.push_back(w);
    }
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_w)) << "Metric";
    for (std::size_t c = 0; c < cols.size(); ++c)
        out << "  " << std::right << std::setw(static_cast<int>(col_w[c])) << cols[c].header;
    out << '\n';
    for (const auto& r : rows) {
        out << std::left << std::setw(static_cast<int>(name_w)) << r.first;
        for (std::size_t c = 0; c < cols.size(); ++c)
            out << "  " << std::right << std::setw(static_cast<int>(col_w[c])) << r.second[c];
        out << '\n';
    }
    return out.str();
}

} // namespace detail

// Metrics as rows, levels as columns.
inline std::string report_table_text(const RiskReport& r) {
    std::vector<detail::TableColumn> cols;
    for (const LevelReport& lr : r.levels)
        cols.push_back({std::string(level_label(lr.level)),
                        detail::group_thousands(lr.expected_present_loss, 2), &lr.metrics});
    std::ostringstream out;
    out << detail::render_table(cols);
    out << "\nseed " << r.spec.seed << ", R = " << r.spec.repetitions
        << ", portfolio size " << r.spec.portfolio_size << ", baseline E(L) "
        << detail::group_thousands(r.baseline_expected_loss, 2) << '\n';
    return out.str();
}

inline std::string metrics_table_text(const RiskMetrics& m) {
    return detail::render_table({{"Sample", "", &m}});
}

inline std::string metrics_csv_text(const RiskMetrics& m) {
    std::ostringstream out;
    out << "level,metric,confidence,value\n";
    write_metrics_csv_rows(out, "sample", m);
    return out.str();
}

inline std::string metrics_json_text(const RiskMetrics& m) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["metrics"] = metrics_to_json(m);
    return j.dump(2) + "\n";
}

} // namespace cyberrisk
