#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "distributions.hpp"
#include "errors.hpp"

namespace cyberrisk {

// One row of a threat or breach feed: `date,category,event_count,loss_amount`.
struct ThreatRecord {
    std::chrono::year_month_day date{};
    std::string category;
    std::uint64_t event_count = 0;
    std::optional<double> loss_amount;
};

struct RecordReject {
    std::size_t line = 0;  // 1-based line where the row starts
    std::string field;     // offending column, or "row"
    std::string message;
};

struct ParseResult {
    std::vector<ThreatRecord> records;
    std::vector<RecordReject> rejects;
    std::size_t rows() const noexcept { return records.size() + rejects.size(); }
};

enum class RecordFormat { Csv, JsonLines };

inline constexpr std::string_view kCsvHeader = "date,category,event_count,loss_amount";

// Strict ISO-8601 calendar date, YYYY-MM-DD.
inline std::optional<std::chrono::year_month_day> parse_iso_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    auto number = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int value = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (text[i] < '0' || text[i] > '9') return std::nullopt;
            value = value * 10 + (text[i] - '0');
        }
        return value;
    };
    const auto y = number(0, 4);
    const auto m = number(5, 2);
    const auto d = number(8, 2);
    if (!y || !m || !d) return std::nullopt;
    const std::chrono::year_month_day date{std::chrono::year{*y},
                                           std::chrono::month{static_cast<unsigned>(*m)},
                                           std::chrono::day{static_cast<unsigned>(*d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

inline std::string format_iso_date(std::chrono::year_month_day date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

namespace detail {

inline bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            extra = 1;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            extra = 2;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size()) return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
            (extra == 3 && (cp < 0x10000 || cp > 0x10FFFF)) || (cp >= 0xD800 && cp <= 0xDFFF))
            return false;
        i += extra + 1;
    }
    return true;
}

struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

// RFC 4180 tokenizer: quoted fields may contain commas, doubled quotes and
// line breaks; CRLF and LF both end a row. Blank lines are skipped.
inline std::vector<CsvRow> split_csv(std::string_view text, std::vector<RecordReject>& rejects) {
    std::vector<CsvRow> rows;
    std::size_t line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
        CsvRow row;
        row.line = line;
        std::string field;
        bool quoted_error = false;
        bool row_done = false;
        bool any_content = false;
        while (!row_done) {
            field.clear();
            if (i < text.size() && text[i] == '"') {
                any_content = true;
                ++i;
                for (;;) {
                    if (i >= text.size()) {
                        quoted_error = true;
                        break;
                    }
                    const char c = text[i++];
                    if (c == '"') {
                        if (i < text.size() && text[i] == '"') {
                            field.push_back('"');
                            ++i;
                        } else {
                            break;
                        }
                    } else {
                        if (c == '\n') ++line;
                        field.push_back(c);
                    }
                }
                if (!quoted_error && i < text.size() && text[i] != ',' && text[i] != '\n' &&
                    text[i] != '\r')
                    quoted_error = true;
            }
            while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
                field.push_back(text[i++]);
                any_content = true;
            }
            row.fields.push_back(field);
            if (i < text.size() && text[i] == ',') {
                any_content = true;
                ++i;
                continue;
            }
            if (i < text.size() && text[i] == '\r') ++i;
            if (i < text.size() && text[i] == '\n') ++i;
            ++line;
            row_done = true;
        }
        if (quoted_error) {
            rejects.push_back({row.line, "row", "unterminated or malformed quoted field"});
            continue;
        }
        if (!any_content) continue;
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::optional<std::uint64_t> parse_count(std::string_view s) {
    std::uint64_t v = 0;
    if (s.empty()) return std::nullopt;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<double> parse_amount(std::string_view s) {
    double v = 0.0;
    if (s.empty()) return std::nullopt;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v) || v < 0.0)
        return std::nullopt;
    return v;
}

inline std::optional<ThreatRecord> record_from_fields(std::size_t line,
                                                      std::span<const std::string> f,
                                                      std::vector<RecordReject>& rejects) {
    if (f.size() != 4) {
        rejects.push_back({line, "row", "expected 4 fields, found " + std::to_string(f.size())});
        return std::nullopt;
    }
    ThreatRecord r;
    const auto date = parse_iso_date(f[0]);
    if (!date) {
        rejects.push_back({line, "date", "not an ISO-8601 date (YYYY-MM-DD): '" + f[0] + "'"});
        return std::nullopt;
    }
    r.date = *date;
    if (f[1].empty()) {
        rejects.push_back({line, "category", "empty category"});
        return std::nullopt;
    }
    r.category = f[1];
    const auto count = parse_count(f[2]);
    if (!count) {
        rejects.push_back({line, "event_count", "not a nonnegative integer: '" + f[2] + "'"});
        return std::nullopt;
    }
    r.event_count = *count;
    if (!f[3].empty()) {
        const auto amount = parse_amount(f[3]);
        if (!amount) {
            rejects.push_back({line, "loss_amount", "not a nonnegative number: '" + f[3] + "'"});
            return std::nullopt;
        }
        r.loss_amount = *amount;
    }
    return r;
}

inline void parse_csv(std::string_view text, ParseResult& out) {
    auto rows = split_csv(text, out.rejects);
    // An empty feed is not malformed, just empty; callers report it as
    // insufficient data.
    if (rows.empty()) return;
    const CsvRow& header = rows.front();
    std::string joined;
    for (std::size_t k = 0; k < header.fields.size(); ++k)
        joined += (k ? "," : "") + header.fields[k];
    if (!joined.empty() && joined.compare(0, 3, "\xEF\xBB\xBF") == 0) joined.erase(0, 3);
    if (joined != kCsvHeader)
        throw FormatError("CSV header must be '" + std::string(kCsvHeader) + "', found '" +
                          joined + "'");
    for (std::size_t k = 1; k < rows.size(); ++k)
        if (auto r = record_from_fields(rows[k].line, rows[k].fields, out.rejects))
            out.records.push_back(std::move(*r));
}

inline void parse_json_lines(std::string_view text, ParseResult& out) {
    std::size_t line = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view raw = text.substr(pos, end - pos);
        ++line;
        pos = end + 1;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        if (raw.find_first_not_of(" \t") == std::string_view::npos) {
            if (end == text.size()) break;
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::parse_error&) {
            out.rejects.push_back({line, "row", "not a JSON object"});
            continue;
        }
        if (!obj.is_object()) {
            out.rejects.push_back({line, "row", "not a JSON object"});
            continue;
        }
        std::vector<std::string> fields(4);
        bool bad = false;
        auto take = [&](const char* key, std::size_t idx, bool optional) {
            if (bad) return;
            const auto it = obj.find(key);
            if (it == obj.end() || it->is_null()) {
                if (!optional) {
                    out.rejects.push_back({line, key, "missing field"});
                    bad = true;
                }
                return;
            }
            if (it->is_string()) {
                fields[idx] = it->get<std::string>();
            } else if (it->is_number_unsigned() || it->is_number_integer()) {
                fields[idx] = it->dump();
            } else if (it->is_number_float()) {
                const double v = it->get<double>();
                char buf[64];
                const auto res = std::to_chars(buf, buf + sizeof buf, v);
                fields[idx].assign(buf, res.ptr);
            } else {
                out.rejects.push_back({line, key, "unsupported JSON type"});
                bad = true;
            }
        };
        take("date", 0, false);
        take("category", 1, false);
        take("event_count", 2, false);
        take("loss_amount", 3, true);
        if (bad) continue;
        if (auto r = record_from_fields(line, fields, out.rejects)) out.records.push_back(std::move(*r));
        if (end == text.size()) break;
    }
}

} // namespace detail

// Parses a whole feed. Malformed rows are collected with their line numbers;
// every data row ends up either in `records` or in `rejects`. More than half
// of the rows rejected is treated as the wrong schema altogether.
inline ParseResult parse_records(std::string_view input, RecordFormat format) {
    if (!detail::valid_utf8(input)) throw InputError("input is not valid UTF-8");
    ParseResult out;
    if (format == RecordFormat::Csv)
        detail::parse_csv(input, out);
    else
        detail::parse_json_lines(input, out);
    if (out.rows() > 0 && out.rejects.size() * 2 > out.rows())
        throw FormatError(std::to_string(out.rejects.size()) + " of " +
                          std::to_string(out.rows()) + " rows rejected; first: line " +
                          std::to_string(out.rejects.front().line) + " (" +
                          out.rejects.front().field + "): " + out.rejects.front().message);
    return out;
}

inline ParseResult parse_records(std::istream& input, RecordFormat format) {
    if (!input) throw InputError("input stream is not readable");
    std::string text{std::istreambuf_iterator<char>(input), std::istreambuf_iterator<char>()};
    if (input.bad()) throw InputError("failed while reading input");
    return parse_records(std::string_view{text}, format);
}

// Inclusive calendar window.
struct DateRange {
    std::chrono::year_month_day from{};
    std::chrono::year_month_day to{};

    std::int64_t days() const {
        return (std::chrono::sys_days{to} - std::chrono::sys_days{from}).count() + 1;
    }
    bool contains(std::chrono::year_month_day d) const {
        return std::chrono::sys_days{d} >= std::chrono::sys_days{from} &&
               std::chrono::sys_days{d} <= std::chrono::sys_days{to};
    }
};

// Smallest window covering every record.
inline DateRange span_of(std::span<const ThreatRecord> records) {
    if (records.empty()) throw InsufficientDataError("no records to span");
    DateRange w{records.front().date, records.front().date};
    for (const auto& r : records) {
        if (std::chrono::sys_days{r.date} < std::chrono::sys_days{w.from}) w.from = r.date;
        if (std::chrono::sys_days{r.date} > std::chrono::sys_days{w.to}) w.to = r.date;
    }
    return w;
}

struct IntensityEstimate {
    double per_day = 0.0;
    std::uint64_t events = 0;
    std::int64_t days = 0;
    std::size_t records_used = 0;
    bool low_data = false;  // fewer than kLowDataEvents events inside the window
};

inline constexpr std::uint64_t kLowDataEvents = 10;

// Homogeneous Poisson MLE: events inside the window divided by its length in
// days. Records outside the window are ignored.
inline IntensityEstimate estimate_intensity(std::span<const ThreatRecord> records,
                                            const DateRange& window) {
    if (!window.from.ok() || !window.to.ok() || window.days() < 1)
        throw DomainError("intensity window must span at least one day");
    IntensityEstimate e;
    e.days = window.days();
    for (const auto& r : records) {
        if (!window.contains(r.date)) continue;
        e.events += r.event_count;
        ++e.records_used;
    }
    e.per_day = static_cast<double>(e.events) / static_cast<double>(e.days);
    e.low_data = e.events < kLowDataEvents;
    return e;
}

struct LognormalFit {
    double mu = 0.0;
    double sigma = 0.0;
    std::size_t n = 0;
};

// Moments of log-losses: mu = mean, sigma = population standard deviation.
inline LognormalFit fit_lognormal(std::span<const double> losses) {
    if (losses.size() < 2) throw InsufficientDataError("lognormal fit needs at least 2 losses");
    for (double x : losses)
        if (!(x > 0.0) || !std::isfinite(x))
            throw DomainError("lognormal fit needs strictly positive, finite losses");
    // Centered on the first log so equal inputs give exactly (ln c, 0).
    const double pivot = std::log(losses.front());
    const auto n = static_cast<double>(losses.size());
    double sum = 0.0;
    for (double x : losses) sum += std::log(x) - pivot;
    const double shift = sum / n;
    double ss = 0.0;
    for (double x : losses) {
        const double d = std::log(x) - pivot - shift;
        ss += d * d;
    }
    return {pivot + shift, std::sqrt(ss / n), losses.size()};
}

struct ParetoFit {
    double alpha = 0.0;
    double x_min = 0.0;
    std::size_t n_tail = 0;
    bool outside_typical_range = false;  // alpha outside (1, 3)
};

inline constexpr std::size_t kMinParetoTail = 10;

// Hill / maximum-likelihood tail index over the values at or above x_min:
//   alpha = n / sum ln(x_i / x_min)
inline ParetoFit fit_pareto_tail(std::span<const double> losses, double x_min) {
    if (!(x_min > 0.0) || !std::isfinite(x_min)) throw DomainError("x_min must be positive");
    double log_sum = 0.0;
    std::size_t n = 0;
    for (double x : losses) {
        if (!(x > 0.0) || !std::isfinite(x))
            throw DomainError("pareto fit needs strictly positive, finite losses");
        if (x < x_min) continue;
        log_sum += std::log(x / x_min);
        ++n;
    }
    if (n < kMinParetoTail)
        throw InsufficientDataError("pareto fit needs at least " +
                                    std::to_string(kMinParetoTail) + " values >= x_min, found " +
                                    std::to_string(n));
    if (!(log_sum > 0.0))
        throw DomainError("every tail value equals x_min; the tail index diverges");
    ParetoFit fit;
    fit.alpha = static_cast<double>(n) / log_sum;
    fit.x_min = x_min;
    fit.n_tail = n;
    fit.outside_typical_range = !(fit.alpha > 1.0 && fit.alpha < 3.0);
    return fit;
}

enum class SeverityFamily { Lognormal, Pareto };

struct FittedParameters {
    double intensity_per_day = 0.0;
    SeverityDistribution severity = Fixed{0.0};
    DateRange window{};
    std::size_t records_used = 0;
    std::uint64_t events = 0;
    std::size_t losses_used = 0;
    std::vector<std::string> warnings;
};

// Intensity from the event counts and a severity law from the loss amounts of
// the records inside `window` (or inside the span of all records).
inline FittedParameters fit_parameters(std::span<const ThreatRecord> records,
                                       std::optional<DateRange> window, SeverityFamily family,
                                       std::optional<double> x_min = std::nullopt) {
    if (records.empty()) throw InsufficientDataError("no records to fit");
    FittedParameters out;
    out.window = window ? *window : span_of(records);
    const IntensityEstimate rate = estimate_intensity(records, out.window);
    out.intensity_per_day = rate.per_day;
    out.events = rate.events;
    out.records_used = rate.records_used;
    if (rate.low_data)
        out.warnings.push_back("low data: only " + std::to_string(rate.events) +
                               " events in the window");
    std::vector<double> losses;
    for (const auto& r : records)
        if (out.window.contains(r.date) && r.loss_amount && *r.loss_amount > 0.0)
            losses.push_back(*r.loss_amount);
    out.losses_used = losses.size();
    if (family == SeverityFamily::Lognormal) {
        const LognormalFit fit = fit_lognormal(losses);
        if (!(fit.sigma > 0.0))
            throw InsufficientDataError("all losses are equal; lognormal sigma is zero");
        out.severity = Lognormal{fit.mu, fit.sigma};
    } else {
        if (!x_min) throw DomainError("pareto fit requires x_min");
        const ParetoFit fit = fit_pareto_tail(losses, *x_min);
        if (fit.outside_typical_range)
            out.warnings.push_back("tail index outside (1, 3)");
        if (!(fit.alpha > 1.0))
            throw InsufficientDataError("tail index <= 1 has no finite mean; cannot use as "
                                        "severity");
        out.severity = Pareto{fit.x_min, fit.alpha};
        out.losses_used = fit.n_tail;
    }
    return out;
}

} // namespace cyberrisk
