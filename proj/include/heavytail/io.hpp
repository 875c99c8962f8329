#pragma once

// File-facing plumbing for the CLI: CSV ingestion with filter provenance,
// ISO-8601 dates and calendar binning, a key=value config reader, and a
// content digest for self-describing run artifacts.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "heavytail/numerics.hpp"

namespace heavytail {

// ---------------------------------------------------------------------------
// dates

struct Date {
    int year = 0;
    int month = 0;  // 1..12
    int day = 0;    // 1..31
};

/// Strict ISO-8601 calendar date (YYYY-MM-DD).
inline std::optional<Date> parse_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    Date d;
    d.year = std::stoi(s.substr(0, 4));
    d.month = std::stoi(s.substr(5, 2));
    d.day = std::stoi(s.substr(8, 2));
    static constexpr int days_in[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in[d.month - 1])
        return std::nullopt;
    return d;
}

inline int month_index(const Date& d) { return d.year * 12 + (d.month - 1); }
inline int quarter_index(const Date& d) { return d.year * 4 + (d.month - 1) / 3; }

// ---------------------------------------------------------------------------
// CSV

/// Minimal RFC-4180-ish row splitter (quoted fields, escaped quotes).
inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

// ---------------------------------------------------------------------------
// loss-table ingestion

struct IngestOptions {
    std::string amount_column = "damages";
    std::string date_column = "report_date";  ///< optional; used when present
    std::optional<double> min_amount;         ///< drop rows below this amount
    bool drop_nonpositive = false;
    double max_error_rate = 0.10;  ///< unparseable-row budget before aborting
};

struct LossTable {
    std::vector<double> amounts;
    std::vector<std::optional<Date>> dates;  ///< parallel to amounts; empty if no date column
    std::string source;
    bool has_dates = false;
    std::size_t rows_input = 0;
    std::size_t rows_kept = 0;
    std::map<std::string, std::size_t> dropped;  ///< reason -> count
    std::vector<std::string> error_rows;         ///< sidecar: raw unparseable lines

    std::size_t rows_dropped() const {
        std::size_t n = 0;
        for (const auto& [_, c] : dropped) n += c;
        return n + error_rows.size();
    }
};

namespace detail {

inline bool parse_amount(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (...) {
        return false;
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos == s.size() && std::isfinite(out);
}

}  // namespace detail

/// Read a loss ledger from a headered CSV file. Unparseable rows go to the
/// error sidecar and the run continues unless they exceed max_error_rate;
/// filter drops are tallied by reason so kept + dropped = input.
inline LossTable ingest(const std::string& path, const IngestOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw input_error("ingest: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw input_error("ingest: empty file " + path);
    const auto header = split_csv_row(line);
    std::ptrdiff_t amount_col = -1, date_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == opt.amount_column) amount_col = static_cast<std::ptrdiff_t>(i);
        if (!opt.date_column.empty() && header[i] == opt.date_column)
            date_col = static_cast<std::ptrdiff_t>(i);
    }
    if (amount_col < 0)
        throw input_error("ingest: column '" + opt.amount_column + "' not found in " + path);

    LossTable t;
    t.source = path;
    t.has_dates = date_col >= 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++t.rows_input;
        const auto fields = split_csv_row(line);
        if (fields.size() <= static_cast<std::size_t>(amount_col)) {
            t.error_rows.push_back(line);
            continue;
        }
        double amount;
        if (!detail::parse_amount(fields[static_cast<std::size_t>(amount_col)], amount)) {
            t.error_rows.push_back(line);
            continue;
        }
        std::optional<Date> date;
        if (date_col >= 0 && fields.size() > static_cast<std::size_t>(date_col)) {
            const auto& ds = fields[static_cast<std::size_t>(date_col)];
            if (!ds.empty()) {
                date = parse_date(ds);
                if (!date) {
                    t.error_rows.push_back(line);
                    continue;
                }
            }
        }
        if (opt.drop_nonpositive && amount <= 0.0) {
            ++t.dropped["nonpositive"];
            continue;
        }
        if (opt.min_amount && amount < *opt.min_amount) {
            ++t.dropped["below_min_amount"];
            continue;
        }
        t.amounts.push_back(amount);
        if (t.has_dates) t.dates.push_back(date);
        ++t.rows_kept;
    }
    if (t.rows_input > 0 &&
        static_cast<double>(t.error_rows.size()) >
            opt.max_error_rate * static_cast<double>(t.rows_input))
        throw input_error("ingest: unparseable-row rate exceeds " +
                          std::to_string(opt.max_error_rate) + " in " + path);
    return t;
}

// ---------------------------------------------------------------------------
// key=value config files ('#' comments, TOML-like scalars)

inline std::map<std::string, std::string> read_kv_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string s = trim(line);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw input_error("config: missing '=' at " + path + ":" + std::to_string(lineno));
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
            val = val.substr(1, val.size() - 2);
        if (key.empty())
            throw input_error("config: empty key at " + path + ":" + std::to_string(lineno));
        kv[key] = val;
    }
    return kv;
}

// ---------------------------------------------------------------------------
// content digest (FNV-1a 64); identifies inputs in run artifacts

inline std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("digest: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a64_hex(ss.str());
}

}  // namespace heavytail
