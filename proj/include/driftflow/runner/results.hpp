#pragma once

// Flat result table: one row per evaluated step of one grid cell.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "driftflow/error.hpp"
#include "driftflow/strategy.hpp"

namespace driftflow {

enum class RowStatus { ok, skipped, error };

inline std::string_view to_string(RowStatus s) {
    switch (s) {
        case RowStatus::ok: return "ok";
        case RowStatus::skipped: return "skipped";
        case RowStatus::error: return "error";
    }
    return "?";
}

inline RowStatus parse_row_status(std::string_view s) {
    if (s == "ok") return RowStatus::ok;
    if (s == "skipped") return RowStatus::skipped;
    if (s == "error") return RowStatus::error;
    throw FormatError("unknown row status '" + std::string(s) + "'");
}

/// Detector column value for baseline and passive cells.
inline constexpr std::string_view kNotApplicable = "na";

struct ResultRow {
    std::string scale;
    std::string classifier;
    int bss = 1;
    std::string detector{kNotApplicable};
    std::string strategy;
    int replicate = 0;
    int t = 0;
    int test_year = 0;
    RowStatus status = RowStatus::ok;
    bool trained = false;
    std::optional<bool> drift;
    std::string mean_test;
    std::optional<double> mean_p;
    std::string variance_test;
    std::optional<double> variance_p;
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::string error;

    /// Grid coordinates without t; identifies the cell the row belongs to.
    std::string cell_key() const {
        return scale + "|" + classifier + "|" + std::to_string(bss) + "|" + detector + "|" + strategy + "|" +
               std::to_string(replicate);
    }

    /// Unique per table.
    std::string key() const { return cell_key() + "|" + std::to_string(t); }

    ConfusionCounts confusion() const { return {tp, fp, fn, tn}; }

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline const std::vector<std::string>& result_columns() {
    static const std::vector<std::string> cols{
        "scale", "classifier", "bss", "detector", "strategy", "replicate", "t", "test_year", "status",
        "trained", "drift", "mean_test", "mean_p", "variance_test", "variance_p", "tp", "fp", "fn", "tn",
        "accuracy", "precision", "recall", "f1", "error"};
    return cols;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline std::string sanitize_field(std::string s, char delim) {
    for (auto& c : s)
        if (c == delim || c == '\n' || c == '\r') c = c == delim ? ';' : ' ';
    return s;
}

inline std::vector<std::string> split_fields(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(delim, start);
        out.emplace_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(const std::string& s, const char* column) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw FormatError(std::string("bad number in column ") + column + ": '" + s + "'");
    return v;
}

inline std::optional<double> parse_optional(const std::string& s, const char* column) {
    if (s.empty()) return std::nullopt;
    return parse_double(s, column);
}

inline long long parse_integer(const std::string& s, const char* column) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size()) throw FormatError(std::string("bad integer in column ") + column + ": '" + s + "'");
    return v;
}

inline bool parse_flag(const std::string& s, const char* column) {
    if (s == "1") return true;
    if (s == "0") return false;
    throw FormatError(std::string("bad flag in column ") + column + ": '" + s + "'");
}

}  // namespace detail

inline char delimiter_for(std::string_view format) {
    if (format == "csv") return ',';
    if (format == "tsv") return '\t';
    throw Error("unknown results format '" + std::string(format) + "' (expected csv or tsv)");
}

inline void write_result_header(std::ostream& out, char delim = ',') {
    const auto& cols = result_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? std::string(1, delim) : "") << cols[i];
    out << '\n';
}

inline void write_result_row(std::ostream& out, const ResultRow& r, char delim = ',') {
    using namespace detail;
    const std::vector<std::string> f{
        sanitize_field(r.scale, delim), sanitize_field(r.classifier, delim), std::to_string(r.bss),
        sanitize_field(r.detector, delim), sanitize_field(r.strategy, delim), std::to_string(r.replicate),
        std::to_string(r.t), std::to_string(r.test_year), std::string(to_string(r.status)),
        r.trained ? "1" : "0", r.drift ? (*r.drift ? "1" : "0") : "",
        sanitize_field(r.mean_test, delim), format_optional(r.mean_p),
        sanitize_field(r.variance_test, delim), format_optional(r.variance_p),
        std::to_string(r.tp), std::to_string(r.fp), std::to_string(r.fn), std::to_string(r.tn),
        format_optional(r.accuracy), format_optional(r.precision), format_optional(r.recall), format_optional(r.f1),
        sanitize_field(r.error, delim)};
    for (std::size_t i = 0; i < f.size(); ++i) out << (i ? std::string(1, delim) : "") << f[i];
    out << '\n';
}

inline ResultRow parse_result_row(std::string_view line, char delim = ',') {
    using namespace detail;
    const auto f = split_fields(line, delim);
    if (f.size() != result_columns().size())
        throw FormatError("result line has " + std::to_string(f.size()) + " fields, expected " +
                          std::to_string(result_columns().size()));
    ResultRow r;
    r.scale = f[0];
    r.classifier = f[1];
    r.bss = static_cast<int>(parse_integer(f[2], "bss"));
    r.detector = f[3];
    r.strategy = f[4];
    r.replicate = static_cast<int>(parse_integer(f[5], "replicate"));
    r.t = static_cast<int>(parse_integer(f[6], "t"));
    r.test_year = static_cast<int>(parse_integer(f[7], "test_year"));
    r.status = parse_row_status(f[8]);
    r.trained = parse_flag(f[9], "trained");
    if (!f[10].empty()) r.drift = parse_flag(f[10], "drift");
    r.mean_test = f[11];
    r.mean_p = parse_optional(f[12], "mean_p");
    r.variance_test = f[13];
    r.variance_p = parse_optional(f[14], "variance_p");
    r.tp = static_cast<std::uint64_t>(parse_integer(f[15], "tp"));
    r.fp = static_cast<std::uint64_t>(parse_integer(f[16], "fp"));
    r.fn = static_cast<std::uint64_t>(parse_integer(f[17], "fn"));
    r.tn = static_cast<std::uint64_t>(parse_integer(f[18], "tn"));
    r.accuracy = parse_optional(f[19], "accuracy");
    r.precision = parse_optional(f[20], "precision");
    r.recall = parse_optional(f[21], "recall");
    r.f1 = parse_optional(f[22], "f1");
    r.error = f[23];
    return r;
}

/// Checks the header line and returns the rows.
inline std::vector<ResultRow> read_results(std::istream& in, char delim = ',') {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("results file has no header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_fields(line, delim);
    if (header != result_columns()) throw FormatError("results header does not match the expected columns");
    std::vector<ResultRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            rows.push_back(parse_result_row(line, delim));
        } catch (const FormatError& e) {
            throw FormatError("results line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

inline std::vector<ResultRow> import_results(const std::string& path, std::string_view format = "csv") {
    std::ifstream in(path);
    if (!in) throw Error("cannot open results file: " + path);
    return read_results(in, delimiter_for(format));
}

/// Header plus one line per row, columns in `result_columns()` order.
inline void export_results(std::span<const ResultRow> rows, const std::string& path, std::string_view format = "csv") {
    const char delim = delimiter_for(format);
    std::ofstream out(path);
    if (!out) throw Error("cannot write results file: " + path);
    write_result_header(out, delim);
    for (const auto& r : rows) write_result_row(out, r, delim);
    out.flush();
    if (!out) throw Error("failed writing results file: " + path);
}

/// Flattens one step of a run into a row.
inline ResultRow make_result_row(const StoreKey& key, const StepResult& s) {
    ResultRow r;
    r.scale = key.scale;
    r.classifier = std::string(to_string(key.kind));
    r.bss = key.bss;
    r.detector = key.detector ? std::string(to_string(*key.detector)) : std::string(kNotApplicable);
    r.strategy = std::string(to_string(key.strategy));
    r.replicate = key.replicate;
    r.t = s.t;
    r.test_year = s.test_year;
    r.status = s.skipped ? RowStatus::skipped : RowStatus::ok;
    r.trained = s.trained;
    if (s.drift) {
        r.drift = s.drift->drift;
        if (s.drift->mean_test) {
            r.mean_test = std::string(stats::to_string(s.drift->mean_test->test_name));
            r.mean_p = s.drift->mean_test->p_value;
        }
        if (s.drift->variance_test) {
            r.variance_test = std::string(stats::to_string(s.drift->variance_test->test_name));
            r.variance_p = s.drift->variance_test->p_value;
        }
        if (s.drift->error) r.error = *s.drift->error;
    }
    r.tp = s.confusion.tp;
    r.fp = s.confusion.fp;
    r.fn = s.confusion.fn;
    r.tn = s.confusion.tn;
    if (s.metrics) {
        r.accuracy = s.metrics->accuracy;
        r.precision = s.metrics->precision;
        r.recall = s.metrics->recall;
        r.f1 = s.metrics->f1;
    }
    return r;
}

}  // namespace driftflow
