#pragma once

// Raw flight CSV loading, feature derivation, min-max normalization and the
// binary row format shared by `preprocess` and `synth`.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "driftflow/error.hpp"
#include "driftflow/log.hpp"

namespace driftflow {

// ---------------------------------------------------------------------------
// Calendar helpers

struct Timestamp {
    int year = 1970;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;

    friend bool operator==(const Timestamp&, const Timestamp&) = default;
};

namespace detail {

// Howard Hinnant's days_from_civil.
constexpr std::int64_t days_from_civil(int y, unsigned m, unsigned d) noexcept {
    y -= m <= 2 ? 1 : 0;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr bool is_leap(int y) noexcept { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

constexpr int days_in_month(int y, int m) noexcept {
    constexpr std::array<int, 12> len{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : len[static_cast<std::size_t>(m - 1)];
}

inline bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace detail

/// Days since 1970-01-01.
inline std::int64_t days_since_epoch(const Timestamp& t) {
    return detail::days_from_civil(t.year, static_cast<unsigned>(t.month), static_cast<unsigned>(t.day));
}

inline std::int64_t minutes_since_epoch(const Timestamp& t) {
    return days_since_epoch(t) * 1440 + t.hour * 60 + t.minute;
}

/// Accepts `YYYY-MM-DDTHH:MM[:SS]` or with a space separator. Seconds are dropped.
inline std::optional<Timestamp> parse_timestamp(std::string_view text) {
    text = detail::trim(text);
    if (text.size() < 16) return std::nullopt;
    if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') || text[13] != ':')
        return std::nullopt;
    Timestamp t;
    if (!detail::parse_int(text.substr(0, 4), t.year) || !detail::parse_int(text.substr(5, 2), t.month) ||
        !detail::parse_int(text.substr(8, 2), t.day) || !detail::parse_int(text.substr(11, 2), t.hour) ||
        !detail::parse_int(text.substr(14, 2), t.minute))
        return std::nullopt;
    if (text.size() > 16) {
        int sec = 0;
        if (text[16] != ':' || text.size() < 19 || !detail::parse_int(text.substr(17, 2), sec) || sec > 60)
            return std::nullopt;
        auto rest = text.substr(19);
        if (!rest.empty() && rest != "Z") return std::nullopt;
    }
    if (t.month < 1 || t.month > 12 || t.day < 1 || t.day > detail::days_in_month(t.year, t.month) ||
        t.hour > 23 || t.minute > 59)
        return std::nullopt;
    return t;
}

struct IsoWeek {
    int year;
    int week;
};

/// ISO-8601 week date of a calendar day.
inline IsoWeek iso_week(int year, int month, int day) {
    const auto days = detail::days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    // 1970-01-01 was a Thursday; ISO weekday 1 = Monday.
    const int weekday = static_cast<int>(((days % 7) + 7 + 3) % 7) + 1;
    const auto thursday = days + (4 - weekday);
    // Calendar year of that Thursday owns the week.
    int y = year;
    if (thursday < detail::days_from_civil(y, 1, 1)) --y;
    if (thursday >= detail::days_from_civil(y + 1, 1, 1)) ++y;
    const auto jan1 = detail::days_from_civil(y, 1, 1);
    return {y, static_cast<int>((thursday - jan1) / 7) + 1};
}

// ---------------------------------------------------------------------------
// Records

enum class FlightKind { domestic, international };

struct RawFlightRecord {
    std::string flight_id;
    std::string origin_airport;
    std::string destination_airport;
    Timestamp scheduled_departure;
    std::optional<Timestamp> actual_departure;
    FlightKind flight_kind = FlightKind::domestic;
    /// Aligned with `LoadResult::weather_columns`; NaN marks a missing observation.
    std::vector<double> weather_features;
};

struct MalformedLine {
    std::size_t line_number;
    std::string reason;
};

struct LoadResult {
    std::vector<std::string> weather_columns;
    std::vector<RawFlightRecord> records;
    std::vector<MalformedLine> malformed;
};

inline constexpr std::array<std::string_view, 6> kRequiredColumns{
    "flight_id", "origin", "destination", "scheduled_departure", "actual_departure", "kind"};

/// Reads a header-named CSV of raw flights. Weather columns must be prefixed `wx_`.
inline LoadResult load_flights(std::istream& in) {
    LoadResult result;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("flight CSV has no header row");

    const auto header = detail::split(detail::trim(line), ',');
    std::map<std::string, std::size_t> position;
    std::vector<std::size_t> weather_pos;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name(detail::trim(header[i]));
        const bool known = std::find(kRequiredColumns.begin(), kRequiredColumns.end(), name) != kRequiredColumns.end();
        if (name.rfind("wx_", 0) == 0) {
            result.weather_columns.push_back(name);
            weather_pos.push_back(i);
        } else if (!known) {
            throw FormatError("unknown column in flight CSV header: '" + name + "'");
        }
        if (!position.emplace(name, i).second) throw FormatError("duplicate column in flight CSV header: '" + name + "'");
    }
    for (auto col : kRequiredColumns)
        if (!position.contains(std::string(col)))
            throw FormatError("missing column in flight CSV header: '" + std::string(col) + "'");

    const auto col = [&](std::string_view name) { return position.at(std::string(name)); };
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const auto fields = detail::split(trimmed, ',');
        auto reject = [&](std::string reason) { result.malformed.push_back({line_number, std::move(reason)}); };
        if (fields.size() != header.size()) {
            reject("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
            continue;
        }
        RawFlightRecord rec;
        rec.flight_id = std::string(detail::trim(fields[col("flight_id")]));
        rec.origin_airport = std::string(detail::trim(fields[col("origin")]));
        rec.destination_airport = std::string(detail::trim(fields[col("destination")]));
        if (rec.origin_airport.empty() || rec.destination_airport.empty()) {
            reject("empty origin or destination");
            continue;
        }
        const auto sched = parse_timestamp(fields[col("scheduled_departure")]);
        if (!sched) {
            reject("invalid scheduled_departure");
            continue;
        }
        rec.scheduled_departure = *sched;
        const auto actual_text = detail::trim(fields[col("actual_departure")]);
        if (!actual_text.empty()) {
            rec.actual_departure = parse_timestamp(actual_text);
            if (!rec.actual_departure) {
                reject("invalid actual_departure");
                continue;
            }
        }
        const auto kind = detail::lower(detail::trim(fields[col("kind")]));
        if (kind == "domestic") {
            rec.flight_kind = FlightKind::domestic;
        } else if (kind == "international") {
            rec.flight_kind = FlightKind::international;
        } else {
            reject("invalid kind '" + kind + "'");
            continue;
        }
        bool ok = true;
        rec.weather_features.reserve(weather_pos.size());
        for (auto p : weather_pos) {
            const std::string text(detail::trim(fields[p]));
            if (text.empty() || text == "NA") {
                rec.weather_features.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            try {
                std::size_t used = 0;
                const double v = std::stod(text, &used);
                if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
                rec.weather_features.push_back(v);
            } catch (const std::exception&) {
                reject("non-numeric weather value '" + text + "'");
                ok = false;
                break;
            }
        }
        if (ok) result.records.push_back(std::move(rec));
    }
    return result;
}

inline LoadResult load_flights(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open flight CSV: " + path);
    return load_flights(in);
}

// ---------------------------------------------------------------------------
// Airport -> state mapping

using AirportStates = std::map<std::string, std::string, std::less<>>;

/// CSV with header `icao,city,state`.
inline AirportStates load_airport_states(std::istream& in) {
    AirportStates states;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("airport state table is empty");
    const auto header = detail::split(detail::trim(line), ',');
    if (header.size() < 3 || detail::trim(header[0]) != "icao" || detail::trim(header.back()) != "state")
        throw FormatError("airport state table must have header icao,city,state");
    while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        const auto fields = detail::split(t, ',');
        if (fields.size() != header.size()) throw FormatError("malformed airport state line: " + std::string(t));
        states.emplace(std::string(detail::trim(fields.front())), std::string(detail::trim(fields.back())));
    }
    return states;
}

inline AirportStates load_airport_states(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open airport state table: " + path);
    return load_airport_states(in);
}

// ---------------------------------------------------------------------------
// Preprocessing

/// The ten busiest Brazilian airports by departures.
inline const std::vector<std::string>& default_top_airports() {
    static const std::vector<std::string> codes{"SBBR", "SBPA", "SBSV", "SBGL", "SBCT",
                                                "SBKP", "SBGR", "SBCF", "SBRJ", "SBSP"};
    return codes;
}

struct PreprocessConfig {
    /// Set for airport-based (AB) scale; absent means system-based (SB).
    std::optional<std::string> airport_filter;
    std::vector<std::string> top_airports = default_top_airports();
    int delay_threshold_minutes = 15;
    int max_delay_hours = 24;

    void validate() const {
        if (delay_threshold_minutes <= 0) throw Error("delay_threshold_minutes must be positive");
        if (max_delay_hours * 60 <= delay_threshold_minutes)
            throw Error("max_delay_hours must exceed the delay threshold");
        if (airport_filter &&
            std::find(top_airports.begin(), top_airports.end(), *airport_filter) == top_airports.end())
            throw Error("airport filter " + *airport_filter + " is not among the top airports");
    }
};

struct FlightFeatureRow {
    std::string origin_airport;
    std::string destination_state;
    int week_of_year = 1;
    int year = 0;
    /// Raw until passed through a Normalizer; NaN marks a missing observation.
    std::vector<double> numeric_features;
    bool delayed = false;

    friend bool operator==(const FlightFeatureRow& a, const FlightFeatureRow& b) {
        if (a.origin_airport != b.origin_airport || a.destination_state != b.destination_state ||
            a.week_of_year != b.week_of_year || a.year != b.year || a.delayed != b.delayed ||
            a.numeric_features.size() != b.numeric_features.size())
            return false;
        for (std::size_t i = 0; i < a.numeric_features.size(); ++i) {
            const double x = a.numeric_features[i], y = b.numeric_features[i];
            if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
        }
        return true;
    }
};

/// Rows plus the names of their numeric features.
struct RowSet {
    std::vector<std::string> feature_names;
    std::vector<FlightFeatureRow> rows;
};

struct PreprocessReport {
    std::size_t input = 0;
    std::size_t kept = 0;
    std::size_t international = 0;
    std::size_t outside_airports = 0;
    std::size_t missing_departure = 0;
    std::size_t excessive_delay = 0;
    std::size_t unknown_state = 0;
};

inline constexpr std::string_view kScheduleHourFeature = "sched_hour";

/// Delay label from raw departure delay in minutes.
inline bool is_delayed(double delay_minutes, int threshold_minutes) { return delay_minutes >= threshold_minutes; }

/// Keeps rows whose origin satisfies the scale filter. Idempotent.
inline std::vector<FlightFeatureRow> filter_rows(std::span<const FlightFeatureRow> rows, const PreprocessConfig& cfg) {
    std::vector<FlightFeatureRow> out;
    for (const auto& r : rows) {
        if (std::find(cfg.top_airports.begin(), cfg.top_airports.end(), r.origin_airport) == cfg.top_airports.end())
            continue;
        if (cfg.airport_filter && r.origin_airport != *cfg.airport_filter) continue;
        out.push_back(r);
    }
    return out;
}

/// Derives model-ready rows. Numeric features are left unnormalized.
inline RowSet preprocess(const LoadResult& loaded, const PreprocessConfig& cfg, const AirportStates& states,
                         PreprocessReport* report = nullptr) {
    cfg.validate();
    PreprocessReport rep;
    RowSet out;
    out.feature_names = loaded.weather_columns;
    out.feature_names.emplace_back(kScheduleHourFeature);
    rep.input = loaded.records.size();

    for (const auto& rec : loaded.records) {
        if (rec.flight_kind != FlightKind::domestic) {
            ++rep.international;
            continue;
        }
        const bool top = std::find(cfg.top_airports.begin(), cfg.top_airports.end(), rec.origin_airport) !=
                         cfg.top_airports.end();
        if (!top || (cfg.airport_filter && rec.origin_airport != *cfg.airport_filter)) {
            ++rep.outside_airports;
            continue;
        }
        if (!rec.actual_departure) {
            ++rep.missing_departure;
            continue;
        }
        const auto delay = static_cast<double>(minutes_since_epoch(*rec.actual_departure) -
                                               minutes_since_epoch(rec.scheduled_departure));
        if (delay > cfg.max_delay_hours * 60.0) {
            ++rep.excessive_delay;
            continue;
        }
        const auto state = states.find(rec.destination_airport);
        if (state == states.end()) {
            ++rep.unknown_state;
            continue;
        }
        FlightFeatureRow row;
        row.origin_airport = rec.origin_airport;
        row.destination_state = state->second;
        const auto& s = rec.scheduled_departure;
        row.year = s.year;
        row.week_of_year = iso_week(s.year, s.month, s.day).week;
        row.numeric_features = rec.weather_features;
        row.numeric_features.push_back(s.hour + s.minute / 60.0);
        row.delayed = is_delayed(delay, cfg.delay_threshold_minutes);
        out.rows.push_back(std::move(row));
    }
    rep.kept = out.rows.size();
    if (rep.unknown_state > 0)
        log_warning(std::to_string(rep.unknown_state) + " rows excluded: destination airport has no state mapping");
    if (report) *report = rep;
    return out;
}

// ---------------------------------------------------------------------------
// Min-max normalization

/// Per-feature min-max scaler with mean imputation for missing values.
class Normalizer {
public:
    Normalizer() = default;

    static Normalizer fit(std::span<const FlightFeatureRow> rows) {
        if (rows.empty()) throw Error("cannot fit a normalizer on zero rows");
        const std::size_t p = rows.front().numeric_features.size();
        Normalizer n;
        n.min_.assign(p, std::numeric_limits<double>::infinity());
        n.max_.assign(p, -std::numeric_limits<double>::infinity());
        n.mean_.assign(p, 0.0);
        std::vector<std::size_t> count(p, 0);
        for (const auto& r : rows) {
            if (r.numeric_features.size() != p) throw Error("rows disagree on numeric feature count");
            for (std::size_t j = 0; j < p; ++j) {
                const double v = r.numeric_features[j];
                if (std::isnan(v)) continue;
                n.min_[j] = std::min(n.min_[j], v);
                n.max_[j] = std::max(n.max_[j], v);
                n.mean_[j] += v;
                ++count[j];
            }
        }
        for (std::size_t j = 0; j < p; ++j) {
            if (count[j] == 0) {
                n.min_[j] = n.max_[j] = n.mean_[j] = 0.0;
            } else {
                n.mean_[j] /= static_cast<double>(count[j]);
            }
            if (n.max_[j] <= n.min_[j]) {
                n.constant_.push_back(j);
                log_warning("numeric feature " + std::to_string(j) + " is constant in the fitted rows; mapped to 0");
            }
        }
        return n;
    }

    static Normalizer from_parameters(std::vector<double> min, std::vector<double> max, std::vector<double> mean) {
        if (min.size() != max.size() || min.size() != mean.size()) throw FormatError("normalizer parameter sizes differ");
        Normalizer n;
        n.min_ = std::move(min);
        n.max_ = std::move(max);
        n.mean_ = std::move(mean);
        for (std::size_t j = 0; j < n.min_.size(); ++j)
            if (n.max_[j] <= n.min_[j]) n.constant_.push_back(j);
        return n;
    }

    std::size_t feature_count() const noexcept { return min_.size(); }

    /// Maps one raw value of feature j into [0,1]; NaN is imputed with the fitted mean.
    double transform(std::size_t j, double v) const {
        if (std::isnan(v)) v = mean_[j];
        const double range = max_[j] - min_[j];
        if (!(range > 0.0)) return 0.0;
        return std::clamp((v - min_[j]) / range, 0.0, 1.0);
    }

    FlightFeatureRow apply(const FlightFeatureRow& row) const {
        if (row.numeric_features.size() != feature_count()) throw Error("row feature count differs from normalizer");
        FlightFeatureRow out = row;
        for (std::size_t j = 0; j < out.numeric_features.size(); ++j)
            out.numeric_features[j] = transform(j, row.numeric_features[j]);
        return out;
    }

    std::vector<FlightFeatureRow> apply(std::span<const FlightFeatureRow> rows) const {
        std::vector<FlightFeatureRow> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(apply(r));
        return out;
    }

    const std::vector<double>& min() const noexcept { return min_; }
    const std::vector<double>& max() const noexcept { return max_; }
    const std::vector<double>& mean() const noexcept { return mean_; }
    const std::vector<std::size_t>& constant_features() const noexcept { return constant_; }

    friend bool operator==(const Normalizer&, const Normalizer&) = default;

private:
    std::vector<double> min_;
    std::vector<double> max_;
    std::vector<double> mean_;
    std::vector<std::size_t> constant_;
};

inline std::vector<FlightFeatureRow> apply_normalizer(const Normalizer& n, std::span<const FlightFeatureRow> rows) {
    return n.apply(rows);
}

// ---------------------------------------------------------------------------
// Binary row files
//
// Layout (little-endian host order): magic "DFROWS01", u32 feature count,
// feature names, u64 row count, then per row: origin, destination state,
// i32 week, i32 year, f64 features, u8 delayed. Strings are u32 length + bytes.

namespace detail {

template <class T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw FormatError("truncated row file");
    return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    const auto n = read_pod<std::uint32_t>(in);
    if (n > (1u << 20)) throw FormatError("implausible string length in row file");
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw FormatError("truncated row file");
    return s;
}

inline constexpr std::string_view kRowMagic = "DFROWS01";

}  // namespace detail

inline void write_rows(std::ostream& out, const RowSet& set) {
    out.write(detail::kRowMagic.data(), static_cast<std::streamsize>(detail::kRowMagic.size()));
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(set.feature_names.size()));
    for (const auto& name : set.feature_names) detail::write_string(out, name);
    detail::write_pod<std::uint64_t>(out, set.rows.size());
    for (const auto& r : set.rows) {
        if (r.numeric_features.size() != set.feature_names.size())
            throw Error("row feature count differs from feature names");
        detail::write_string(out, r.origin_airport);
        detail::write_string(out, r.destination_state);
        detail::write_pod<std::int32_t>(out, r.week_of_year);
        detail::write_pod<std::int32_t>(out, r.year);
        for (double v : r.numeric_features) detail::write_pod<double>(out, v);
        detail::write_pod<std::uint8_t>(out, r.delayed ? 1 : 0);
    }
}

inline RowSet read_rows(std::istream& in) {
    std::string magic(detail::kRowMagic.size(), '\0');
    in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    if (!in || magic != detail::kRowMagic) throw FormatError("not a driftflow row file");
    RowSet set;
    const auto p = detail::read_pod<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < p; ++i) set.feature_names.push_back(detail::read_string(in));
    const auto n = detail::read_pod<std::uint64_t>(in);
    set.rows.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 24)));
    for (std::uint64_t i = 0; i < n; ++i) {
        FlightFeatureRow r;
        r.origin_airport = detail::read_string(in);
        r.destination_state = detail::read_string(in);
        r.week_of_year = detail::read_pod<std::int32_t>(in);
        r.year = detail::read_pod<std::int32_t>(in);
        r.numeric_features.resize(p);
        for (auto& v : r.numeric_features) v = detail::read_pod<double>(in);
        r.delayed = detail::read_pod<std::uint8_t>(in) != 0;
        set.rows.push_back(std::move(r));
    }
    return set;
}

inline void write_rows(const std::string& path, const RowSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write row file: " + path);
    write_rows(out, set);
    if (!out) throw Error("failed writing row file: " + path);
}

inline RowSet read_rows(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open row file: " + path);
    return read_rows(in);
}

}  // namespace driftflow
