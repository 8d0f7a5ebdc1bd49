#pragma once

// Seeded synthetic flight streams with known drift points.
//
// Each row carries k uniform(0,1) numeric features and a destination state
// drawn uniformly from the categorical levels. The label is Bernoulli with
// probability sigmoid(intercept + w.x + effect[state] + seasonal(week)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftflow/error.hpp"
#include "driftflow/ingest.hpp"

namespace driftflow {

enum class DriftKind { prior_shift, boundary_flip };

inline std::string_view to_string(DriftKind k) {
    return k == DriftKind::prior_shift ? "prior_shift" : "boundary_flip";
}

inline DriftKind parse_drift_kind(std::string_view s) {
    if (s == "prior_shift") return DriftKind::prior_shift;
    if (s == "boundary_flip") return DriftKind::boundary_flip;
    throw FormatError("unknown drift kind '" + std::string(s) + "'");
}

struct DriftEvent {
    int at_year = 0;  // first calendar year generated under the new model
    DriftKind kind = DriftKind::prior_shift;
    double magnitude = 0.0;           // marginal-rate delta (prior_shift); unused for flips
    std::optional<std::size_t> feature;  // flipped coefficient; default is the largest |w|

    friend bool operator==(const DriftEvent&, const DriftEvent&) = default;
};

struct SyntheticSpec {
    int start_year = 2001;
    int years = 10;
    int weeks_per_year = 52;
    int flights_per_week = 200;
    double base_delay_rate = 0.2;
    std::vector<double> coefficients{1.0, -1.0, 0.5};
    std::vector<double> category_effects{0.0, 0.3, -0.3, 0.6, -0.6};
    std::vector<std::string> origins{"SBGR"};
    double seasonal_amplitude = 0.0;
    std::vector<DriftEvent> drift_events;
    std::uint64_t seed = 1;

    int last_year() const noexcept { return start_year + years - 1; }
};

/// State names used for the categorical levels, in level order.
inline const std::vector<std::string>& synthetic_state_names() {
    static const std::vector<std::string> names{"SP", "RJ", "MG", "RS", "BA", "PR", "DF", "PE", "CE", "SC",
                                                "GO", "AM", "PA", "ES", "MT", "MS", "RN", "PB", "AL", "SE"};
    return names;
}

/// The labeling function in force during one year.
struct LabelModel {
    double intercept = 0.0;
    std::vector<double> coefficients;
    std::vector<double> category_effects;
    double seasonal_amplitude = 0.0;
    int weeks_per_year = 52;

    double logit(std::span<const double> x, std::size_t level, int week) const {
        double z = intercept + category_effects[level];
        for (std::size_t j = 0; j < coefficients.size(); ++j) z += coefficients[j] * x[j];
        if (seasonal_amplitude != 0.0)
            z += seasonal_amplitude *
                 std::sin(2.0 * std::numbers::pi * static_cast<double>(week - 1) / static_cast<double>(weeks_per_year));
        return z;
    }

    double probability(std::span<const double> x, std::size_t level, int week) const {
        return 1.0 / (1.0 + std::exp(-logit(x, level, week)));
    }
};

/// Fixed draw of feature vectors, levels and weeks used to calibrate intercepts.
struct ProbeSet {
    std::vector<std::vector<double>> x;
    std::vector<std::size_t> level;
    std::vector<int> week;

    std::size_t size() const noexcept { return x.size(); }
};

inline ProbeSet make_probe_set(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> lvl(0, spec.category_effects.size() - 1);
    std::uniform_int_distribution<int> wk(1, spec.weeks_per_year);
    ProbeSet p;
    p.x.resize(n);
    p.level.resize(n);
    p.week.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.x[i].resize(spec.coefficients.size());
        for (auto& v : p.x[i]) v = u(rng);
        p.level[i] = lvl(rng);
        p.week[i] = wk(rng);
    }
    return p;
}

inline double marginal_rate(const LabelModel& m, const ProbeSet& probe) {
    double s = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) s += m.probability(probe.x[i], probe.level[i], probe.week[i]);
    return s / static_cast<double>(probe.size());
}

/// Intercept giving `target` marginal rate over the probe set (bisection; the rate is monotone in it).
inline double solve_intercept(LabelModel m, const ProbeSet& probe, double target) {
    if (!(target > 0.0 && target < 1.0)) throw Error("target delay rate must lie in (0,1)");
    double lo = -60.0, hi = 60.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        m.intercept = 0.5 * (lo + hi);
        (marginal_rate(m, probe) < target ? lo : hi) = m.intercept;
    }
    return 0.5 * (lo + hi);
}

inline constexpr std::size_t kProbeSize = 20000;

inline std::uint64_t probe_seed(const SyntheticSpec& spec) { return spec.seed ^ 0xC0FFEE1234567ULL; }

inline void validate(const SyntheticSpec& spec) {
    if (spec.years < 1) throw Error("synthetic spec: years must be positive");
    if (spec.weeks_per_year < 1 || spec.weeks_per_year > 53) throw Error("synthetic spec: weeks_per_year must be in [1,53]");
    if (spec.flights_per_week < 1) throw Error("synthetic spec: flights_per_week must be positive");
    if (!(spec.base_delay_rate > 0.0 && spec.base_delay_rate < 1.0))
        throw Error("synthetic spec: base_delay_rate must lie in (0,1)");
    if (spec.category_effects.empty() || spec.category_effects.size() > synthetic_state_names().size())
        throw Error("synthetic spec: category_effects needs 1.." + std::to_string(synthetic_state_names().size()) + " levels");
    if (spec.origins.empty()) throw Error("synthetic spec: at least one origin is required");
    for (const auto& e : spec.drift_events) {
        if (e.at_year <= spec.start_year || e.at_year > spec.last_year())
            throw Error("synthetic spec: drift year " + std::to_string(e.at_year) + " outside (" +
                        std::to_string(spec.start_year) + ", " + std::to_string(spec.last_year()) + "]");
        if (e.kind == DriftKind::boundary_flip) {
            if (spec.coefficients.empty()) throw Error("synthetic spec: boundary_flip needs a numeric coefficient");
            if (e.feature && *e.feature >= spec.coefficients.size())
                throw Error("synthetic spec: boundary_flip feature index out of range");
        }
    }
}

/// Labeling model for each generated year, after applying the drift events in order.
inline std::vector<LabelModel> label_models(const SyntheticSpec& spec) {
    validate(spec);
    const auto probe = make_probe_set(spec, kProbeSize, probe_seed(spec));
    LabelModel m{0.0, spec.coefficients, spec.category_effects, spec.seasonal_amplitude, spec.weeks_per_year};
    double rate = spec.base_delay_rate;
    m.intercept = solve_intercept(m, probe, rate);

    auto events = spec.drift_events;
    std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.at_year < b.at_year; });
    std::vector<LabelModel> out;
    std::size_t next = 0;
    for (int y = spec.start_year; y <= spec.last_year(); ++y) {
        for (; next < events.size() && events[next].at_year == y; ++next) {
            const auto& e = events[next];
            if (e.kind == DriftKind::prior_shift) {
                rate += e.magnitude;
                if (!(rate > 0.0 && rate < 1.0))
                    throw Error("synthetic spec: prior_shift at " + std::to_string(y) + " moves the delay rate to " +
                                std::to_string(rate) + ", outside (0,1)");
            } else {
                std::size_t j = 0;
                if (e.feature) {
                    j = *e.feature;
                } else {
                    for (std::size_t k = 1; k < m.coefficients.size(); ++k)
                        if (std::abs(m.coefficients[k]) > std::abs(m.coefficients[j])) j = k;
                }
                m.coefficients[j] = -m.coefficients[j];
            }
            m.intercept = solve_intercept(m, probe, rate);
        }
        out.push_back(m);
    }
    return out;
}

struct SyntheticStream {
    RowSet rows;
    std::vector<DriftEvent> truth;
    std::vector<LabelModel> models;  // one per year
};

inline SyntheticStream generate_stream(const SyntheticSpec& spec) {
    SyntheticStream s;
    s.models = label_models(spec);
    s.truth = spec.drift_events;
    std::stable_sort(s.truth.begin(), s.truth.end(), [](const auto& a, const auto& b) { return a.at_year < b.at_year; });

    const std::size_t k = spec.coefficients.size();
    for (std::size_t j = 0; j < k; ++j) s.rows.feature_names.push_back("x" + std::to_string(j));

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> lvl(0, spec.category_effects.size() - 1);
    std::uniform_int_distribution<std::size_t> org(0, spec.origins.size() - 1);
    const auto& states = synthetic_state_names();
    s.rows.rows.reserve(static_cast<std::size_t>(spec.years) * static_cast<std::size_t>(spec.weeks_per_year) *
                        static_cast<std::size_t>(spec.flights_per_week));
    std::vector<double> x(k);
    for (int yi = 0; yi < spec.years; ++yi) {
        const auto& m = s.models[static_cast<std::size_t>(yi)];
        for (int w = 1; w <= spec.weeks_per_year; ++w)
            for (int f = 0; f < spec.flights_per_week; ++f) {
                for (auto& v : x) v = u(rng);
                const auto level = lvl(rng);
                const auto origin = org(rng);
                const bool delayed = u(rng) < m.probability(x, level, w);
                FlightFeatureRow r;
                r.origin_airport = spec.origins[origin];
                r.destination_state = states[level];
                r.week_of_year = w;
                r.year = spec.start_year + yi;
                r.numeric_features = x;
                r.delayed = delayed;
                s.rows.rows.push_back(std::move(r));
            }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Spec files

inline nlohmann::json to_json(const DriftEvent& e) {
    nlohmann::json j{{"at_year", e.at_year}, {"kind", to_string(e.kind)}, {"magnitude", e.magnitude}};
    if (e.feature) j["feature"] = *e.feature;
    return j;
}

inline nlohmann::json to_json(const SyntheticSpec& s) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : s.drift_events) events.push_back(to_json(e));
    return {{"start_year", s.start_year},
            {"years", s.years},
            {"weeks_per_year", s.weeks_per_year},
            {"flights_per_week", s.flights_per_week},
            {"base_delay_rate", s.base_delay_rate},
            {"coefficients", s.coefficients},
            {"category_effects", s.category_effects},
            {"origins", s.origins},
            {"seasonal_amplitude", s.seasonal_amplitude},
            {"drift_events", events},
            {"seed", s.seed}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known{"start_year", "years", "weeks_per_year", "flights_per_week",
                                                "base_delay_rate", "coefficients", "category_effects", "origins",
                                                "seasonal_amplitude", "drift_events", "seed"};
    if (!j.is_object()) throw FormatError("synthetic spec must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw FormatError("unknown synthetic spec key '" + key + "'");
    SyntheticSpec s;
    try {
        s.start_year = j.value("start_year", s.start_year);
        s.years = j.value("years", s.years);
        s.weeks_per_year = j.value("weeks_per_year", s.weeks_per_year);
        s.flights_per_week = j.value("flights_per_week", s.flights_per_week);
        s.base_delay_rate = j.value("base_delay_rate", s.base_delay_rate);
        s.coefficients = j.value("coefficients", s.coefficients);
        s.category_effects = j.value("category_effects", s.category_effects);
        s.origins = j.value("origins", s.origins);
        s.seasonal_amplitude = j.value("seasonal_amplitude", s.seasonal_amplitude);
        s.seed = j.value("seed", s.seed);
        if (j.contains("drift_events"))
            for (const auto& e : j.at("drift_events")) {
                DriftEvent ev;
                ev.at_year = e.at("at_year").get<int>();
                ev.kind = parse_drift_kind(e.at("kind").get<std::string>());
                ev.magnitude = e.value("magnitude", 0.0);
                if (e.contains("feature")) ev.feature = e.at("feature").get<std::size_t>();
                s.drift_events.push_back(ev);
            }
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("malformed synthetic spec: ") + ex.what());
    }
    validate(s);
    return s;
}

inline SyntheticSpec load_synthetic_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open synthetic spec: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError("synthetic spec " + path + " is not JSON: " + ex.what());
    }
    return synthetic_spec_from_json(j);
}

}  // namespace driftflow
