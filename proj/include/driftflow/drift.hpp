#pragma once

// Drift detection on weekly delay proportions of two batch sequences.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "driftflow/error.hpp"
#include "driftflow/log.hpp"
#include "driftflow/stats/tests.hpp"
#include "driftflow/windowing.hpp"

namespace driftflow {

enum class Detector { mean, variance, mean_variance };
enum class Strategy { baseline, passive, active };

inline std::string_view to_string(Detector d) {
    switch (d) {
        case Detector::mean: return "mean";
        case Detector::variance: return "variance";
        case Detector::mean_variance: return "mean_variance";
    }
    return "?";
}

inline std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::baseline: return "baseline";
        case Strategy::passive: return "passive";
        case Strategy::active: return "active";
    }
    return "?";
}

inline Detector parse_detector(std::string_view s) {
    if (s == "mean") return Detector::mean;
    if (s == "variance") return Detector::variance;
    if (s == "mean_variance" || s == "mean/variance") return Detector::mean_variance;
    throw FormatError("unknown drift detector '" + std::string(s) + "'");
}

inline Strategy parse_strategy(std::string_view s) {
    if (s == "baseline") return Strategy::baseline;
    if (s == "passive") return Strategy::passive;
    if (s == "active") return Strategy::active;
    throw FormatError("unknown drift handling strategy '" + std::string(s) + "'");
}

struct WeeklyProportion {
    int year = 0;
    int week_of_year = 0;
    std::size_t n_flights = 0;
    double delay_proportion = 0.0;
};

struct WeeklyProportions {
    std::vector<WeeklyProportion> entries;

    std::vector<double> values() const {
        std::vector<double> v;
        v.reserve(entries.size());
        for (const auto& e : entries) v.push_back(e.delay_proportion);
        return v;
    }
};

struct DriftConfig {
    double alpha = stats::kDefaultAlpha;
    /// Weeks with fewer flights are left out of the proportion vector.
    std::size_t min_week_flights = 5;
    stats::TTestVariant t_variant = stats::TTestVariant::welch;
    stats::LeveneCenter levene_center = stats::LeveneCenter::mean;
};

/// Delay proportion of every (year, week) in the sequence with enough flights, chronologically.
inline WeeklyProportions weekly_delay_proportions(std::span<const FlightFeatureRow> rows,
                                                  std::size_t min_week_flights = DriftConfig{}.min_week_flights) {
    if (rows.empty()) throw Error("weekly proportions of an empty row set");
    std::map<std::pair<int, int>, std::pair<std::size_t, std::size_t>> counts;
    for (const auto& r : rows) {
        auto& c = counts[{r.year, r.week_of_year}];
        ++c.first;
        if (r.delayed) ++c.second;
    }
    WeeklyProportions out;
    for (const auto& [key, c] : counts) {
        if (c.first < min_week_flights) continue;
        out.entries.push_back({key.first, key.second, c.first,
                               static_cast<double>(c.second) / static_cast<double>(c.first)});
    }
    if (out.entries.empty()) throw Error("insufficient weekly support: no week has " +
                                         std::to_string(min_week_flights) + " or more flights");
    return out;
}

inline WeeklyProportions weekly_delay_proportions(const BatchSequence& seq,
                                                  std::size_t min_week_flights = DriftConfig{}.min_week_flights) {
    if (seq.all_empty()) throw Error("weekly proportions of a sequence with no rows");
    return weekly_delay_proportions(seq.rows(), min_week_flights);
}

struct DriftDecision {
    Detector detector = Detector::mean;
    bool normal_current = false;
    bool normal_previous = false;
    std::optional<stats::TestResult> mean_test;
    std::optional<stats::TestResult> variance_test;
    bool drift = false;
    /// Set when a test failed and the decision fell back to drift = true.
    std::optional<std::string> error;
};

/// A proportion vector counts as normal when neither Shapiro-Wilk nor KS rejects.
inline bool looks_normal(std::span<const double> values, double alpha) {
    return !stats::shapiro_wilk(values, alpha).reject && !stats::ks_normality(values, alpha).reject;
}

/// Compares two proportion vectors. Parametric tests (t, F) when both are
/// normal, otherwise rank-sum and Levene. Test errors propagate.
inline DriftDecision detect(Detector detector, const WeeklyProportions& current, const WeeklyProportions& previous,
                            const DriftConfig& cfg = {}) {
    const auto a = current.values();
    const auto b = previous.values();
    if (a.size() < 4 || b.size() < 4) throw Error("drift detection needs at least 4 weekly proportions per side");

    DriftDecision d;
    d.detector = detector;
    d.normal_current = looks_normal(a, cfg.alpha);
    d.normal_previous = looks_normal(b, cfg.alpha);
    const bool parametric = d.normal_current && d.normal_previous;

    if (detector != Detector::variance)
        d.mean_test = parametric ? stats::welch_t(a, b, cfg.alpha, cfg.t_variant)
                                 : stats::wilcoxon_rank_sum(a, b, cfg.alpha);
    if (detector != Detector::mean)
        d.variance_test = parametric ? stats::f_variance(a, b, cfg.alpha)
                                     : stats::levene(a, b, cfg.alpha, cfg.levene_center);

    const bool mean_drift = d.mean_test && d.mean_test->reject;
    const bool variance_drift = d.variance_test && d.variance_test->reject;
    d.drift = mean_drift || variance_drift;
    return d;
}

struct DriftAction {
    bool train = false;
    /// Present when a detector was consulted.
    std::optional<DriftDecision> decision;
};

/// Whether to retrain at this step. `previous` is the sequence lagged one
/// position, absent when it would underflow the stream. Active strategies
/// always train at the first step, where no model exists yet.
inline DriftAction act_drift(Detector detector, Strategy strategy, const BatchSequence& current,
                             const BatchSequence* previous, bool first_step, const DriftConfig& cfg = {}) {
    switch (strategy) {
        case Strategy::baseline: return {first_step, std::nullopt};
        case Strategy::passive: return {true, std::nullopt};
        case Strategy::active: break;
    }
    if (first_step || previous == nullptr) return {true, std::nullopt};
    try {
        auto decision = detect(detector, weekly_delay_proportions(current, cfg.min_week_flights),
                               weekly_delay_proportions(*previous, cfg.min_week_flights), cfg);
        const bool train = decision.drift;
        return {train, std::move(decision)};
    } catch (const Error& e) {
        log_warning(std::string("drift detection failed, retraining: ") + e.what());
        DriftDecision d;
        d.detector = detector;
        d.drift = true;
        d.error = e.what();
        return {true, std::move(d)};
    }
}

}  // namespace driftflow
