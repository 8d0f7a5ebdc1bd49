#pragma once

// Post-sweep analyses over a result table: drift counts, top-k frequencies
// and drift/performance correlations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftflow/log.hpp"
#include "driftflow/runner/results.hpp"
#include "driftflow/stats/tests.hpp"

namespace driftflow {

// ---------------------------------------------------------------------------
// Drift counts

struct DriftCountRow {
    std::string scale;
    std::string detector;
    int bss = 1;
    int drifts = 0;
    int transitions = 0;  // steps with a recorded decision
};

struct DriftSummaryRow {
    std::string detector;
    int bss = 1;
    std::size_t airports = 0;
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation; 0 for a single airport
};

struct DriftCountTable {
    std::vector<DriftCountRow> rows;
    std::vector<DriftSummaryRow> airport_summary;  // airport scales only
};

/// Detection does not depend on the classifier or replicate, so each
/// (scale, detector, b, t) is counted once.
inline DriftCountTable count_drifts(std::span<const ResultRow> results) {
    struct Key {
        std::string scale, detector;
        int bss;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, std::map<int, bool>> decisions;
    for (const auto& r : results) {
        if (r.strategy != to_string(Strategy::active) || r.status != RowStatus::ok || !r.drift) continue;
        auto& slot = decisions[{r.scale, r.detector, r.bss}][r.t];
        slot = slot || *r.drift;
    }
    DriftCountTable table;
    std::map<std::pair<std::string, int>, std::vector<double>> per_airport;
    for (const auto& [k, steps] : decisions) {
        DriftCountRow row{k.scale, k.detector, k.bss, 0, static_cast<int>(steps.size())};
        for (const auto& [_, d] : steps) row.drifts += d ? 1 : 0;
        table.rows.push_back(row);
        if (k.scale != kSystemScale) per_airport[{k.detector, k.bss}].push_back(row.drifts);
    }
    for (const auto& [k, v] : per_airport) {
        DriftSummaryRow s{k.first, k.second, v.size(), 0.0, 0.0};
        for (double x : v) s.mean += x;
        s.mean /= static_cast<double>(v.size());
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - s.mean) * (x - s.mean);
            s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
        table.airport_summary.push_back(s);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Top-k

enum class RankMetric { f1, accuracy, precision, recall };

inline RankMetric parse_rank_metric(std::string_view s) {
    if (s == "f1") return RankMetric::f1;
    if (s == "accuracy") return RankMetric::accuracy;
    if (s == "precision") return RankMetric::precision;
    if (s == "recall") return RankMetric::recall;
    throw Error("rank metric must be one of f1, accuracy, precision, recall; got '" + std::string(s) + "'");
}

inline std::string_view to_string(RankMetric m) {
    switch (m) {
        case RankMetric::f1: return "f1";
        case RankMetric::accuracy: return "accuracy";
        case RankMetric::precision: return "precision";
        case RankMetric::recall: return "recall";
    }
    return "?";
}

inline std::optional<double> metric_of(const ResultRow& r, RankMetric m) {
    switch (m) {
        case RankMetric::f1: return r.f1;
        case RankMetric::accuracy: return r.accuracy;
        case RankMetric::precision: return r.precision;
        case RankMetric::recall: return r.recall;
    }
    return std::nullopt;
}

/// Median where undefined values sort below every defined one. Empty when the
/// median itself falls on an undefined value.
inline std::optional<double> median_undefined_low(std::vector<std::optional<double>> v) {
    if (v.empty()) return std::nullopt;
    std::vector<double> x;
    x.reserve(v.size());
    for (const auto& o : v) x.push_back(o ? *o : -std::numeric_limits<double>::infinity());
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    const double m = n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
    if (std::isinf(m)) return std::nullopt;
    return m;
}

struct Combination {
    std::string scale;
    std::string strategy;
    std::string detector;
    std::string classifier;
    int bss = 1;
    std::optional<double> score;
    std::size_t rows = 0;

    std::string handler() const { return detector == kNotApplicable ? strategy : strategy + "-" + detector; }

    std::string label() const {
        return scale + "|" + handler() + "|" + classifier + "|b" + std::to_string(bss);
    }

    std::string category(std::string_view view) const {
        if (view == "strategy") return strategy;
        if (view == "handler") return handler();
        if (view == "bss") return std::to_string(bss);
        if (view == "classifier") return classifier;
        throw Error("unknown top-k view '" + std::string(view) + "'");
    }
};

inline const std::vector<std::string>& topk_views() {
    static const std::vector<std::string> v{"strategy", "handler", "bss", "classifier"};
    return v;
}

struct TopKFrequency {
    int k = 0;
    std::string view;
    std::string category;
    std::size_t count = 0;
    double frequency = 0.0;  // count / k
};

struct TopKReport {
    RankMetric metric = RankMetric::f1;
    std::vector<Combination> ranked;  // best first
    int k_first = 0;
    int k_last = 0;
    std::vector<TopKFrequency> frequencies;
};

/// Ranks combinations by median metric (undefined last, then by label) and
/// counts each category among the best k, for every k in [k_first, k_last].
inline TopKReport topk_frequency(std::span<const ResultRow> results, int k_first, int k_last,
                                 RankMetric metric = RankMetric::f1, std::optional<std::string> scale = std::nullopt) {
    if (k_first < 1 || k_last < k_first) throw Error("top-k range must satisfy 1 <= first <= last");
    std::map<std::string, Combination> combos;
    std::map<std::string, std::vector<std::optional<double>>> values;
    for (const auto& r : results) {
        if (r.status != RowStatus::ok) continue;
        if (scale && r.scale != *scale) continue;
        Combination c{r.scale, r.strategy, r.detector, r.classifier, r.bss, std::nullopt, 0};
        const auto label = c.label();
        auto [it, _] = combos.emplace(label, c);
        ++it->second.rows;
        values[label].push_back(metric_of(r, metric));
    }
    if (combos.empty()) throw Error("no completed result rows to rank");

    TopKReport report;
    report.metric = metric;
    for (auto& [label, c] : combos) {
        c.score = median_undefined_low(values[label]);
        report.ranked.push_back(c);
    }
    std::sort(report.ranked.begin(), report.ranked.end(), [](const Combination& a, const Combination& b) {
        if (a.score.has_value() != b.score.has_value()) return a.score.has_value();
        if (a.score && *a.score != *b.score) return *a.score > *b.score;
        return a.label() < b.label();
    });

    const int n = static_cast<int>(report.ranked.size());
    if (k_last > n) {
        log_warning("top-k upper bound " + std::to_string(k_last) + " exceeds " + std::to_string(n) +
                    " combinations; capped");
        k_last = n;
    }
    k_first = std::min(k_first, k_last);
    report.k_first = k_first;
    report.k_last = k_last;

    for (const auto& view : topk_views()) {
        std::set<std::string> categories;
        for (const auto& c : report.ranked) categories.insert(c.category(view));
        for (int k = k_first; k <= k_last; ++k) {
            std::map<std::string, std::size_t> counts;
            for (int i = 0; i < k; ++i) ++counts[report.ranked[static_cast<std::size_t>(i)].category(view)];
            for (const auto& cat : categories)
                report.frequencies.push_back(
                    {k, view, cat, counts[cat], static_cast<double>(counts[cat]) / static_cast<double>(k)});
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Correlation

struct CorrelationOptions {
    bool spearman = false;
};

struct CorrelationReport {
    std::vector<std::string> groups;   // "scale|b"
    std::vector<std::string> columns;  // retained columns
    std::vector<std::vector<double>> data;  // data[column][group]
    std::vector<std::vector<stats::Correlation>> matrix;
    std::vector<std::string> notes;
    bool spearman = false;
};

/// Groups active rows by (scale, b). Columns are the drift count of each
/// detector and the median of each metric over the group's rows. Constant or
/// incomplete columns are dropped with a note.
inline CorrelationReport correlate_drifts_performance(std::span<const ResultRow> results,
                                                      const CorrelationOptions& opts = {}) {
    const auto active = to_string(Strategy::active);
    std::map<std::string, std::vector<const ResultRow*>> groups;
    for (const auto& r : results)
        if (r.strategy == active && r.status == RowStatus::ok) groups[r.scale + "|b" + std::to_string(r.bss)].push_back(&r);
    if (groups.size() < 3)
        throw Error("correlation needs active results in at least 3 (scale, b) groups; found " +
                    std::to_string(groups.size()));

    const auto counts = count_drifts(results);
    std::map<std::string, int> drift_of;  // "scale|b|detector"
    for (const auto& c : counts.rows) drift_of[c.scale + "|b" + std::to_string(c.bss) + "|" + c.detector] = c.drifts;

    CorrelationReport rep;
    rep.spearman = opts.spearman;
    for (const auto& [g, _] : groups) rep.groups.push_back(g);

    std::vector<std::pair<std::string, std::vector<std::optional<double>>>> candidates;
    for (auto d : {Detector::mean, Detector::variance, Detector::mean_variance}) {
        std::vector<std::optional<double>> col;
        for (const auto& g : rep.groups) {
            auto it = drift_of.find(g + "|" + std::string(to_string(d)));
            col.push_back(it == drift_of.end() ? std::nullopt : std::optional<double>(it->second));
        }
        candidates.emplace_back("drifts_" + std::string(to_string(d)), std::move(col));
    }
    for (auto m : {RankMetric::accuracy, RankMetric::precision, RankMetric::recall, RankMetric::f1}) {
        std::vector<std::optional<double>> col;
        for (const auto& g : rep.groups) {
            std::vector<double> v;
            for (const auto* r : groups[g])
                if (auto x = metric_of(*r, m)) v.push_back(*x);
            if (v.empty()) {
                col.push_back(std::nullopt);
                continue;
            }
            std::sort(v.begin(), v.end());
            const std::size_t n = v.size();
            col.push_back(n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]));
        }
        candidates.emplace_back(std::string(to_string(m)), std::move(col));
    }

    for (auto& [name, col] : candidates) {
        if (std::any_of(col.begin(), col.end(), [](const auto& x) { return !x; })) {
            rep.notes.push_back(name + " excluded: undefined in some group");
            continue;
        }
        std::vector<double> v;
        for (const auto& x : col) v.push_back(*x);
        if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) {
            rep.notes.push_back(name + " excluded: constant across groups");
            continue;
        }
        rep.columns.push_back(name);
        rep.data.push_back(std::move(v));
    }

    const std::size_t c = rep.columns.size();
    rep.matrix.assign(c, std::vector<stats::Correlation>(c));
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            if (i == j) {
                rep.matrix[i][j] = {1.0, 0.0, rep.groups.size()};
                continue;
            }
            rep.matrix[i][j] = opts.spearman ? stats::spearman_correlation(rep.data[i], rep.data[j])
                                             : stats::pearson_correlation(rep.data[i], rep.data[j]);
        }
    return rep;
}

}  // namespace driftflow
