#pragma once

// Experiment sweep over the cross-product of scales, classifiers, window
// sizes, detectors, strategies and replicates, with an append-only results
// table that can be resumed after an interruption.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftflow/learn/grid_search.hpp"
#include "driftflow/runner/results.hpp"
#include "driftflow/strategy.hpp"

#ifndef DRIFTFLOW_VERSION
#define DRIFTFLOW_VERSION "0.1.0"
#endif

namespace driftflow {

struct ExperimentGrid {
    std::vector<std::string> scales{std::string(kSystemScale)};
    std::vector<ModelKind> classifiers{ModelKind::nb, ModelKind::mlp, ModelKind::rf};
    YearRange years{2003, 2017};
    std::vector<int> bss{1, 2, 3};
    std::vector<Detector> detectors{Detector::mean, Detector::variance, Detector::mean_variance};
    std::vector<Strategy> strategies{Strategy::baseline, Strategy::passive, Strategy::active};
    int replicates = 5;

    void validate() const {
        if (scales.empty() || classifiers.empty() || bss.empty() || strategies.empty())
            throw Error("experiment grid has an empty axis");
        if (years.first > years.last) throw Error("experiment grid year range is reversed");
        if (replicates < 1) throw Error("experiment grid needs at least one replicate");
        for (int b : bss)
            if (b < 1) throw Error("window sizes must be positive");
        if (std::find(strategies.begin(), strategies.end(), Strategy::active) != strategies.end() && detectors.empty())
            throw Error("active strategy requested without detectors");
    }
};

struct GridCell {
    std::string scale;
    ModelKind kind = ModelKind::nb;
    int bss = 1;
    std::optional<Detector> detector;
    Strategy strategy = Strategy::baseline;
    int replicate = 0;

    StoreKey store_key() const { return {scale, kind, detector, strategy, bss, replicate}; }

    /// Same format as `ResultRow::cell_key`.
    std::string key() const {
        return scale + "|" + std::string(to_string(kind)) + "|" + std::to_string(bss) + "|" +
               (detector ? std::string(to_string(*detector)) : std::string(kNotApplicable)) + "|" +
               std::string(to_string(strategy)) + "|" + std::to_string(replicate);
    }
};

/// Baseline and passive cells appear once, without a detector. Naive Bayes has one replicate.
inline std::vector<GridCell> enumerate_cells(const ExperimentGrid& g) {
    std::vector<GridCell> cells;
    for (const auto& scale : g.scales)
        for (auto kind : g.classifiers)
            for (int b : g.bss)
                for (auto strategy : g.strategies) {
                    std::vector<std::optional<Detector>> dets;
                    if (strategy == Strategy::active)
                        for (auto d : g.detectors) dets.emplace_back(d);
                    else
                        dets.emplace_back(std::nullopt);
                    for (const auto& d : dets)
                        for (int r = 0; r < effective_replicates(kind, g.replicates); ++r)
                            cells.push_back({scale, kind, b, d, strategy, r});
                }
    return cells;
}

/// Closed form of `enumerate_cells(g).size()`.
inline std::size_t analytic_cell_count(const ExperimentGrid& g) {
    std::size_t handlers = 0;
    for (auto s : g.strategies) handlers += s == Strategy::active ? g.detectors.size() : 1;
    std::size_t runs = 0;
    for (auto k : g.classifiers) runs += static_cast<std::size_t>(effective_replicates(k, g.replicates));
    return g.scales.size() * g.bss.size() * handlers * runs;
}

struct TuningConfig {
    bool enabled = true;
    std::size_t folds = 10;
    std::size_t max_rows = 0;  // 0 = every row of the tuning batch
};

struct RunnerConfig {
    ExperimentGrid grid;
    DriftConfig drift;
    std::uint64_t base_seed = 1;
    std::size_t threads = 1;
    TuningConfig tuning;
    /// Fixed hyperparameters; a classifier listed here is not tuned.
    std::map<ModelKind, Hyperparameters> hyperparameters;
    bool global_normalization = false;
    std::optional<std::filesystem::path> model_store;
    std::filesystem::path output_dir{"results"};
    /// Stop after this many newly run cells.
    std::optional<std::size_t> max_cells;
};

struct SweepSummary {
    std::size_t cells_total = 0;
    std::size_t cells_already_done = 0;
    std::size_t cells_run = 0;
    std::size_t cells_failed = 0;
    std::size_t rows_appended = 0;
};

inline std::filesystem::path results_path(const RunnerConfig& c) { return c.output_dir / "results.csv"; }
inline std::filesystem::path done_path(const RunnerConfig& c) { return c.output_dir / "cells.done"; }
inline std::filesystem::path manifest_path(const RunnerConfig& c) { return c.output_dir / "manifest.json"; }

// ---------------------------------------------------------------------------
// Config files

inline nlohmann::json to_json(const ExperimentGrid& g) {
    using nlohmann::json;
    json cls = json::array(), det = json::array(), str = json::array();
    for (auto k : g.classifiers) cls.push_back(to_string(k));
    for (auto d : g.detectors) det.push_back(to_string(d));
    for (auto s : g.strategies) str.push_back(to_string(s));
    return {{"scales", g.scales},   {"classifiers", cls}, {"years", {g.years.first, g.years.last}},
            {"bss", g.bss},         {"detectors", det},   {"strategies", str},
            {"replicates", g.replicates}};
}

inline ExperimentGrid grid_from_json(const nlohmann::json& j) {
    ExperimentGrid g;
    if (j.contains("scales")) g.scales = j.at("scales").get<std::vector<std::string>>();
    if (j.contains("classifiers")) {
        g.classifiers.clear();
        for (const auto& s : j.at("classifiers")) g.classifiers.push_back(parse_model_kind(s.get<std::string>()));
    }
    if (j.contains("years")) {
        const auto y = j.at("years").get<std::vector<int>>();
        if (y.size() != 2) throw FormatError("years must be [first, last]");
        g.years = {y[0], y[1]};
    }
    if (j.contains("bss")) g.bss = j.at("bss").get<std::vector<int>>();
    if (j.contains("detectors")) {
        g.detectors.clear();
        for (const auto& s : j.at("detectors")) g.detectors.push_back(parse_detector(s.get<std::string>()));
    }
    if (j.contains("strategies")) {
        g.strategies.clear();
        for (const auto& s : j.at("strategies")) g.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    g.replicates = j.value("replicates", g.replicates);
    return g;
}

/// Runner settings from a JSON config. Relative paths resolve against `base_dir`.
/// Returns the config and the dataset path (`dataset` key).
struct LoadedConfig {
    RunnerConfig runner;
    std::optional<std::filesystem::path> dataset;
    std::optional<std::filesystem::path> synthetic_spec;
};

inline LoadedConfig runner_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    static const std::set<std::string> known{"dataset",  "synthetic",  "output_dir",       "grid",
                                             "alpha",    "min_week_flights", "t_test", "levene_center",
                                             "seed",     "threads",    "tuning",          "hyperparameters",
                                             "normalization", "model_store", "max_cells"};
    if (!j.is_object()) throw FormatError("config must be a JSON object");
    for (const auto& [k, _] : j.items())
        if (!known.count(k)) throw FormatError("unknown config key '" + k + "'");
    const auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    LoadedConfig out;
    auto& c = out.runner;
    try {
        if (j.contains("dataset")) out.dataset = resolve(j.at("dataset").get<std::string>());
        if (j.contains("synthetic")) out.synthetic_spec = resolve(j.at("synthetic").get<std::string>());
        if (out.dataset && out.synthetic_spec) throw FormatError("config sets both dataset and synthetic");
        if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
        if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"));
        c.drift.alpha = j.value("alpha", c.drift.alpha);
        c.drift.min_week_flights = j.value("min_week_flights", c.drift.min_week_flights);
        if (j.contains("t_test")) {
            const auto v = j.at("t_test").get<std::string>();
            if (v == "welch") c.drift.t_variant = stats::TTestVariant::welch;
            else if (v == "pooled") c.drift.t_variant = stats::TTestVariant::pooled;
            else throw FormatError("t_test must be welch or pooled");
        }
        if (j.contains("levene_center")) {
            const auto v = j.at("levene_center").get<std::string>();
            if (v == "mean") c.drift.levene_center = stats::LeveneCenter::mean;
            else if (v == "median") c.drift.levene_center = stats::LeveneCenter::median;
            else throw FormatError("levene_center must be mean or median");
        }
        c.base_seed = j.value("seed", c.base_seed);
        c.threads = j.value("threads", c.threads);
        if (j.contains("tuning")) {
            const auto& t = j.at("tuning");
            c.tuning.enabled = t.value("enabled", c.tuning.enabled);
            c.tuning.folds = t.value("folds", c.tuning.folds);
            c.tuning.max_rows = t.value("max_rows", c.tuning.max_rows);
        }
        if (j.contains("hyperparameters"))
            for (const auto& [k, v] : j.at("hyperparameters").items())
                c.hyperparameters[parse_model_kind(k)] = hyperparameters_from_json(v);
        if (j.contains("normalization")) {
            const auto v = j.at("normalization").get<std::string>();
            if (v != "per_window" && v != "global") throw FormatError("normalization must be per_window or global");
            c.global_normalization = v == "global";
        }
        if (j.contains("model_store")) c.model_store = resolve(j.at("model_store").get<std::string>());
        if (j.contains("max_cells")) c.max_cells = j.at("max_cells").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed config: ") + e.what());
    }
    c.grid.validate();
    return out;
}

inline LoadedConfig load_runner_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("config " + path.string() + " is not JSON: " + e.what());
    }
    return runner_config_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Sweep

namespace detail {

/// Scale stream: every row for the system scale, one origin otherwise. Spans
/// the data's first year through the last test year.
inline BatchStream scale_stream(const RowSet& data, const std::string& scale, const ExperimentGrid& g,
                                std::vector<FlightFeatureRow>& scale_rows) {
    scale_rows.clear();
    for (const auto& r : data.rows)
        if (scale == kSystemScale || r.origin_airport == scale) scale_rows.push_back(r);
    if (scale_rows.empty()) throw Error("no rows for scale " + scale);
    int first = scale_rows.front().year, last = first;
    for (const auto& r : scale_rows) {
        first = std::min(first, r.year);
        last = std::max(last, r.year);
    }
    first = std::min(first, g.years.first);
    last = std::max(last, g.years.last + 1);
    return partition_by_year(scale_rows, {first, last}).batches;
}

inline nlohmann::json manifest_identity(const RunnerConfig& c) {
    nlohmann::json fixed = nlohmann::json::object();
    for (const auto& [k, h] : c.hyperparameters) fixed[std::string(to_string(k))] = to_json(h);
    return {{"grid", to_json(c.grid)},
            {"seed", c.base_seed},
            {"alpha", c.drift.alpha},
            {"min_week_flights", c.drift.min_week_flights},
            {"t_test", c.drift.t_variant == stats::TTestVariant::welch ? "welch" : "pooled"},
            {"levene_center", c.drift.levene_center == stats::LeveneCenter::mean ? "mean" : "median"},
            {"normalization", c.global_normalization ? "global" : "per_window"},
            {"tuning", {{"enabled", c.tuning.enabled}, {"folds", c.tuning.folds}, {"max_rows", c.tuning.max_rows}}},
            {"hyperparameters", fixed}};
}

inline void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot write " + tmp.string());
        out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

/// Drops a trailing partial line left by an interrupted append.
inline void repair_tail(const std::filesystem::path& path) {
    std::string content;
    {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        content = ss.str();
    }
    if (content.empty() || content.back() == '\n') return;
    const auto cut = content.rfind('\n');
    content.resize(cut == std::string::npos ? 0 : cut + 1);
    log_warning("dropping partial trailing line of " + path.string());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::vector<FlightFeatureRow> tuning_rows(const BatchStream& stream, int year, std::size_t max_rows,
                                                 std::uint64_t seed) {
    const int pos = stream_position(stream, year);
    if (pos < 0 || stream[static_cast<std::size_t>(pos)]->empty())
        throw Error("tuning batch " + std::to_string(year) + " is empty");
    auto rows = stream[static_cast<std::size_t>(pos)]->rows;
    if (max_rows > 0 && rows.size() > max_rows) {
        std::mt19937_64 rng(seed);
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(max_rows);
    }
    return rows;
}

}  // namespace detail

/// Runs every grid cell not yet recorded in `cfg.output_dir` and appends its
/// rows to results.csv. A failed cell is written as a single error row.
inline SweepSummary drift_analysis(const RowSet& data, const RunnerConfig& cfg) {
    cfg.grid.validate();
    std::filesystem::create_directories(cfg.output_dir);

    const auto identity = detail::manifest_identity(cfg);
    nlohmann::json manifest;
    if (std::filesystem::exists(manifest_path(cfg))) {
        std::ifstream in(manifest_path(cfg));
        try {
            in >> manifest;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("corrupt results manifest: " + std::string(e.what()));
        }
        if (manifest.value("identity", nlohmann::json()) != identity)
            throw Error("results directory " + cfg.output_dir.string() + " belongs to a different experiment");
    } else {
        manifest = {{"software", "driftflow"}, {"version", DRIFTFLOW_VERSION}, {"identity", identity},
                    {"tuned", nlohmann::json::object()}};
    }

    std::set<std::string> existing_rows;
    if (std::filesystem::exists(results_path(cfg))) {
        detail::repair_tail(results_path(cfg));
        for (const auto& r : import_results(results_path(cfg).string())) existing_rows.insert(r.key());
    } else {
        std::ofstream out(results_path(cfg));
        if (!out) throw Error("cannot write " + results_path(cfg).string());
        write_result_header(out);
    }
    std::set<std::string> done;
    if (std::filesystem::exists(done_path(cfg))) {
        detail::repair_tail(done_path(cfg));
        std::ifstream in(done_path(cfg));
        for (std::string line; std::getline(in, line);)
            if (!line.empty()) done.insert(line);
    }

    SweepSummary summary;
    const auto cells = enumerate_cells(cfg.grid);
    summary.cells_total = cells.size();
    std::vector<GridCell> pending;
    for (const auto& c : cells) {
        if (done.count(c.key())) ++summary.cells_already_done;
        else pending.push_back(c);
    }
    if (cfg.max_cells && pending.size() > *cfg.max_cells) pending.resize(*cfg.max_cells);

    // Streams, normalizers and hyperparameters per scale and classifier, for pending cells only.
    std::map<std::string, BatchStream> streams;
    std::map<std::string, std::string> stream_errors;
    std::map<std::string, std::optional<Normalizer>> normalizers;
    std::map<std::pair<std::string, ModelKind>, Hyperparameters> hyper;
    std::map<std::pair<std::string, ModelKind>, std::string> hyper_errors;
    for (const auto& c : pending) {
        if (!streams.count(c.scale) && !stream_errors.count(c.scale)) {
            try {
                std::vector<FlightFeatureRow> scale_rows;
                streams[c.scale] = detail::scale_stream(data, c.scale, cfg.grid, scale_rows);
                if (cfg.global_normalization) normalizers[c.scale] = Normalizer::fit(scale_rows);
                else normalizers[c.scale] = std::nullopt;
            } catch (const Error& e) {
                stream_errors[c.scale] = e.what();
            }
        }
        const auto hk = std::make_pair(c.scale, c.kind);
        if (stream_errors.count(c.scale) || hyper.count(hk) || hyper_errors.count(hk)) continue;
        const auto name = c.scale + "/" + std::string(to_string(c.kind));
        if (auto it = cfg.hyperparameters.find(c.kind); it != cfg.hyperparameters.end()) {
            hyper[hk] = it->second;
        } else if (!cfg.tuning.enabled) {
            hyper[hk] = Hyperparameters{};
        } else {
            try {
                const auto rows = detail::tuning_rows(streams[c.scale], cfg.grid.years.first, cfg.tuning.max_rows,
                                                      cfg.base_seed);
                const auto grid = default_grid(c.kind, predictor_count(data.feature_names.size()));
                hyper[hk] = grid_search_cv(c.kind, grid, rows, cfg.tuning.folds, cfg.base_seed).best.hyper;
                log_info("tuned " + name + ": " + to_json(hyper[hk]).dump());
            } catch (const Error& e) {
                hyper_errors[hk] = std::string("tuning failed: ") + e.what();
                continue;
            }
        }
        manifest["tuned"][name] = to_json(hyper[hk]);
    }
    detail::write_json_atomic(manifest_path(cfg), manifest);

    std::unique_ptr<ModelStore> store;
    if (cfg.model_store) store = std::make_unique<ModelStore>(*cfg.model_store);

    std::mutex sink;
    std::ofstream results_out(results_path(cfg), std::ios::app);
    std::ofstream done_out(done_path(cfg), std::ios::app);
    if (!results_out || !done_out) throw Error("cannot append to results in " + cfg.output_dir.string());

    const auto run_cell = [&](const GridCell& c) -> std::vector<ResultRow> {
        const auto hk = std::make_pair(c.scale, c.kind);
        if (auto it = stream_errors.find(c.scale); it != stream_errors.end()) throw Error(it->second);
        if (auto it = hyper_errors.find(hk); it != hyper_errors.end()) throw Error(it->second);
        ModelSpec spec{c.kind, hyper.at(hk), cfg.base_seed + static_cast<std::uint64_t>(c.replicate)};
        StepOptions opts;
        opts.drift = cfg.drift;
        opts.global_normalizer = normalizers.at(c.scale);
        opts.store = store.get();
        const auto run = run_stream(streams.at(c.scale), c.bss, c.detector.value_or(Detector::mean), c.strategy, spec,
                                    cfg.grid.years, opts, c.store_key());
        if (run.steps.empty()) throw Error("no evaluable step in the year range");
        std::vector<ResultRow> rows;
        for (const auto& s : run.steps) rows.push_back(make_result_row(run.state.key, s));
        return rows;
    };

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const auto& c = pending[i];
            std::vector<ResultRow> rows;
            bool failed = false;
            try {
                rows = run_cell(c);
            } catch (const std::exception& e) {
                failed = true;
                log_warning("cell " + c.key() + " failed: " + e.what());
                ResultRow r;
                r.scale = c.scale;
                r.classifier = std::string(to_string(c.kind));
                r.bss = c.bss;
                r.detector = c.detector ? std::string(to_string(*c.detector)) : std::string(kNotApplicable);
                r.strategy = std::string(to_string(c.strategy));
                r.replicate = c.replicate;
                r.status = RowStatus::error;
                r.error = e.what();
                rows.push_back(std::move(r));
            }
            std::lock_guard lock(sink);
            for (const auto& r : rows) {
                if (!existing_rows.insert(r.key()).second) continue;
                write_result_row(results_out, r);
                ++summary.rows_appended;
            }
            results_out.flush();
            done_out << c.key() << '\n';
            done_out.flush();
            ++summary.cells_run;
            if (failed) ++summary.cells_failed;
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, pending.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (!results_out || !done_out) throw Error("failed writing results in " + cfg.output_dir.string());
    return summary;
}

}  // namespace driftflow
