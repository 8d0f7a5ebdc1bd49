#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "driftflow/driftflow.hpp"

using namespace driftflow;

namespace {

std::pair<int, int> parse_k_range(const std::string& s) {
    const auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            const int k = std::stoi(s);
            return {k, k};
        }
        return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
    } catch (const std::exception&) {
        throw Error("k range must look like 5..45, got '" + s + "'");
    }
}

std::string fmt(double v, const char* f = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

int cmd_preprocess(const std::string& raw, const std::string& airport, const std::string& states_path,
                   const std::string& out, int threshold, int max_hours) {
    PreprocessConfig cfg;
    if (airport != kSystemScale) cfg.airport_filter = airport;
    cfg.delay_threshold_minutes = threshold;
    cfg.max_delay_hours = max_hours;
    cfg.validate();
    const auto loaded = load_flights(raw);
    for (const auto& m : loaded.malformed)
        std::cerr << "malformed line " << m.line_number << ": " << m.reason << '\n';
    const auto states = load_airport_states(states_path);
    PreprocessReport report;
    const auto rows = preprocess(loaded, cfg, states, &report);
    write_rows(out, rows);
    std::cout << "records " << loaded.records.size() << ", malformed " << loaded.malformed.size() << '\n'
              << "kept " << report.kept << ", international " << report.international << ", outside airports "
              << report.outside_airports << ", missing departure " << report.missing_departure
              << ", excessive delay " << report.excessive_delay << ", unknown state " << report.unknown_state << '\n'
              << "wrote " << rows.rows.size() << " rows to " << out << '\n';
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& output_dir) {
    auto loaded = load_runner_config(config_path);
    if (!output_dir.empty()) loaded.runner.output_dir = output_dir;
    RowSet data;
    if (loaded.dataset) {
        data = read_rows(loaded.dataset->string());
    } else if (loaded.synthetic_spec) {
        data = generate_stream(load_synthetic_spec(loaded.synthetic_spec->string())).rows;
    } else {
        throw Error("config names neither a dataset nor a synthetic spec");
    }
    const auto s = drift_analysis(data, loaded.runner);
    std::cout << "cells " << s.cells_total << ": " << s.cells_already_done << " already done, " << s.cells_run
              << " run, " << s.cells_failed << " failed; " << s.rows_appended << " rows appended to "
              << results_path(loaded.runner).string() << '\n';
    return s.cells_failed > 0 ? 3 : 0;
}

int cmd_topk(const std::string& results, const std::string& k_range, const std::string& metric,
             const std::string& scale) {
    const auto rows = import_results(results);
    const auto [lo, hi] = parse_k_range(k_range);
    std::optional<std::string> filter;
    if (!scale.empty()) filter = scale;
    const auto rep = topk_frequency(rows, lo, hi, parse_rank_metric(metric), filter);
    std::cout << "# ranking by median " << to_string(rep.metric) << '\n' << "rank,combination,score,rows\n";
    for (std::size_t i = 0; i < rep.ranked.size(); ++i)
        std::cout << i + 1 << ',' << rep.ranked[i].label() << ',' << fmt(rep.ranked[i].score) << ','
                  << rep.ranked[i].rows << '\n';
    std::cout << "\n# frequencies for k in " << rep.k_first << ".." << rep.k_last << '\n'
              << "k,view,category,count,frequency\n";
    for (const auto& f : rep.frequencies)
        std::cout << f.k << ',' << f.view << ',' << f.category << ',' << f.count << ',' << fmt(f.frequency) << '\n';
    return 0;
}

int cmd_drifts(const std::string& results) {
    const auto table = count_drifts(import_results(results));
    std::cout << "scale,detector,bss,drifts,transitions\n";
    for (const auto& r : table.rows)
        std::cout << r.scale << ',' << r.detector << ',' << r.bss << ',' << r.drifts << ',' << r.transitions << '\n';
    if (!table.airport_summary.empty()) {
        std::cout << "\n# airport scales\ndetector,bss,airports,mean,sd\n";
        for (const auto& s : table.airport_summary)
            std::cout << s.detector << ',' << s.bss << ',' << s.airports << ',' << fmt(s.mean, "%.2f") << ','
                      << fmt(s.sd, "%.2f") << '\n';
    }
    return 0;
}

int cmd_correlate(const std::string& results, bool spearman) {
    const auto rep = correlate_drifts_performance(import_results(results), {spearman});
    std::cout << "# " << (rep.spearman ? "spearman" : "pearson") << " over " << rep.groups.size() << " groups\n";
    for (const auto& n : rep.notes) std::cout << "# " << n << '\n';
    std::cout << "x,y,r,p\n";
    for (std::size_t i = 0; i < rep.columns.size(); ++i)
        for (std::size_t j = 0; j < rep.columns.size(); ++j)
            std::cout << rep.columns[i] << ',' << rep.columns[j] << ',' << fmt(rep.matrix[i][j].r) << ','
                      << fmt(rep.matrix[i][j].p_value) << '\n';
    return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out, const std::string& truth_path) {
    const auto stream = generate_stream(load_synthetic_spec(spec_path));
    write_rows(out, stream.rows);
    if (!truth_path.empty()) {
        nlohmann::json truth = nlohmann::json::array();
        for (const auto& e : stream.truth) truth.push_back(to_json(e));
        std::ofstream t(truth_path);
        if (!t) throw Error("cannot write " + truth_path);
        t << truth.dump(2) << '\n';
    }
    std::cout << "wrote " << stream.rows.rows.size() << " rows to " << out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"driftflow: yearly batch drift detection and retraining experiments"};
    app.set_version_flag("--version", std::string(DRIFTFLOW_VERSION));
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Suppress info log messages");

    std::string raw, airport = std::string(kSystemScale), states = std::string(DRIFTFLOW_DATA_DIR) + "/airport_states.csv",
                rows_out;
    int threshold = 15, max_hours = 24;
    auto* pre = app.add_subcommand("preprocess", "Turn a raw flight CSV into a row file");
    pre->add_option("raw", raw, "Raw flight CSV")->required()->check(CLI::ExistingFile);
    pre->add_option("--airport", airport, "Origin ICAO code, or SB for every top airport");
    pre->add_option("--states", states, "Airport to state mapping CSV")->check(CLI::ExistingFile);
    pre->add_option("--threshold", threshold, "Delay threshold in minutes");
    pre->add_option("--max-delay-hours", max_hours, "Rows delayed longer than this are dropped");
    pre->add_option("-o,--output", rows_out, "Row file to write")->required();

    std::string config, output_dir;
    auto* run = app.add_subcommand("run", "Run an experiment grid");
    run->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
    run->add_option("--output-dir", output_dir, "Overrides the config's output_dir");

    auto* analyze = app.add_subcommand("analyze", "Analyses over a results table");
    analyze->require_subcommand(1);
    std::string results, k_range = "5..45", metric = "f1", scale;
    bool spearman = false;
    auto* topk = analyze->add_subcommand("topk", "Category frequencies among the top-k combinations");
    topk->add_option("--results", results, "Results CSV")->required()->check(CLI::ExistingFile);
    topk->add_option("--k", k_range, "k or first..last");
    topk->add_option("--metric", metric, "f1, accuracy, precision or recall");
    topk->add_option("--scale", scale, "Only rank combinations of this scale");
    auto* drifts = analyze->add_subcommand("drifts", "Drift counts per scale, detector and b");
    drifts->add_option("--results", results, "Results CSV")->required()->check(CLI::ExistingFile);
    auto* correlate = analyze->add_subcommand("correlate", "Correlate drift counts with performance");
    correlate->add_option("--results", results, "Results CSV")->required()->check(CLI::ExistingFile);
    correlate->add_flag("--spearman", spearman, "Rank correlation instead of Pearson");

    std::string spec_path, truth_path;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic row file");
    synth->add_option("--spec", spec_path, "Synthetic spec JSON")->required()->check(CLI::ExistingFile);
    synth->add_option("-o,--output", rows_out, "Row file to write")->required();
    synth->add_option("--truth", truth_path, "Write the drift events as JSON");

    CLI11_PARSE(app, argc, argv);
    if (quiet)
        set_log_sink([](LogLevel level, const std::string& msg) {
            if (level == LogLevel::warning) std::cerr << "[warn] " << msg << '\n';
        });

    try {
        if (*pre) return cmd_preprocess(raw, airport, states, rows_out, threshold, max_hours);
        if (*run) return cmd_run(config, output_dir);
        if (*topk) return cmd_topk(results, k_range, metric, scale);
        if (*drifts) return cmd_drifts(results);
        if (*correlate) return cmd_correlate(results, spearman);
        if (*synth) return cmd_synth(spec_path, rows_out, truth_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
