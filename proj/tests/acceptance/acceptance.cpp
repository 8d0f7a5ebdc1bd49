// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "driftflow/driftflow.hpp"
#include "oracles.hpp"

using namespace driftflow;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    double seconds = 0.0;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double elapsed(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

BatchStream stream_of(const SyntheticSpec& spec) {
    return partition_by_year(generate_stream(spec).rows.rows, {spec.start_year, spec.last_year()}).batches;
}

WeeklyProportions weekly(const BatchStream& s, int pos) { return weekly_delay_proportions(batch_sequence(s, pos, 1)); }

const ModelSpec kNb{ModelKind::nb, {}, 1};

// Randomized streams shared by the bookkeeping and union checks.
std::vector<SyntheticSpec> random_specs(std::size_t count) {
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> years(5, 8), flights(20, 80), events(0, 2);
    std::uniform_real_distribution<double> rate(0.1, 0.35), shift(0.05, 0.25);
    std::bernoulli_distribution coin(0.5);
    std::vector<SyntheticSpec> out;
    for (std::size_t i = 0; i < count; ++i) {
        SyntheticSpec s;
        s.start_year = 2003;
        s.years = years(rng);
        s.flights_per_week = flights(rng);
        s.base_delay_rate = rate(rng);
        s.seed = 1000 + i;
        std::set<int> used;
        const int k = events(rng);
        for (int e = 0; e < k; ++e) {
            std::uniform_int_distribution<int> at(s.start_year + 1, s.last_year());
            const int year = at(rng);
            if (!used.insert(year).second) continue;
            if (coin(rng)) {
                const double m = shift(rng);
                s.drift_events.push_back({year, DriftKind::prior_shift, s.base_delay_rate + m < 0.9 ? m : -m, {}});
            } else {
                s.drift_events.push_back({year, DriftKind::boundary_flip, 0.0, {}});
            }
        }
        std::sort(s.drift_events.begin(), s.drift_events.end(),
                  [](const DriftEvent& a, const DriftEvent& b) { return a.at_year < b.at_year; });
        // Successive shifts must keep the rate inside (0, 1).
        double r = s.base_delay_rate;
        for (auto& e : s.drift_events)
            if (e.kind == DriftKind::prior_shift) {
                if (r + e.magnitude <= 0.05 || r + e.magnitude >= 0.9) e.magnitude = -e.magnitude;
                r += e.magnitude;
            }
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------

Outcome criterion1(const std::vector<SyntheticSpec>& specs) {
    const auto start = Clock::now();
    Outcome o;
    std::size_t runs = 0;
    for (const auto& spec : specs) {
        const auto stream = stream_of(spec);
        const YearRange years{spec.start_year, spec.last_year()};
        for (int b : {1, 2, 3}) {
            const auto base = run_stream(stream, b, Detector::mean, Strategy::baseline, kNb, years);
            const auto passive = run_stream(stream, b, Detector::mean, Strategy::passive, kNb, years);
            int steps = 0;
            for (const auto& s : passive.steps) steps += s.skipped ? 0 : 1;
            bool ok = base.state.trainings_done == 1 && passive.state.trainings_done == steps && steps > 0;
            for (auto d : {Detector::mean, Detector::variance, Detector::mean_variance}) {
                const auto active = run_stream(stream, b, d, Strategy::active, kNb, years);
                ok = ok && active.state.trainings_done == 1 + active.drift_count();
                ++runs;
            }
            runs += 2;
            if (!ok) {
                o.pass = false;
                o.detail += " seed " + std::to_string(spec.seed) + " b" + std::to_string(b) + " mismatch;";
            }
        }
    }
    o.seconds = elapsed(start);
    if (o.seconds >= 60.0) o.pass = false;
    o.detail = std::to_string(specs.size()) + " streams, " + std::to_string(runs) + " runs, " + fmt("%.1f s", o.seconds) +
               o.detail;
    return o;
}

Outcome criterion2(const std::vector<SyntheticSpec>& specs) {
    Outcome o;
    std::size_t steps = 0;
    int total_m = 0, total_v = 0, total_mv = 0;
    for (const auto& spec : specs) {
        const auto stream = stream_of(spec);
        const YearRange years{spec.start_year, spec.last_year()};
        for (int b : {1, 2}) {
            const auto m = run_stream(stream, b, Detector::mean, Strategy::active, kNb, years);
            const auto v = run_stream(stream, b, Detector::variance, Strategy::active, kNb, years);
            const auto mv = run_stream(stream, b, Detector::mean_variance, Strategy::active, kNb, years);
            for (std::size_t i = 0; i < mv.steps.size(); ++i) {
                const auto flag = [](const StepResult& s) { return s.drift && s.drift->drift; };
                if (flag(mv.steps[i]) != (flag(m.steps[i]) || flag(v.steps[i]))) {
                    o.pass = false;
                    o.detail += " step mismatch at seed " + std::to_string(spec.seed) + ";";
                }
                ++steps;
            }
            if (mv.drift_count() < std::max(m.drift_count(), v.drift_count())) o.pass = false;
            total_m += m.drift_count();
            total_v += v.drift_count();
            total_mv += mv.drift_count();
        }
    }
    o.detail = std::to_string(steps) + " steps; counts mean=" + std::to_string(total_m) +
               " variance=" + std::to_string(total_v) + " mean_variance=" + std::to_string(total_mv) + o.detail;
    return o;
}

// ---------------------------------------------------------------------------

std::vector<double> draw(std::mt19937_64& rng, std::size_t n, double mu, double sd) {
    std::normal_distribution<double> z(mu, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = z(rng);
    return v;
}

// Null table drawn with the same generator layout as the library's, computed
// with the oracle's own statistic.
std::vector<double> oracle_lilliefors_table(std::size_t n, std::uint64_t seed, std::size_t replicates) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> table(replicates), x(n);
    for (auto& t : table) {
        for (auto& v : x) v = z(rng);
        t = oracle::lilliefors_d(x);
    }
    std::sort(table.begin(), table.end());
    return table;
}

double tail_at_least(const std::vector<double>& sorted, double d) {
    return static_cast<double>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), d)) /
           static_cast<double>(sorted.size());
}

Outcome criterion3() {
    const auto start = Clock::now();
    constexpr std::size_t kPairs = 24;
    constexpr std::size_t kReplicates = 100000;
    std::mt19937_64 rng(777);
    std::uniform_int_distribution<std::size_t> small(4, 12);
    std::uniform_real_distribution<double> loc(-1.0, 1.0), scale(0.5, 2.0);
    std::map<std::string, double> worst;
    const auto note = [&](const std::string& name, double diff) { worst[name] = std::max(worst[name], diff); };

    for (std::size_t i = 0; i < kPairs; ++i) {
        const auto a = draw(rng, small(rng) + 3, loc(rng), scale(rng));
        const auto b = draw(rng, small(rng) + 3, loc(rng), scale(rng));
        note("welch", std::fabs(stats::welch_t(a, b).p_value - oracle::welch(a, b).p));
        note("f", std::fabs(stats::f_variance(a, b).p_value - oracle::f_test(a, b).p));
        std::vector<double> y(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) y[k] = 0.6 * a[k] + draw(rng, 1, 0, 1)[0];
        note("pearson", std::fabs(stats::pearson_correlation(a, y).p_value - oracle::pearson(a, y).p));

        // Small integer-valued samples so that ties occur.
        std::uniform_int_distribution<int> level(0, 6);
        std::vector<double> wa(small(rng) - 2), wb(small(rng) - 2);
        for (auto& x : wa) x = level(rng);
        for (auto& x : wb) x = level(rng) + (i % 3);
        if (wa == wb) wb[0] += 1;
        note("wilcoxon", std::fabs(stats::wilcoxon_rank_sum(wa, wb).p_value - oracle::wilcoxon_exhaustive(wa, wb)));
    }

    // Lilliefors: each sample size tabulated once by the oracle.
    double ks_independent = 0.0, ks_noise = 0.0;
    for (std::size_t n : {8u, 20u, 52u}) {
        const auto crn = oracle_lilliefors_table(n, stats::lilliefors_null_seed(n), kReplicates);
        const auto fresh = oracle_lilliefors_table(n, 0xABCDEF + n, kReplicates);
        for (int k = 0; k < 8; ++k) {
            auto x = draw(rng, n, 0.0, 1.0);
            if (k % 2) for (auto& v : x) v = std::exp(v);  // skewed half
            const double p = stats::ks_normality(x).p_value;
            const double d = oracle::lilliefors_d(x);
            note("lilliefors", std::fabs(p - tail_at_least(crn, d)));
            const double q = tail_at_least(fresh, d);
            ks_independent = std::max(ks_independent, std::fabs(p - q));
            ks_noise = std::max(ks_noise, std::sqrt(2.0 * q * (1 - q) / kReplicates));
        }
    }

    // Levene: permutation distribution of the statistic.
    double levene_stat = 0.0, f_reference = 0.0;
    for (std::size_t i = 0; i < kPairs; ++i) {
        const auto a = draw(rng, small(rng) + 8, 0.0, 1.0);
        const auto b = draw(rng, small(rng) + 8, 0.0, i % 2 ? 1.0 : 2.5);
        const auto r = stats::levene(a, b);
        levene_stat = std::max(levene_stat, std::fabs(r.statistic - oracle::levene_w(a, b)) / std::max(1.0, r.statistic));
        note("levene", std::fabs(r.p_value - oracle::levene_permutation(a, b, kReplicates, 4242 + i)));
        // Simulated F(1, N - 2) reference, scored in units of its own sampling error.
        const double d2 = static_cast<double>(a.size() + b.size() - 2);
        std::mt19937_64 frng(9000 + i);
        std::normal_distribution<double> z(0.0, 1.0);
        std::chi_squared_distribution<double> chi(d2);
        std::size_t above = 0;
        for (std::size_t k = 0; k < kReplicates; ++k) {
            const double u = z(frng);
            above += u * u / (chi(frng) / d2) >= r.statistic ? 1 : 0;
        }
        const double q = static_cast<double>(above) / kReplicates;
        const double sd = std::max(std::sqrt(q * (1 - q) / kReplicates), 1.0 / kReplicates);
        f_reference = std::max(f_reference, std::fabs(r.p_value - q) / sd);
    }

    Outcome o;
    const std::map<std::string, double> tolerance{{"welch", 1e-6},   {"f", 1e-6},          {"pearson", 1e-6},
                                                  {"wilcoxon", 1e-6}, {"lilliefors", 1e-3}, {"levene", 1e-3}};
    for (const auto& [name, tol] : tolerance) {
        const bool ok = worst[name] <= tol;
        o.pass = o.pass && ok;
        o.detail += name + (ok ? " ok" : " OUT") + fmt("(max %.2e) ", worst[name]);
    }
    o.seconds = elapsed(start);
    if (o.seconds >= 300.0) o.pass = false;
    o.detail += fmt("| levene statistic rel diff %.1e", levene_stat) +
                fmt(", levene p vs simulated F reference within %.1f MC sd", f_reference) +
                fmt("; lilliefors vs independent-seed oracle max %.2e", ks_independent) +
                fmt(" (MC sd up to %.2e)", ks_noise) + fmt("; %.1f s", o.seconds);
    return o;
}

// ---------------------------------------------------------------------------

Outcome criterion4() {
    std::map<Detector, int> hits;
    int transitions = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SyntheticSpec spec;  // 10 years, 200 flights per week, stationary
        spec.seed = seed;
        const auto stream = stream_of(spec);
        for (int pos = 1; pos < static_cast<int>(stream.size()); ++pos) {
            const auto cur = weekly(stream, pos), prev = weekly(stream, pos - 1);
            ++transitions;
            for (auto d : {Detector::mean, Detector::variance, Detector::mean_variance}) hits[d] += detect(d, cur, prev).drift;
        }
    }
    Outcome o;
    o.detail = std::to_string(transitions) + " transitions:";
    for (const auto& [d, h] : hits) {
        const double rate = static_cast<double>(h) / transitions;
        o.pass = o.pass && rate <= 0.10;
        o.detail += " " + std::string(to_string(d)) + fmt("=%.4f", rate);
    }
    return o;
}

Outcome criterion5() {
    int flagged = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SyntheticSpec spec;
        spec.start_year = 2003;
        spec.years = 3;
        spec.seed = seed;
        spec.drift_events = {{2005, DriftKind::prior_shift, 0.25, {}}};
        const auto stream = stream_of(spec);
        flagged += detect(Detector::mean, weekly(stream, 2), weekly(stream, 1)).drift;
    }
    return {flagged >= 95, std::to_string(flagged) + "/100 runs flagged at the 2004->2005 transition"};
}

// ---------------------------------------------------------------------------

struct FlipScores {
    double baseline, passive, active;
};

FlipScores flip_scores(bool with_prior_shift) {
    std::vector<double> base, passive, active;
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
        SyntheticSpec spec;
        spec.start_year = 2003;
        spec.years = 8;
        spec.seed = 500 + rep;
        spec.coefficients = {3.0, -3.0, 1.5};
        spec.drift_events = {{2007, DriftKind::boundary_flip, 0.0, {}}};
        if (with_prior_shift) spec.drift_events.push_back({2007, DriftKind::prior_shift, 0.2, {}});
        else spec.base_delay_rate = 0.3;
        const auto stream = stream_of(spec);
        const ModelSpec model{ModelKind::nb, {}, 100 + rep};
        const auto mean_f1 = [&](Strategy s) {
            const auto run = run_stream(stream, 1, Detector::mean_variance, s, model, {2003, 2009});
            double sum = 0.0;
            for (const auto& step : run.steps) sum += step.metrics->f1.value_or(0.0);
            return sum / static_cast<double>(run.steps.size());
        };
        base.push_back(mean_f1(Strategy::baseline));
        passive.push_back(mean_f1(Strategy::passive));
        active.push_back(mean_f1(Strategy::active));
    }
    const auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    return {median(base), median(passive), median(active)};
}

Outcome criterion6(double suite_seconds) {
    const auto start = Clock::now();
    const auto paired = flip_scores(true);
    const auto pure = flip_scores(false);
    Outcome o;
    o.seconds = elapsed(start);
    const double total = suite_seconds + o.seconds;
    o.pass = paired.passive - paired.baseline >= 0.05 && paired.active - paired.baseline >= 0.05 && total < 600.0;
    o.detail = fmt("flip+shift median f1 baseline=%.3f", paired.baseline) + fmt(" passive=%.3f", paired.passive) +
               fmt(" active=%.3f", paired.active) + fmt(" | flip alone baseline=%.3f", pure.baseline) +
               fmt(" passive=%.3f", pure.passive) + fmt(" active=%.3f", pure.active) +
               fmt(" | end-to-end %.1f s", total);
    return o;
}

// ---------------------------------------------------------------------------

Outcome criterion7() {
    Outcome o;
    std::size_t tables = 0;
    bool empty_rejected = false;
    for (std::uint64_t tp = 0; tp <= 5; ++tp)
        for (std::uint64_t fp = 0; fp <= 5; ++fp)
            for (std::uint64_t fn = 0; fn <= 5; ++fn)
                for (std::uint64_t tn = 0; tn <= 5; ++tn) {
                    const ConfusionCounts c{tp, fp, fn, tn};
                    if (c.total() == 0) {
                        try {
                            compute_metrics(c);
                        } catch (const Error&) {
                            empty_rejected = true;
                        }
                        continue;
                    }
                    ++tables;
                    const auto m = compute_metrics(c);
                    const double T = tp, F = fp, N = fn, R = tn;
                    bool ok = m.accuracy == (T + R) / (T + F + N + R);
                    ok = ok && m.precision.has_value() == (tp + fp > 0) && m.recall.has_value() == (tp + fn > 0);
                    if (m.precision) ok = ok && *m.precision == T / (T + F);
                    if (m.recall) ok = ok && *m.recall == T / (T + N);
                    ok = ok && m.f1.has_value() == (m.precision && m.recall);
                    if (m.f1) {
                        const double p = *m.precision, r = *m.recall;
                        const double harmonic = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
                        ok = ok && std::fabs(*m.f1 - harmonic) <= 1e-15;
                    }
                    if (!ok) {
                        o.pass = false;
                        o.detail += " mismatch at " + std::to_string(tp) + "," + std::to_string(fp) + "," +
                                    std::to_string(fn) + "," + std::to_string(tn) + ";";
                    }
                }
    o.pass = o.pass && empty_rejected;

    // Majority-class predictor on data with 20% positives.
    std::vector<int> truth(1000, 0), predicted(1000, 0);
    std::fill(truth.begin(), truth.begin() + 200, 1);
    const auto m = compute_metrics(confusion(truth, predicted));
    const bool majority = m.accuracy == 0.8 && !m.precision && m.recall == 0.0 && !m.f1;
    o.pass = o.pass && majority;
    o.detail = std::to_string(tables) + " tables; majority class accuracy=" + fmt("%.3f", m.accuracy) +
               " precision=" + (m.precision ? fmt("%.3f", *m.precision) : std::string("undefined")) + o.detail;
    return o;
}

Outcome criterion8() {
    const auto row = [](std::vector<double> x, bool y, std::string state, int week) {
        FlightFeatureRow r;
        r.year = 2003;
        r.week_of_year = week;
        r.origin_airport = "SBGR";
        r.destination_state = std::move(state);
        r.numeric_features = std::move(x);
        r.delayed = y;
        return r;
    };
    const std::vector<FlightFeatureRow> rows{row({0.1, 0.9, 0.3}, true, "SP", 2), row({0.7, 0.2, 0.5}, false, "RJ", 1),
                                             row({0.4, 0.4, 0.9}, true, "MG", 2), row({0.95, 0.05, 0.0}, false, "SP", 3),
                                             row({0.0, 1.0, 0.6}, true, "RJ", 1)};
    const auto encoder = FeatureEncoder::fit(rows);
    const auto data = encoder.encode(rows);
    Mlp net(data.numeric, level_counts(encoder), 5);
    net.initialize(11, 0.6);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    for (auto& p : net.parameters()) p += jitter(rng);

    const std::vector<std::size_t> idx{0, 1, 2, 3, 4};
    std::vector<double> grad;
    net.loss_and_gradient(data, idx, grad);
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t k = 0; k < net.parameter_count(); ++k) {
        const double saved = net.parameters()[k];
        net.parameters()[k] = saved + h;
        const double up = net.loss(data, idx);
        net.parameters()[k] = saved - h;
        const double down = net.loss(data, idx);
        net.parameters()[k] = saved;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max({std::fabs(numeric), std::fabs(grad[k]), 1e-6});
        worst = std::max(worst, std::fabs(numeric - grad[k]) / denom);
    }
    return {worst <= 1e-4, std::to_string(net.parameter_count()) + " parameters, max relative error " +
                               fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------

Outcome criterion9(double& seconds) {
    const auto start = Clock::now();
    SyntheticSpec spec;
    spec.start_year = 2003;
    spec.years = 4;
    spec.flights_per_week = 20;
    spec.origins = {"SBGR", "SBRJ"};
    spec.seed = 31;
    spec.drift_events = {{2005, DriftKind::prior_shift, 0.15, {}}};
    const auto data = generate_stream(spec).rows;

    const auto base = fs::temp_directory_path() / "driftflow_acceptance_grid";
    fs::remove_all(base);
    const auto config = [&](const fs::path& out) {
        RunnerConfig c;
        c.grid.scales = {"SB", "SBGR", "SBRJ"};
        c.grid.classifiers = {ModelKind::nb, ModelKind::rf, ModelKind::mlp};
        c.grid.years = {2003, 2005};
        c.grid.bss = {1, 2};
        c.grid.replicates = 3;
        c.tuning.enabled = false;
        Hyperparameters rf, mlp;
        rf.trees_count = 5;
        mlp.hidden_neurons = 4;
        mlp.epochs = 3;
        c.hyperparameters[ModelKind::rf] = rf;
        c.hyperparameters[ModelKind::mlp] = mlp;
        c.output_dir = out;
        return c;
    };

    // Scales x classifiers (NB collapsed to one run) x handlers x steps for each b.
    const std::size_t handlers = 2 + 3;
    const std::size_t runs_per_b = 1 + 3 + 3;
    const std::size_t steps = 3 /* b=1: t=2003..2005 */ + 2 /* b=2: t=2004..2005 */;
    const std::size_t expected_rows = 3 * runs_per_b * handlers * steps;
    const std::size_t expected_cells = 3 * runs_per_b * handlers * 2;

    auto full = config(base / "full");
    const auto summary = drift_analysis(data, full);
    const auto full_rows = import_results(results_path(full).string());

    auto part = config(base / "resumed");
    part.max_cells = 50;
    drift_analysis(data, part);
    {
        std::ofstream torn(results_path(part), std::ios::app);
        torn << "SBGR,RF,2,mean,act";
    }
    part.max_cells = 40;
    drift_analysis(data, part);
    part.max_cells.reset();
    part.threads = 2;
    drift_analysis(data, part);
    const auto resumed = import_results(results_path(part).string());

    std::set<std::string> keys;
    std::size_t duplicates = 0;
    for (const auto& r : resumed) duplicates += keys.insert(r.key()).second ? 0 : 1;
    std::map<std::string, ResultRow> reference;
    for (const auto& r : full_rows) reference[r.key()] = r;
    std::size_t differing = 0;
    for (const auto& r : resumed) {
        auto it = reference.find(r.key());
        differing += (it == reference.end() || !(it->second == r)) ? 1 : 0;
    }
    fs::remove_all(base);
    seconds = elapsed(start);

    Outcome o;
    o.pass = summary.cells_total == expected_cells && analytic_cell_count(full.grid) == expected_cells &&
             full_rows.size() == expected_rows && summary.cells_failed == 0 && resumed.size() == expected_rows &&
             duplicates == 0 && differing == 0;
    o.detail = std::to_string(full_rows.size()) + " rows (expected " + std::to_string(expected_rows) + "), " +
               std::to_string(summary.cells_total) + " cells (expected " + std::to_string(expected_cells) +
               "); resumed run " + std::to_string(resumed.size()) + " rows, " + std::to_string(duplicates) +
               " duplicates, " + std::to_string(differing) + " differing from the uninterrupted run";
    return o;
}

}  // namespace

int main() {
    set_log_sink([](LogLevel, const std::string&) {});
    std::map<int, Outcome> results;
    double end_to_end = 0.0;
    const auto timed = [&](int id, const std::function<Outcome()>& f) {
        const auto start = Clock::now();
        try {
            results[id] = f();
        } catch (const std::exception& e) {
            results[id] = {false, std::string("exception: ") + e.what()};
        }
        return elapsed(start);
    };

    const auto specs = random_specs(24);
    end_to_end += timed(1, [&] { return criterion1(specs); });
    end_to_end += timed(2, [&] { return criterion2(specs); });
    timed(3, criterion3);
    end_to_end += timed(4, criterion4);
    end_to_end += timed(5, criterion5);
    double grid_seconds = 0.0;
    timed(9, [&] { return criterion9(grid_seconds); });
    end_to_end += grid_seconds;
    timed(6, [&] { return criterion6(end_to_end); });
    timed(7, criterion7);
    timed(8, criterion8);

    bool all = true;
    for (const auto& [id, o] : results) {
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << '\n';
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
