#include <gtest/gtest.h>

#include <map>

#include "driftflow/synth.hpp"

using namespace driftflow;

namespace {

std::map<int, double> yearly_rates(const SyntheticStream& s) {
    std::map<int, std::pair<double, double>> acc;
    for (const auto& r : s.rows.rows) {
        acc[r.year].first += r.delayed;
        acc[r.year].second += 1;
    }
    std::map<int, double> out;
    for (const auto& [y, a] : acc) out[y] = a.first / a.second;
    return out;
}

}  // namespace

TEST(Synth, ShapeAndFields) {
    SyntheticSpec spec;
    spec.years = 3;
    spec.flights_per_week = 10;
    spec.origins = {"SBGR", "SBSP"};
    const auto s = generate_stream(spec);
    EXPECT_EQ(s.rows.rows.size(), 3u * 52 * 10);
    EXPECT_EQ(s.rows.feature_names, (std::vector<std::string>{"x0", "x1", "x2"}));
    EXPECT_EQ(s.models.size(), 3u);
    std::set<std::string> origins, states;
    for (const auto& r : s.rows.rows) {
        origins.insert(r.origin_airport);
        states.insert(r.destination_state);
        EXPECT_GE(r.week_of_year, 1);
        EXPECT_LE(r.week_of_year, 52);
        for (double x : r.numeric_features) {
            EXPECT_GE(x, 0.0);
            EXPECT_LT(x, 1.0);
        }
    }
    EXPECT_EQ(origins.size(), 2u);
    EXPECT_EQ(states.size(), spec.category_effects.size());
}

TEST(Synth, StationaryRateConcentrates) {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SyntheticSpec spec;
        spec.years = 1;
        spec.seed = seed;
        for (const auto& [year, rate] : yearly_rates(generate_stream(spec))) EXPECT_NEAR(rate, 0.2, 0.02) << seed;
    }
}

TEST(Synth, PriorShiftMovesTheRate) {
    SyntheticSpec spec;
    spec.drift_events = {{2007, DriftKind::prior_shift, 0.25, {}}};
    const auto s = generate_stream(spec);
    for (const auto& [year, rate] : yearly_rates(s)) EXPECT_NEAR(rate, year < 2007 ? 0.2 : 0.45, 0.02) << year;
    EXPECT_EQ(s.models[5].coefficients, s.models[6].coefficients);
    EXPECT_EQ(s.models[5].category_effects, s.models[6].category_effects);
    EXPECT_NE(s.models[5].intercept, s.models[6].intercept);
}

TEST(Synth, SameSeedSameStream) {
    SyntheticSpec spec;
    spec.years = 2;
    spec.drift_events = {{2002, DriftKind::boundary_flip, 0, {}}};
    const auto a = generate_stream(spec), b = generate_stream(spec);
    EXPECT_EQ(a.rows.rows, b.rows.rows);
    spec.seed = 2;
    EXPECT_NE(a.rows.rows, generate_stream(spec).rows.rows);
}

TEST(Synth, BoundaryFlipChangesLabelsButNotTheRate) {
    SyntheticSpec spec;
    spec.coefficients = {3.0, -3.0, 1.5};
    spec.drift_events = {{2004, DriftKind::boundary_flip, 0, {}}};
    const auto models = label_models(spec);
    const auto& before = models[2];
    const auto& after = models[3];
    EXPECT_EQ(after.coefficients[0], -3.0);  // largest |w|, first on ties
    EXPECT_EQ(after.coefficients[1], -3.0);

    const auto probe = make_probe_set(spec, 20000, 12345);  // held out from calibration
    std::size_t differ = 0;
    for (std::size_t i = 0; i < probe.size(); ++i)
        differ += (before.probability(probe.x[i], probe.level[i], probe.week[i]) > 0.5) !=
                  (after.probability(probe.x[i], probe.level[i], probe.week[i]) > 0.5);
    EXPECT_GE(static_cast<double>(differ) / static_cast<double>(probe.size()), 0.10);
    EXPECT_LT(std::abs(marginal_rate(before, probe) - marginal_rate(after, probe)), 0.03);
}

TEST(Synth, FlipOfChosenFeature) {
    SyntheticSpec spec;
    spec.drift_events = {{2003, DriftKind::boundary_flip, 0, std::size_t{2}}};
    const auto models = label_models(spec);
    EXPECT_EQ(models[2].coefficients, (std::vector<double>{1.0, -1.0, -0.5}));
}

TEST(Synth, SeasonalTermVariesTheWeeklyRate) {
    SyntheticSpec spec;
    spec.years = 2;
    spec.seasonal_amplitude = 1.5;
    spec.base_delay_rate = 0.3;
    const auto s = generate_stream(spec);
    std::map<int, std::pair<double, double>> weekly;
    for (const auto& r : s.rows.rows) {
        weekly[r.week_of_year].first += r.delayed;
        weekly[r.week_of_year].second += 1;
    }
    const double spring = weekly[14].first / weekly[14].second;  // near the sine peak
    const double autumn = weekly[40].first / weekly[40].second;  // near the trough
    EXPECT_GT(spring, autumn + 0.2);
    for (const auto& [_, r] : yearly_rates(s)) EXPECT_NEAR(r, 0.3, 0.02);
}

TEST(Synth, Validation) {
    SyntheticSpec spec;
    spec.drift_events = {{2001, DriftKind::prior_shift, 0.1, {}}};
    EXPECT_THROW(generate_stream(spec), Error);
    spec.drift_events = {{2011, DriftKind::prior_shift, 0.1, {}}};
    EXPECT_THROW(generate_stream(spec), Error);
    spec.drift_events = {{2005, DriftKind::prior_shift, 0.85, {}}};
    EXPECT_THROW(generate_stream(spec), Error);
    spec.drift_events = {{2005, DriftKind::boundary_flip, 0, std::size_t{7}}};
    EXPECT_THROW(generate_stream(spec), Error);
    spec = {};
    spec.base_delay_rate = 1.0;
    EXPECT_THROW(generate_stream(spec), Error);
}

TEST(Synth, SpecJsonRoundTrip) {
    SyntheticSpec spec;
    spec.years = 6;
    spec.seed = 99;
    spec.drift_events = {{2003, DriftKind::prior_shift, 0.2, {}}, {2005, DriftKind::boundary_flip, 0, std::size_t{1}}};
    const auto back = synthetic_spec_from_json(to_json(spec));
    EXPECT_EQ(to_json(back), to_json(spec));
    EXPECT_EQ(back.drift_events, spec.drift_events);
    EXPECT_THROW(synthetic_spec_from_json(nlohmann::json{{"yeers", 3}}), FormatError);
    EXPECT_THROW(synthetic_spec_from_json(nlohmann::json{{"drift_events", {{{"at_year", 2003}, {"kind", "spin"}}}}}),
                 FormatError);
    EXPECT_THROW(load_synthetic_spec("/nonexistent/spec.json"), Error);
}

TEST(Synth, BundledSampleSpecLoads) {
    const auto spec = load_synthetic_spec(std::string(DRIFTFLOW_SOURCE_DIR) + "/samples/data/synth_spec.json");
    EXPECT_FALSE(spec.drift_events.empty());
    EXPECT_NO_THROW(label_models(spec));
}
