#include <gtest/gtest.h>

#include <filesystem>

#include "driftflow/strategy.hpp"
#include "driftflow/synth.hpp"

using namespace driftflow;

namespace {

SyntheticSpec small_spec(std::uint64_t seed, int years = 4) {
    SyntheticSpec s;
    s.start_year = 2003;
    s.years = years;
    s.flights_per_week = 30;
    s.seed = seed;
    return s;
}

BatchStream stream_from(const SyntheticSpec& spec) {
    const auto rows = generate_stream(spec).rows.rows;
    return partition_by_year(rows, {spec.start_year, spec.last_year()}).batches;
}

// Every year is a copy of the first, so no detector can see a difference.
BatchStream frozen_stream(int years) {
    auto spec = small_spec(5, 1);
    const auto base = generate_stream(spec).rows.rows;
    std::vector<FlightFeatureRow> rows;
    for (int y = 0; y < years; ++y)
        for (auto r : base) {
            r.year = 2003 + y;
            rows.push_back(r);
        }
    return partition_by_year(rows, {2003, 2003 + years - 1}).batches;
}

const ModelSpec kNb{ModelKind::nb, {}, 1};

}  // namespace

TEST(Strategy, BaselineTrainsOnce) {
    const auto stream = stream_from(small_spec(1));
    const auto run = run_stream(stream, 1, Detector::mean, Strategy::baseline, kNb, {2003, 2006});
    EXPECT_EQ(run.state.trainings_done, 1);
    ASSERT_EQ(run.steps.size(), 3u);
    EXPECT_TRUE(run.steps[0].trained);
    EXPECT_FALSE(run.steps[1].trained);
    EXPECT_EQ(run.steps[2].test_year, 2006);
    for (const auto& s : run.steps) EXPECT_TRUE(s.metrics);
}

TEST(Strategy, PassiveTrainsEveryStep) {
    const auto stream = stream_from(small_spec(2));
    const auto run = run_stream(stream, 1, Detector::mean, Strategy::passive, kNb, {2003, 2006});
    EXPECT_EQ(run.state.trainings_done, 3);
    EXPECT_EQ(run.steps.size(), 3u);
    for (const auto& s : run.steps) EXPECT_FALSE(s.drift);
}

TEST(Strategy, ActiveWithoutDriftMatchesBaseline) {
    const auto stream = frozen_stream(5);
    const auto run = run_stream(stream, 1, Detector::mean_variance, Strategy::active, kNb, {2003, 2007});
    EXPECT_EQ(run.state.trainings_done, 1);
    EXPECT_EQ(run.drift_count(), 0);
    EXPECT_EQ(run.steps.size(), 4u);
    EXPECT_FALSE(run.steps[0].drift);  // first step trains without a test
    for (std::size_t i = 1; i < run.steps.size(); ++i) {
        ASSERT_TRUE(run.steps[i].drift);
        EXPECT_FALSE(run.steps[i].drift->drift);
    }
}

TEST(Strategy, ActiveTrainsOncePlusDrifts) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto spec = small_spec(seed, 7);
        spec.flights_per_week = 60;
        spec.drift_events = {{2006, DriftKind::prior_shift, 0.25, {}}};
        const auto stream = stream_from(spec);
        for (int b : {1, 2})
            for (auto d : {Detector::mean, Detector::variance, Detector::mean_variance}) {
                const auto run = run_stream(stream, b, d, Strategy::active, kNb, {2003, 2009});
                EXPECT_EQ(run.state.trainings_done, 1 + run.drift_count());
                EXPECT_EQ(static_cast<int>(run.steps.size()), 7 - b);
            }
    }
}

TEST(Strategy, WindowSizeSkipsEarlyYears) {
    const auto stream = stream_from(small_spec(3, 6));
    const auto run = run_stream(stream, 3, Detector::mean, Strategy::passive, kNb, {2003, 2008});
    ASSERT_EQ(run.steps.size(), 3u);
    EXPECT_EQ(run.steps.front().t, 2005);
    EXPECT_EQ(run.state.current_model->training_window(), (TrainingWindow{2007, 3}));
    EXPECT_FALSE(is_evaluable(stream, 2004, 3));
    EXPECT_TRUE(is_evaluable(stream, 2005, 3));
    EXPECT_FALSE(is_evaluable(stream, 2008, 1));
}

TEST(Strategy, ReplicateArithmetic) {
    const auto stream = stream_from(small_spec(4));
    ModelSpec rf{ModelKind::rf, {}, 1};
    rf.hyper.trees_count = 3;
    int total = 0;
    const auto runs = run_replicates(stream, 1, Detector::mean, Strategy::passive, rf, {2003, 2006}, 5, 100);
    ASSERT_EQ(runs.size(), 5u);
    for (std::size_t r = 0; r < runs.size(); ++r) {
        total += runs[r].state.trainings_done;
        EXPECT_EQ(runs[r].state.key.replicate, static_cast<int>(r));
        EXPECT_EQ(runs[r].state.current_model->spec().seed, 100 + r);
    }
    EXPECT_EQ(total, 15);

    const auto nb = run_replicates(stream, 1, Detector::mean, Strategy::passive, kNb, {2003, 2006}, 5, 100);
    ASSERT_EQ(nb.size(), 1u);
    EXPECT_EQ(nb[0].state.trainings_done, 3);
    EXPECT_EQ(effective_replicates(ModelKind::mlp, 5), 5);
}

TEST(Strategy, StoredModelIsReused) {
    const auto stream = frozen_stream(4);
    ModelStore store;
    StepOptions opts;
    opts.store = &store;
    StoreKey key;
    key.scale = "SBGR";
    const auto run = run_stream(stream, 1, Detector::mean, Strategy::active, kNb, {2003, 2006}, opts, key);
    EXPECT_EQ(run.state.trainings_done, 1);
    const auto stored = store.load(run.state.key);
    ASSERT_TRUE(stored);
    EXPECT_EQ(stored.get(), run.state.current_model.get());
    EXPECT_EQ(run.state.key.str(), "SBGR_NB_mean_active_b1_r0");
}

TEST(Strategy, DirectoryStoreSurvivesReopen) {
    const auto dir = std::filesystem::temp_directory_path() / "driftflow_store_test";
    std::filesystem::remove_all(dir);
    const auto stream = stream_from(small_spec(6));
    StoreKey key;
    key.strategy = Strategy::passive;
    std::vector<int> predictions;
    {
        ModelStore store(dir);
        StepOptions opts;
        opts.store = &store;
        const auto run = run_stream(stream, 1, Detector::mean, Strategy::passive, kNb, {2003, 2006}, opts, key);
        predictions = run.state.current_model->predict(stream.back()->rows);
        key = run.state.key;
    }
    ModelStore reopened(dir);
    const auto model = reopened.load(key);
    ASSERT_TRUE(model);
    EXPECT_EQ(model->training_window().end_year, 2005);
    EXPECT_EQ(model->predict(stream.back()->rows), predictions);
    StoreKey missing = key;
    missing.bss = 9;
    EXPECT_FALSE(reopened.load(missing));
    std::filesystem::remove_all(dir);
}

TEST(Strategy, EmptyTestBatchIsSkipped) {
    auto rows = generate_stream(small_spec(7, 2)).rows.rows;
    const auto stream = partition_by_year(rows, {2003, 2005}).batches;  // 2005 has no rows
    StrategyState state;
    const auto step = methodology_step(state, stream, 2004, 1, Detector::mean, Strategy::passive, kNb);
    EXPECT_TRUE(step.skipped);
    EXPECT_FALSE(step.metrics);
    EXPECT_EQ(state.trainings_done, 0);
}

TEST(Strategy, EmptyTrainingWindowIsAnError) {
    auto rows = generate_stream(small_spec(8, 2)).rows.rows;
    for (auto& r : rows) r.year += 1;  // data in 2004..2005, 2003 empty
    const auto stream = partition_by_year(rows, {2003, 2005}).batches;
    StrategyState state;
    EXPECT_THROW(methodology_step(state, stream, 2003, 1, Detector::mean, Strategy::baseline, kNb), Error);
}

TEST(Strategy, StepConfusionMatchesPredictions) {
    const auto stream = stream_from(small_spec(9));
    StrategyState state;
    const auto step = methodology_step(state, stream, 2003, 1, Detector::mean, Strategy::passive, kNb);
    const auto pred = state.current_model->predict(stream[1]->rows);
    EXPECT_EQ(step.confusion, confusion(labels_of(stream[1]->rows), pred));
    EXPECT_EQ(step.confusion.total(), stream[1]->rows.size());
}
