// Generates a synthetic stream with one injected shift and compares the three
// retraining strategies with a Naive Bayes classifier.

#include <cstdio>

#include "driftflow/driftflow.hpp"

using namespace driftflow;

int main() {
    SyntheticSpec spec;
    spec.start_year = 2010;
    spec.years = 8;
    spec.base_delay_rate = 0.25;
    spec.coefficients = {2.0, -1.5, 0.8};
    spec.drift_events = {{2013, DriftKind::prior_shift, 0.25, std::nullopt}};
    spec.seed = 2024;

    const auto synthetic = generate_stream(spec);
    const auto stream = partition_by_year(synthetic.rows.rows, {spec.start_year, spec.last_year()}).batches;
    const ModelSpec model{ModelKind::nb, {}, 1};

    for (auto strategy : {Strategy::baseline, Strategy::passive, Strategy::active}) {
        const auto run = run_stream(stream, 1, Detector::mean, strategy, model, {2010, 2016});
        std::printf("%-8s trainings=%d drifts=%d\n", std::string(to_string(strategy)).c_str(),
                    run.state.trainings_done, run.drift_count());
        for (const auto& step : run.steps) {
            const auto& m = *step.metrics;
            std::printf("  %d->%d  %s  acc=%.3f  f1=%s\n", step.t, step.test_year, step.trained ? "train" : "reuse",
                        m.accuracy, m.f1 ? std::to_string(*m.f1).c_str() : "NA");
        }
    }
}
