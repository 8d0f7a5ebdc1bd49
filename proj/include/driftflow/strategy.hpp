#pragma once

// One experiment key's walk over the batch stream: decide whether to retrain,
// train or reuse the stored model, and score the next batch.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftflow/drift.hpp"
#include "driftflow/learn/metrics.hpp"
#include "driftflow/learn/model.hpp"
#include "driftflow/windowing.hpp"

namespace driftflow {

/// Scale label for the system-based (all airports) population.
inline constexpr std::string_view kSystemScale = "SB";

struct StoreKey {
    std::string scale{kSystemScale};
    ModelKind kind = ModelKind::nb;
    std::optional<Detector> detector;  // only for active strategies
    Strategy strategy = Strategy::baseline;
    int bss = 1;
    int replicate = 0;

    std::string str() const {
        return scale + "_" + std::string(to_string(kind)) + "_" +
               (detector ? std::string(to_string(*detector)) : std::string("na")) + "_" +
               std::string(to_string(strategy)) + "_b" + std::to_string(bss) + "_r" + std::to_string(replicate);
    }
};

/// Latest model per key. With a directory, every stored model is also written
/// as a JSON file and `manifest.json` maps each key to its latest file.
class ModelStore {
public:
    ModelStore() = default;
    explicit ModelStore(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(*dir_);
        const auto manifest = *dir_ / "manifest.json";
        if (std::filesystem::exists(manifest)) {
            std::ifstream in(manifest);
            try {
                manifest_ = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw FormatError("corrupt model store manifest: " + std::string(e.what()));
            }
        } else {
            manifest_ = nlohmann::json::object();
        }
    }

    void store(const StoreKey& key, std::shared_ptr<const TrainedModel> model) {
        std::lock_guard lock(mutex_);
        const auto k = key.str();
        if (dir_) {
            const auto seq = ++sequence_[k];
            const auto file = k + "__" + std::to_string(model->training_window().end_year) + "_" +
                              std::to_string(seq) + ".json";
            save_model(*model, (*dir_ / file).string());
            manifest_[k] = file;
            const auto tmp = *dir_ / "manifest.json.tmp";
            {
                std::ofstream out(tmp);
                out << manifest_.dump(1);
            }
            std::filesystem::rename(tmp, *dir_ / "manifest.json");
        }
        models_[k] = std::move(model);
    }

    /// nullptr when nothing was stored under `key`.
    std::shared_ptr<const TrainedModel> load(const StoreKey& key) const {
        std::lock_guard lock(mutex_);
        const auto k = key.str();
        if (auto it = models_.find(k); it != models_.end()) return it->second;
        if (dir_ && manifest_.contains(k)) {
            auto m = std::make_shared<const TrainedModel>(load_model((*dir_ / manifest_[k].get<std::string>()).string()));
            models_[k] = m;
            return m;
        }
        return nullptr;
    }

private:
    std::optional<std::filesystem::path> dir_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::shared_ptr<const TrainedModel>> models_;
    std::map<std::string, int> sequence_;
    nlohmann::json manifest_;
};

struct StrategyState {
    StoreKey key;
    std::shared_ptr<const TrainedModel> current_model;
    int trainings_done = 0;
    std::vector<DriftDecision> drift_log;
};

struct StepOptions {
    DriftConfig drift;
    /// Global normalization: reuse this normalizer instead of refitting per window.
    std::optional<Normalizer> global_normalizer;
    ModelStore* store = nullptr;
};

struct StepResult {
    int t = 0;          // last year of the training window
    int test_year = 0;  // t + 1
    bool trained = false;
    bool skipped = false;  // empty test batch
    std::optional<DriftDecision> drift;
    ConfusionCounts confusion;
    std::optional<Metrics> metrics;
    int replicate = 0;
};

/// Whether year t can be evaluated with window size b: seq(t, b) fits and t+1 exists.
inline bool is_evaluable(const BatchStream& stream, int t, int b) {
    const int pos = stream_position(stream, t);
    return pos >= 0 && pos - b + 1 >= 0 && pos + 1 < static_cast<int>(stream.size());
}

/// One time step at year t. `spec.seed` selects the replicate's seed.
inline StepResult methodology_step(StrategyState& state, const BatchStream& stream, int t, int b, Detector detector,
                                   Strategy strategy, const ModelSpec& spec, const StepOptions& opts = {}) {
    const int pos = stream_position(stream, t);
    if (pos < 0 || pos + 1 >= static_cast<int>(stream.size()))
        throw Error("no test batch after year " + std::to_string(t));
    const auto current = batch_sequence(stream, pos, b);
    const auto& test = *stream[static_cast<std::size_t>(pos + 1)];

    StepResult result;
    result.t = t;
    result.test_year = test.year;
    result.replicate = state.key.replicate;
    if (test.empty()) {
        result.skipped = true;
        log_warning("test batch " + std::to_string(test.year) + " is empty; step skipped");
        return result;
    }

    std::optional<BatchSequence> previous;
    if (pos - 1 - b + 1 >= 0) previous = batch_sequence(stream, pos - 1, b);
    const bool first_step = state.current_model == nullptr;
    auto action = act_drift(detector, strategy, current, previous ? &*previous : nullptr, first_step, opts.drift);
    if (action.decision) state.drift_log.push_back(*action.decision);
    result.drift = std::move(action.decision);

    // A step with no model must train whatever the strategy says.
    if (action.train || !state.current_model) {
        if (current.all_empty())
            throw Error("training window ending " + std::to_string(t) + " has no rows");
        const auto rows = current.rows();
        auto model = std::make_shared<const TrainedModel>(
            train(spec, rows, TrainingWindow{t, b}, opts.global_normalizer));
        if (opts.store) opts.store->store(state.key, model);
        state.current_model = std::move(model);
        ++state.trainings_done;
        result.trained = true;
    } else if (opts.store) {
        if (auto stored = opts.store->load(state.key)) state.current_model = std::move(stored);
    }

    const auto predicted = state.current_model->predict(test.rows);
    result.confusion = confusion(labels_of(test.rows), predicted);
    result.metrics = compute_metrics(result.confusion);
    return result;
}

struct RunResult {
    StrategyState state;
    std::vector<StepResult> steps;

    int drift_count() const {
        int n = 0;
        for (const auto& s : steps)
            if (s.drift && s.drift->drift) ++n;
        return n;
    }
};

/// Every evaluable t in `years`, in order.
inline RunResult run_stream(const BatchStream& stream, int b, Detector detector, Strategy strategy,
                            const ModelSpec& spec, YearRange years, const StepOptions& opts = {},
                            StoreKey key = {}) {
    RunResult run;
    key.strategy = strategy;
    key.kind = spec.kind;
    key.bss = b;
    if (strategy == Strategy::active) key.detector = detector;
    run.state.key = std::move(key);
    for (int t = years.first; t <= years.last; ++t) {
        if (!is_evaluable(stream, t, b)) continue;
        auto step = methodology_step(run.state, stream, t, b, detector, strategy, spec, opts);
        run.steps.push_back(std::move(step));
    }
    return run;
}

/// Replicate count after collapsing deterministic learners to a single run.
inline int effective_replicates(ModelKind kind, int replicates) { return is_deterministic(kind) ? 1 : replicates; }

/// Runs each replicate with seed base_seed + r.
inline std::vector<RunResult> run_replicates(const BatchStream& stream, int b, Detector detector, Strategy strategy,
                                             ModelSpec spec, YearRange years, int replicates, std::uint64_t base_seed,
                                             const StepOptions& opts = {}, const std::string& scale = std::string(kSystemScale)) {
    std::vector<RunResult> out;
    const int n = effective_replicates(spec.kind, replicates);
    for (int r = 0; r < n; ++r) {
        spec.seed = base_seed + static_cast<std::uint64_t>(r);
        StoreKey key;
        key.scale = scale;
        key.replicate = r;
        out.push_back(run_stream(stream, b, detector, strategy, spec, years, opts, key));
    }
    return out;
}

}  // namespace driftflow
