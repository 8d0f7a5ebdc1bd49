#pragma once

// Classifier specs, training, prediction, and model (de)serialization.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftflow/learn/encoding.hpp"
#include "driftflow/learn/metrics.hpp"
#include "driftflow/learn/mlp.hpp"
#include "driftflow/learn/naive_bayes.hpp"
#include "driftflow/learn/random_forest.hpp"
#include "driftflow/log.hpp"

namespace driftflow {

enum class ModelKind { nb, rf, mlp };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::nb: return "NB";
        case ModelKind::rf: return "RF";
        case ModelKind::mlp: return "NN";
    }
    return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
    if (s == "NB") return ModelKind::nb;
    if (s == "RF") return ModelKind::rf;
    if (s == "NN" || s == "MLP") return ModelKind::mlp;
    throw FormatError("unknown classifier '" + std::string(s) + "'");
}

/// Naive Bayes is the only deterministic learner; it is never replicated.
inline bool is_deterministic(ModelKind k) noexcept { return k == ModelKind::nb; }

struct Hyperparameters {
    // NB
    double smoothing = 1.0;
    // RF
    std::size_t trees_count = 100;
    std::size_t predictors_per_split = 0;  // 0 = ceil(sqrt(p))
    std::size_t min_node_size = 1;
    bool bootstrap = true;
    // MLP
    std::size_t hidden_neurons = 8;
    double learning_rate = 0.1;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;

    friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

struct ModelSpec {
    ModelKind kind = ModelKind::nb;
    Hyperparameters hyper;
    std::uint64_t seed = 1;

    /// `feature_count` counts numeric and categorical predictors.
    void validate(std::size_t feature_count) const {
        switch (kind) {
            case ModelKind::nb:
                if (!(hyper.smoothing > 0.0)) throw Error("NB smoothing must be positive");
                break;
            case ModelKind::rf:
                if (hyper.trees_count == 0) throw Error("RF trees_count must be positive");
                if (hyper.predictors_per_split > feature_count)
                    throw Error("RF predictors_per_split exceeds feature count");
                break;
            case ModelKind::mlp:
                if (hyper.hidden_neurons == 0) throw Error("MLP hidden_neurons must be positive");
                if (!(hyper.learning_rate > 0.0)) throw Error("MLP learning_rate must be positive");
                if (hyper.epochs == 0) throw Error("MLP epochs must be positive");
                break;
        }
    }
};

inline std::size_t predictor_count(std::size_t numeric) { return numeric + kCategoricalCount; }

inline std::size_t default_predictors_per_split(std::size_t predictors) {
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(predictors))));
}

struct TrainingWindow {
    int end_year = 0;
    int size = 0;

    friend bool operator==(const TrainingWindow&, const TrainingWindow&) = default;
};

/// A fitted classifier with the encoder it was trained under. Immutable once built.
class TrainedModel {
public:
    using Fitted = std::variant<NaiveBayes, RandomForest, Mlp>;

    TrainedModel(ModelSpec spec, FeatureEncoder encoder, TrainingWindow window, Fitted fitted, bool degenerate)
        : spec_(spec), encoder_(std::move(encoder)), window_(window), fitted_(std::move(fitted)),
          degenerate_(degenerate) {}

    std::vector<int> predict(std::span<const FlightFeatureRow> rows) const {
        if (rows.empty()) return {};
        return predict_encoded(encoder_.encode(rows));
    }

    std::vector<int> predict_encoded(const EncodedData& data) const {
        std::vector<int> out(data.rows);
        std::visit([&](const auto& m) {
            for (std::size_t i = 0; i < data.rows; ++i) out[i] = m.predict(data, i);
        }, fitted_);
        return out;
    }

    const ModelSpec& spec() const noexcept { return spec_; }
    const FeatureEncoder& encoder() const noexcept { return encoder_; }
    const TrainingWindow& training_window() const noexcept { return window_; }
    const Fitted& fitted() const noexcept { return fitted_; }
    /// Trained on a single class.
    bool degenerate() const noexcept { return degenerate_; }

private:
    ModelSpec spec_;
    FeatureEncoder encoder_;
    TrainingWindow window_;
    Fitted fitted_;
    bool degenerate_ = false;
};

inline std::array<std::size_t, kCategoricalCount> level_counts(const FeatureEncoder& e) {
    std::array<std::size_t, kCategoricalCount> l{};
    for (std::size_t f = 0; f < kCategoricalCount; ++f) l[f] = e.level_count(f);
    return l;
}

/// Fits `spec` on `rows`. Pass `normalizer` to skip per-window min-max fitting.
inline TrainedModel train(const ModelSpec& spec, std::span<const FlightFeatureRow> rows, TrainingWindow window = {},
                          std::optional<Normalizer> normalizer = {}) {
    if (rows.empty()) throw Error("cannot train on zero rows");
    auto encoder = FeatureEncoder::fit(rows, std::move(normalizer));
    const auto data = encoder.encode(rows);
    spec.validate(predictor_count(data.numeric));
    std::size_t positives = 0;
    for (int y : data.y) positives += static_cast<std::size_t>(y);
    const bool single_class = positives == 0 || positives == data.rows;
    const auto levels = level_counts(encoder);

    switch (spec.kind) {
        case ModelKind::nb: {
            auto nb = NaiveBayes::fit(data, levels, spec.hyper.smoothing);
            if (single_class) log_warning("NB trained on a single class: constant predictor");
            return {spec, std::move(encoder), window, std::move(nb), single_class};
        }
        case ModelKind::rf: {
            if (single_class) {
                log_warning("RF trained on a single class: constant predictor");
                ForestParams fp;
                fp.trees_count = 1;
                fp.bootstrap = false;
                return {spec, std::move(encoder), window, RandomForest::fit(data, fp, spec.seed), true};
            }
            ForestParams fp;
            fp.trees_count = spec.hyper.trees_count;
            fp.bootstrap = spec.hyper.bootstrap;
            fp.tree.min_node_size = spec.hyper.min_node_size;
            fp.tree.predictors_per_split = spec.hyper.predictors_per_split == 0
                                               ? default_predictors_per_split(predictor_count(data.numeric))
                                               : spec.hyper.predictors_per_split;
            return {spec, std::move(encoder), window, RandomForest::fit(data, fp, spec.seed), false};
        }
        case ModelKind::mlp: {
            if (single_class) log_warning("MLP trained on a single class");
            Mlp net(data.numeric, levels, spec.hyper.hidden_neurons);
            MlpParams mp{spec.hyper.hidden_neurons, spec.hyper.learning_rate, spec.hyper.epochs,
                         spec.hyper.batch_size};
            net.train(data, mp, spec.seed);
            return {spec, std::move(encoder), window, std::move(net), single_class};
        }
    }
    throw Error("unreachable model kind");
}

inline std::vector<int> predict(const TrainedModel& model, std::span<const FlightFeatureRow> rows) {
    return model.predict(rows);
}

inline std::vector<int> labels_of(std::span<const FlightFeatureRow> rows) {
    std::vector<int> y;
    y.reserve(rows.size());
    for (const auto& r : rows) y.push_back(r.delayed ? 1 : 0);
    return y;
}

// ---------------------------------------------------------------------------
// Serialization
//
// JSON document: {"format": "driftflow-model", "version": 1, "kind": ..., "spec": ...,
// "window": ..., "encoder": ..., "params": ...}.

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const Hyperparameters& h) {
    return {{"smoothing", h.smoothing},           {"trees_count", h.trees_count},
            {"predictors_per_split", h.predictors_per_split}, {"min_node_size", h.min_node_size},
            {"bootstrap", h.bootstrap},           {"hidden_neurons", h.hidden_neurons},
            {"learning_rate", h.learning_rate},   {"epochs", h.epochs},
            {"batch_size", h.batch_size}};
}

/// Missing keys keep their defaults.
inline Hyperparameters hyperparameters_from_json(const nlohmann::json& j) {
    Hyperparameters h;
    h.smoothing = j.value("smoothing", h.smoothing);
    h.trees_count = j.value("trees_count", h.trees_count);
    h.predictors_per_split = j.value("predictors_per_split", h.predictors_per_split);
    h.min_node_size = j.value("min_node_size", h.min_node_size);
    h.bootstrap = j.value("bootstrap", h.bootstrap);
    h.hidden_neurons = j.value("hidden_neurons", h.hidden_neurons);
    h.learning_rate = j.value("learning_rate", h.learning_rate);
    h.epochs = j.value("epochs", h.epochs);
    h.batch_size = j.value("batch_size", h.batch_size);
    return h;
}

inline nlohmann::json model_to_json(const TrainedModel& m) {
    using nlohmann::json;
    const auto& enc = m.encoder();
    json vocab = json::array();
    for (const auto& v : enc.vocabularies()) vocab.push_back(v);
    json params;
    std::visit([&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, NaiveBayes>) {
            json tables = json::array();
            for (std::size_t c = 0; c < 2; ++c) {
                json per = json::array();
                for (const auto& t : f.tables()[c]) per.push_back({{"log_prob", t.log_prob}, {"log_unknown", t.log_unknown}});
                tables.push_back(per);
            }
            params = {{"smoothing", f.smoothing()}, {"constant_label", f.constant_label()},
                      {"log_prior", f.log_prior()}, {"means", f.means()},
                      {"variances", f.variances()}, {"tables", tables}};
        } else if constexpr (std::is_same_v<T, RandomForest>) {
            json trees = json::array();
            for (const auto& t : f.trees()) {
                json nodes = json::array();
                for (const auto& n : t.nodes())
                    nodes.push_back({n.feature, n.categorical, n.threshold, n.level, n.left, n.right,
                                     n.majority_child, n.label});
                trees.push_back({{"numeric", t.numeric_count()}, {"nodes", nodes}});
            }
            params = {{"trees", trees}};
        } else {
            params = {{"numeric", f.numeric_count()}, {"levels", f.levels()},
                      {"hidden", f.hidden_count()},
                      {"weights", std::vector<double>(f.parameters().begin(), f.parameters().end())}};
        }
    }, m.fitted());
    return {{"format", "driftflow-model"},
            {"version", kModelFormatVersion},
            {"kind", to_string(m.spec().kind)},
            {"spec", {{"seed", m.spec().seed}, {"hyper", to_json(m.spec().hyper)}}},
            {"window", {{"end_year", m.training_window().end_year}, {"size", m.training_window().size}}},
            {"degenerate", m.degenerate()},
            {"encoder",
             {{"min", enc.normalizer().min()}, {"max", enc.normalizer().max()}, {"mean", enc.normalizer().mean()},
              {"vocab", vocab}}},
            {"params", params}};
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "driftflow-model") throw FormatError("not a driftflow model document");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw FormatError("unsupported model format version " + j.at("version").dump());
        ModelSpec spec;
        spec.kind = parse_model_kind(j.at("kind").get<std::string>());
        spec.seed = j.at("spec").at("seed").get<std::uint64_t>();
        spec.hyper = hyperparameters_from_json(j.at("spec").at("hyper"));
        const TrainingWindow window{j.at("window").at("end_year").get<int>(), j.at("window").at("size").get<int>()};
        const auto& e = j.at("encoder");
        std::array<std::vector<std::string>, kCategoricalCount> vocab;
        for (std::size_t f = 0; f < kCategoricalCount; ++f) vocab[f] = e.at("vocab").at(f).get<std::vector<std::string>>();
        auto encoder = FeatureEncoder::from_parts(
            Normalizer::from_parameters(e.at("min").get<std::vector<double>>(), e.at("max").get<std::vector<double>>(),
                                        e.at("mean").get<std::vector<double>>()),
            std::move(vocab));
        const auto& p = j.at("params");
        const bool degenerate = j.at("degenerate").get<bool>();
        switch (spec.kind) {
            case ModelKind::nb: {
                std::array<std::array<NaiveBayes::CategoricalTable, kCategoricalCount>, 2> tables;
                for (std::size_t c = 0; c < 2; ++c)
                    for (std::size_t f = 0; f < kCategoricalCount; ++f) {
                        const auto& t = p.at("tables").at(c).at(f);
                        tables[c][f] = {t.at("log_prob").get<std::vector<double>>(), t.at("log_unknown").get<double>()};
                    }
                auto nb = NaiveBayes::from_parameters(
                    p.at("smoothing").get<double>(), p.at("constant_label").get<int>(),
                    p.at("log_prior").get<std::array<double, 2>>(),
                    p.at("means").get<std::array<std::vector<double>, 2>>(),
                    p.at("variances").get<std::array<std::vector<double>, 2>>(), std::move(tables));
                return {spec, std::move(encoder), window, std::move(nb), degenerate};
            }
            case ModelKind::rf: {
                std::vector<DecisionTree> trees;
                for (const auto& t : p.at("trees")) {
                    std::vector<TreeNode> nodes;
                    for (const auto& n : t.at("nodes"))
                        nodes.push_back({n.at(0).get<int>(), n.at(1).get<bool>(), n.at(2).get<double>(),
                                         n.at(3).get<int>(), n.at(4).get<int>(), n.at(5).get<int>(),
                                         n.at(6).get<int>(), n.at(7).get<int>()});
                    trees.push_back(DecisionTree::from_nodes(t.at("numeric").get<std::size_t>(), std::move(nodes)));
                }
                return {spec, std::move(encoder), window, RandomForest::from_trees(std::move(trees)), degenerate};
            }
            case ModelKind::mlp: {
                Mlp net(p.at("numeric").get<std::size_t>(),
                        p.at("levels").get<std::array<std::size_t, kCategoricalCount>>(),
                        p.at("hidden").get<std::size_t>());
                const auto w = p.at("weights").get<std::vector<double>>();
                if (w.size() != net.parameter_count()) throw FormatError("mlp weight count mismatch");
                std::copy(w.begin(), w.end(), net.parameters().begin());
                return {spec, std::move(encoder), window, std::move(net), degenerate};
            }
        }
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("malformed model document: ") + ex.what());
    }
    throw FormatError("unreachable model kind");
}

inline void save_model(const TrainedModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file: " + path);
    out << model_to_json(m).dump();
    if (!out) throw Error("failed writing model file: " + path);
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError("model file " + path + " is not JSON: " + ex.what());
    }
    return model_from_json(j);
}

}  // namespace driftflow
