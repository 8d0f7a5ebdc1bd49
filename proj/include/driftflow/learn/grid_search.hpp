#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "driftflow/learn/model.hpp"

namespace driftflow {

/// Candidate hyperparameters, ordered from the smallest model to the largest.
using HyperGrid = std::vector<Hyperparameters>;

/// Default search space. `predictors` counts numeric plus categorical inputs.
inline HyperGrid default_grid(ModelKind kind, std::size_t predictors) {
    HyperGrid grid;
    switch (kind) {
        case ModelKind::nb:
            for (double s : {0.1, 0.5, 1.0}) {
                Hyperparameters h;
                h.smoothing = s;
                grid.push_back(h);
            }
            break;
        case ModelKind::rf: {
            const double p = static_cast<double>(predictors);
            std::vector<std::size_t> mtry{static_cast<std::size_t>(std::ceil(std::sqrt(p))),
                                          static_cast<std::size_t>(std::ceil(p / 3.0)),
                                          static_cast<std::size_t>(std::ceil(p / 2.0))};
            std::sort(mtry.begin(), mtry.end());
            mtry.erase(std::unique(mtry.begin(), mtry.end()), mtry.end());
            for (auto m : mtry) {
                Hyperparameters h;
                h.trees_count = 100;
                h.predictors_per_split = std::max<std::size_t>(1, m);
                grid.push_back(h);
            }
            break;
        }
        case ModelKind::mlp:
            for (std::size_t hidden : {4, 8, 16, 32})
                for (double lr : {0.01, 0.1}) {
                    Hyperparameters h;
                    h.hidden_neurons = hidden;
                    h.learning_rate = lr;
                    h.epochs = 50;
                    grid.push_back(h);
                }
            break;
    }
    return grid;
}

/// Shuffled k-fold assignment; fold sizes differ by at most one.
inline std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error("cross-validation needs at least 2 folds");
    if (n < k) throw Error("cross-validation needs at least as many rows as folds");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(order[i]);
    return folds;
}

struct GridSearchResult {
    ModelSpec best;
    std::vector<double> mean_accuracy;  // aligned with the grid
};

/// Picks the grid point with the highest mean k-fold accuracy. Earlier (smaller) points win ties.
inline GridSearchResult grid_search_cv(ModelKind kind, const HyperGrid& grid, std::span<const FlightFeatureRow> rows,
                                       std::size_t k, std::uint64_t seed) {
    if (grid.empty()) throw Error("empty hyperparameter grid");
    const auto folds = make_folds(rows.size(), k, seed);
    GridSearchResult result;
    double best = -1.0;
    for (const auto& h : grid) {
        ModelSpec spec{kind, h, seed};
        double acc_sum = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<FlightFeatureRow> train_rows, test_rows;
            for (std::size_t g = 0; g < k; ++g)
                for (auto i : folds[g]) (g == f ? test_rows : train_rows).push_back(rows[i]);
            const auto model = train(spec, train_rows);
            const auto pred = model.predict(test_rows);
            const auto truth = labels_of(test_rows);
            std::size_t hit = 0;
            for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i] ? 1 : 0;
            acc_sum += static_cast<double>(hit) / static_cast<double>(pred.size());
        }
        const double mean_acc = acc_sum / static_cast<double>(k);
        result.mean_accuracy.push_back(mean_acc);
        if (mean_acc > best) {
            best = mean_acc;
            result.best = spec;
        }
    }
    return result;
}

}  // namespace driftflow
