#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "driftflow/learn/encoding.hpp"

namespace driftflow {

struct MlpParams {
    std::size_t hidden_neurons = 8;
    double learning_rate = 0.1;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
};

/// Single hidden layer of logistic units with a logistic output, trained on
/// mean binary cross-entropy. Inputs are the normalized numerics followed by a
/// one-hot block per categorical feature; unseen levels encode as all zeros.
///
/// Parameter layout (flat): W1[hidden][inputs], b1[hidden], w2[hidden], b2.
class Mlp {
public:
    Mlp() = default;

    Mlp(std::size_t numeric, const std::array<std::size_t, kCategoricalCount>& levels, std::size_t hidden)
        : numeric_(numeric), hidden_(hidden) {
        if (hidden == 0) throw Error("mlp needs at least one hidden neuron");
        std::size_t offset = numeric;
        for (std::size_t f = 0; f < kCategoricalCount; ++f) {
            offsets_[f] = offset;
            levels_[f] = levels[f];
            offset += levels[f];
        }
        inputs_ = offset;
        params_.assign(hidden_ * inputs_ + 2 * hidden_ + 1, 0.0);
    }

    std::size_t input_count() const noexcept { return inputs_; }
    std::size_t hidden_count() const noexcept { return hidden_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }
    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    /// Seeded uniform initialization in +-1/sqrt(fan-in); output bias set to the prior log-odds.
    void initialize(std::uint64_t seed, double positive_rate) {
        std::mt19937_64 rng(seed);
        const double active_inputs = static_cast<double>(numeric_ + kCategoricalCount);
        std::uniform_real_distribution<double> first(-1.0 / std::sqrt(active_inputs), 1.0 / std::sqrt(active_inputs));
        std::uniform_real_distribution<double> second(-1.0 / std::sqrt(static_cast<double>(hidden_)),
                                                      1.0 / std::sqrt(static_cast<double>(hidden_)));
        for (std::size_t i = 0; i < hidden_ * inputs_; ++i) params_[i] = first(rng);
        for (std::size_t h = 0; h < hidden_; ++h) params_[b1() + h] = 0.0;
        for (std::size_t h = 0; h < hidden_; ++h) params_[w2() + h] = second(rng);
        const double r = std::clamp(positive_rate, 1e-3, 1.0 - 1e-3);
        params_[b2()] = std::log(r / (1.0 - r));
    }

    /// Output logit for row i.
    double logit(const EncodedData& data, std::size_t i, std::vector<double>* hidden_out = nullptr) const {
        thread_local std::vector<double> scratch;
        auto& act = hidden_out ? *hidden_out : scratch;
        act.resize(hidden_);
        const double* x = data.numeric_row(i);
        const int* cats = data.cat_row(i);
        double z = params_[b2()];
        for (std::size_t h = 0; h < hidden_; ++h) {
            const double* w = params_.data() + h * inputs_;
            double a = params_[b1() + h];
            for (std::size_t j = 0; j < numeric_; ++j) a += w[j] * x[j];
            for (std::size_t f = 0; f < kCategoricalCount; ++f)
                if (cats[f] >= 0 && static_cast<std::size_t>(cats[f]) < levels_[f])
                    a += w[offsets_[f] + static_cast<std::size_t>(cats[f])];
            act[h] = sigmoid(a);
            z += params_[w2() + h] * act[h];
        }
        return z;
    }

    double probability(const EncodedData& data, std::size_t i) const { return sigmoid(logit(data, i)); }

    int predict(const EncodedData& data, std::size_t i) const { return logit(data, i) > 0.0 ? 1 : 0; }

    /// Mean binary cross-entropy over `rows`.
    double loss(const EncodedData& data, std::span<const std::size_t> rows) const {
        double total = 0.0;
        for (auto i : rows) total += bce(logit(data, i), data.y[i]);
        return total / static_cast<double>(rows.size());
    }

    /// Mean loss and its gradient with respect to the flat parameter vector.
    double loss_and_gradient(const EncodedData& data, std::span<const std::size_t> rows,
                             std::vector<double>& grad) const {
        grad.assign(params_.size(), 0.0);
        std::vector<double> act;
        double total = 0.0;
        const double scale = 1.0 / static_cast<double>(rows.size());
        for (auto i : rows) {
            const double z = logit(data, i, &act);
            total += bce(z, data.y[i]);
            const double dz = (sigmoid(z) - data.y[i]) * scale;
            grad[b2()] += dz;
            const double* x = data.numeric_row(i);
            const int* cats = data.cat_row(i);
            for (std::size_t h = 0; h < hidden_; ++h) {
                grad[w2() + h] += dz * act[h];
                const double da = dz * params_[w2() + h] * act[h] * (1.0 - act[h]);
                grad[b1() + h] += da;
                double* g = grad.data() + h * inputs_;
                for (std::size_t j = 0; j < numeric_; ++j) g[j] += da * x[j];
                for (std::size_t f = 0; f < kCategoricalCount; ++f)
                    if (cats[f] >= 0 && static_cast<std::size_t>(cats[f]) < levels_[f])
                        g[offsets_[f] + static_cast<std::size_t>(cats[f])] += da;
            }
        }
        return total * scale;
    }

    /// Mini-batch gradient descent; returns the mean training loss after each epoch.
    std::vector<double> train(const EncodedData& data, const MlpParams& p, std::uint64_t seed) {
        if (data.rows == 0) throw Error("mlp on zero rows");
        const double rate = static_cast<double>(std::accumulate(data.y.begin(), data.y.end(), 0)) /
                            static_cast<double>(data.rows);
        initialize(seed, rate);
        std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
        std::vector<std::size_t> order(data.rows);
        std::iota(order.begin(), order.end(), 0);
        const std::size_t batch = std::max<std::size_t>(1, p.batch_size);
        std::vector<double> grad;
        std::vector<double> history;
        history.reserve(p.epochs);
        for (std::size_t e = 0; e < p.epochs; ++e) {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t s = 0; s < order.size(); s += batch) {
                const std::span<const std::size_t> rows(order.data() + s, std::min(batch, order.size() - s));
                loss_and_gradient(data, rows, grad);
                for (std::size_t k = 0; k < params_.size(); ++k) params_[k] -= p.learning_rate * grad[k];
            }
            history.push_back(loss(data, order));
        }
        return history;
    }

    const std::array<std::size_t, kCategoricalCount>& levels() const noexcept { return levels_; }
    std::size_t numeric_count() const noexcept { return numeric_; }

    static double sigmoid(double z) {
        return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    }

private:
    // log(1 + e^z) - y z, evaluated without overflow.
    static double bce(double z, int y) {
        const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        return softplus - (y ? z : 0.0);
    }

    std::size_t b1() const noexcept { return hidden_ * inputs_; }
    std::size_t w2() const noexcept { return hidden_ * inputs_ + hidden_; }
    std::size_t b2() const noexcept { return hidden_ * inputs_ + 2 * hidden_; }

    std::size_t numeric_ = 0;
    std::size_t hidden_ = 0;
    std::size_t inputs_ = 0;
    std::array<std::size_t, kCategoricalCount> offsets_{};
    std::array<std::size_t, kCategoricalCount> levels_{};
    std::vector<double> params_;
};

}  // namespace driftflow
