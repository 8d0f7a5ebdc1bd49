#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "driftflow/learn/encoding.hpp"

namespace driftflow {

/// Gaussian likelihoods for numeric features, additively smoothed frequency
/// tables for categorical ones. Each categorical table reserves one extra
/// "unknown" bucket that receives only smoothing mass.
class NaiveBayes {
public:
    struct CategoricalTable {
        std::vector<double> log_prob;  // per level
        double log_unknown = 0.0;
    };

    static NaiveBayes fit(const EncodedData& data, const std::array<std::size_t, kCategoricalCount>& levels,
                          double smoothing) {
        if (!(smoothing > 0.0)) throw Error("naive bayes smoothing must be positive");
        if (data.rows == 0) throw Error("naive bayes on zero rows");
        NaiveBayes nb;
        nb.smoothing_ = smoothing;
        std::array<std::size_t, 2> count{0, 0};
        for (int y : data.y) ++count[static_cast<std::size_t>(y)];
        if (count[0] == 0 || count[1] == 0) {
            nb.constant_label_ = count[1] > 0 ? 1 : 0;
            return nb;
        }
        const double n = static_cast<double>(data.rows);
        const std::size_t p = data.numeric;
        for (std::size_t c = 0; c < 2; ++c) {
            nb.log_prior_[c] = std::log(static_cast<double>(count[c]) / n);
            nb.mean_[c].assign(p, 0.0);
            nb.var_[c].assign(p, 0.0);
        }
        for (std::size_t i = 0; i < data.rows; ++i) {
            const auto c = static_cast<std::size_t>(data.y[i]);
            const double* x = data.numeric_row(i);
            for (std::size_t j = 0; j < p; ++j) nb.mean_[c][j] += x[j];
        }
        for (std::size_t c = 0; c < 2; ++c)
            for (auto& m : nb.mean_[c]) m /= static_cast<double>(count[c]);
        for (std::size_t i = 0; i < data.rows; ++i) {
            const auto c = static_cast<std::size_t>(data.y[i]);
            const double* x = data.numeric_row(i);
            for (std::size_t j = 0; j < p; ++j) nb.var_[c][j] += (x[j] - nb.mean_[c][j]) * (x[j] - nb.mean_[c][j]);
        }
        // Variance floor relative to the widest feature, as in common Gaussian NB implementations.
        double widest = 0.0;
        std::vector<double> overall_mean(p, 0.0), overall_var(p, 0.0);
        for (std::size_t i = 0; i < data.rows; ++i)
            for (std::size_t j = 0; j < p; ++j) overall_mean[j] += data.numeric_row(i)[j] / n;
        for (std::size_t i = 0; i < data.rows; ++i)
            for (std::size_t j = 0; j < p; ++j) {
                const double d = data.numeric_row(i)[j] - overall_mean[j];
                overall_var[j] += d * d / n;
            }
        for (double v : overall_var) widest = std::max(widest, v);
        const double floor = std::max(1e-9 * widest, 1e-12);
        for (std::size_t c = 0; c < 2; ++c)
            for (auto& v : nb.var_[c]) v = v / static_cast<double>(count[c]) + floor;

        for (std::size_t c = 0; c < 2; ++c) {
            for (std::size_t f = 0; f < kCategoricalCount; ++f) {
                std::vector<double> freq(levels[f], 0.0);
                for (std::size_t i = 0; i < data.rows; ++i) {
                    if (static_cast<std::size_t>(data.y[i]) != c) continue;
                    const int code = data.cat_row(i)[f];
                    if (code >= 0) freq[static_cast<std::size_t>(code)] += 1.0;
                }
                const double denom = static_cast<double>(count[c]) + smoothing * static_cast<double>(levels[f] + 1);
                auto& table = nb.cat_[c][f];
                table.log_prob.resize(levels[f]);
                for (std::size_t l = 0; l < levels[f]; ++l) table.log_prob[l] = std::log((freq[l] + smoothing) / denom);
                table.log_unknown = std::log(smoothing / denom);
            }
        }
        return nb;
    }

    bool is_constant() const noexcept { return constant_label_ >= 0; }
    int constant_label() const noexcept { return constant_label_; }

    /// Unnormalized log posterior of each class.
    std::array<double, 2> log_scores(const EncodedData& data, std::size_t i) const {
        std::array<double, 2> s{};
        const double* x = data.numeric_row(i);
        const int* cats = data.cat_row(i);
        for (std::size_t c = 0; c < 2; ++c) {
            double v = log_prior_[c];
            for (std::size_t j = 0; j < mean_[c].size(); ++j) {
                const double d = x[j] - mean_[c][j];
                v += -0.5 * std::log(2.0 * std::numbers::pi * var_[c][j]) - d * d / (2.0 * var_[c][j]);
            }
            for (std::size_t f = 0; f < kCategoricalCount; ++f) {
                const auto& t = cat_[c][f];
                const int code = cats[f];
                v += code >= 0 && static_cast<std::size_t>(code) < t.log_prob.size()
                         ? t.log_prob[static_cast<std::size_t>(code)]
                         : t.log_unknown;
            }
            s[c] = v;
        }
        return s;
    }

    static int decide(const std::array<double, 2>& scores) { return scores[1] > scores[0] ? 1 : 0; }

    int predict(const EncodedData& data, std::size_t i) const {
        if (is_constant()) return constant_label_;
        return decide(log_scores(data, i));
    }

    // Parameter access for serialization.
    double smoothing() const noexcept { return smoothing_; }
    const std::array<double, 2>& log_prior() const noexcept { return log_prior_; }
    const std::array<std::vector<double>, 2>& means() const noexcept { return mean_; }
    const std::array<std::vector<double>, 2>& variances() const noexcept { return var_; }
    const std::array<std::array<CategoricalTable, kCategoricalCount>, 2>& tables() const noexcept { return cat_; }

    static NaiveBayes from_parameters(double smoothing, int constant_label, std::array<double, 2> log_prior,
                                      std::array<std::vector<double>, 2> means,
                                      std::array<std::vector<double>, 2> variances,
                                      std::array<std::array<CategoricalTable, kCategoricalCount>, 2> tables) {
        NaiveBayes nb;
        nb.smoothing_ = smoothing;
        nb.constant_label_ = constant_label;
        nb.log_prior_ = log_prior;
        nb.mean_ = std::move(means);
        nb.var_ = std::move(variances);
        nb.cat_ = std::move(tables);
        return nb;
    }

private:
    double smoothing_ = 1.0;
    int constant_label_ = -1;
    std::array<double, 2> log_prior_{};
    std::array<std::vector<double>, 2> mean_;
    std::array<std::vector<double>, 2> var_;
    std::array<std::array<CategoricalTable, kCategoricalCount>, 2> cat_;
};

}  // namespace driftflow
