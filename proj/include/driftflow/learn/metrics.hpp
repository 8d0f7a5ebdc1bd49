#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "driftflow/error.hpp"

namespace driftflow {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    std::uint64_t positives() const noexcept { return tp + fn; }
    std::uint64_t negatives() const noexcept { return tn + fp; }

    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Accuracy is always defined; the others are empty when their denominator is zero.
struct Metrics {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

inline ConfusionCounts confusion(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw Error("confusion: label and prediction counts differ");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] != 0, p = predicted[i] != 0;
        if (t && p) ++c.tp;
        else if (!t && p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

inline Metrics compute_metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw Error("metrics of an empty confusion table");
    const auto d = [](std::uint64_t v) { return static_cast<double>(v); };
    Metrics m;
    m.accuracy = d(c.tp + c.tn) / d(c.total());
    if (c.tp + c.fp > 0) m.precision = d(c.tp) / d(c.tp + c.fp);
    if (c.tp + c.fn > 0) m.recall = d(c.tp) / d(c.tp + c.fn);
    if (m.precision && m.recall) {
        // 2PR/(P+R) == 2TP/(2TP+FP+FN); the count form stays exact and defined when TP = 0.
        m.f1 = 2.0 * d(c.tp) / (2.0 * d(c.tp) + d(c.fp) + d(c.fn));
    }
    return m;
}

}  // namespace driftflow
