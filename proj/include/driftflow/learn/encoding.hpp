#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "driftflow/ingest.hpp"

namespace driftflow {

/// origin airport, destination state, week of year.
inline constexpr std::size_t kCategoricalCount = 3;

inline std::array<std::string, kCategoricalCount> categorical_values(const FlightFeatureRow& r) {
    return {r.origin_airport, r.destination_state, std::to_string(r.week_of_year)};
}

/// Normalized numeric matrix plus integer category codes; -1 marks a level unseen at fit time.
struct EncodedData {
    std::size_t rows = 0;
    std::size_t numeric = 0;
    std::vector<double> x;
    std::vector<int> cats;
    std::vector<int> y;

    const double* numeric_row(std::size_t i) const { return x.data() + i * numeric; }
    const int* cat_row(std::size_t i) const { return cats.data() + i * kCategoricalCount; }
};

/// Fitted normalizer and per-feature category vocabularies.
class FeatureEncoder {
public:
    FeatureEncoder() = default;

    /// Fits on `rows`; a supplied normalizer (global normalization mode) is used as-is.
    static FeatureEncoder fit(std::span<const FlightFeatureRow> rows, std::optional<Normalizer> normalizer = {}) {
        FeatureEncoder e;
        e.normalizer_ = normalizer ? std::move(*normalizer) : Normalizer::fit(rows);
        std::array<std::set<std::string>, kCategoricalCount> levels;
        for (const auto& r : rows) {
            const auto v = categorical_values(r);
            for (std::size_t f = 0; f < kCategoricalCount; ++f) levels[f].insert(v[f]);
        }
        for (std::size_t f = 0; f < kCategoricalCount; ++f)
            e.vocab_[f].assign(levels[f].begin(), levels[f].end());
        e.index_vocab();
        return e;
    }

    static FeatureEncoder from_parts(Normalizer n, std::array<std::vector<std::string>, kCategoricalCount> vocab) {
        FeatureEncoder e;
        e.normalizer_ = std::move(n);
        e.vocab_ = std::move(vocab);
        e.index_vocab();
        return e;
    }

    EncodedData encode(std::span<const FlightFeatureRow> rows) const {
        EncodedData d;
        d.rows = rows.size();
        d.numeric = normalizer_.feature_count();
        d.x.reserve(d.rows * d.numeric);
        d.cats.reserve(d.rows * kCategoricalCount);
        d.y.reserve(d.rows);
        for (const auto& r : rows) {
            if (r.numeric_features.size() != d.numeric) throw Error("row feature count differs from encoder");
            for (std::size_t j = 0; j < d.numeric; ++j) d.x.push_back(normalizer_.transform(j, r.numeric_features[j]));
            const auto v = categorical_values(r);
            for (std::size_t f = 0; f < kCategoricalCount; ++f) {
                const auto it = lookup_[f].find(v[f]);
                d.cats.push_back(it == lookup_[f].end() ? -1 : it->second);
            }
            d.y.push_back(r.delayed ? 1 : 0);
        }
        return d;
    }

    const Normalizer& normalizer() const noexcept { return normalizer_; }
    const std::array<std::vector<std::string>, kCategoricalCount>& vocabularies() const noexcept { return vocab_; }
    std::size_t numeric_count() const noexcept { return normalizer_.feature_count(); }
    std::size_t level_count(std::size_t f) const { return vocab_[f].size(); }

private:
    void index_vocab() {
        for (std::size_t f = 0; f < kCategoricalCount; ++f) {
            lookup_[f].clear();
            for (std::size_t i = 0; i < vocab_[f].size(); ++i) lookup_[f].emplace(vocab_[f][i], static_cast<int>(i));
        }
    }

    Normalizer normalizer_;
    std::array<std::vector<std::string>, kCategoricalCount> vocab_;
    std::array<std::map<std::string, int>, kCategoricalCount> lookup_;
};

}  // namespace driftflow
