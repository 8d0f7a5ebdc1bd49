#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "driftflow/error.hpp"
#include "driftflow/ingest.hpp"

namespace driftflow {

struct YearRange {
    int first;
    int last;

    bool contains(int year) const noexcept { return year >= first && year <= last; }
    int size() const noexcept { return last - first + 1; }
};

/// All rows of one calendar year.
struct Batch {
    int index = 0;
    int year = 0;
    std::vector<FlightFeatureRow> rows;

    bool empty() const noexcept { return rows.empty(); }
};

/// Ordered batches; shared so windows can reference them without copying rows.
using BatchStream = std::vector<std::shared_ptr<const Batch>>;

/// The b consecutive batches ending at `end_index`.
struct BatchSequence {
    int end_index = 0;
    int size = 0;
    std::vector<std::shared_ptr<const Batch>> batches;

    int end_year() const { return batches.back()->year; }

    std::size_t row_count() const {
        std::size_t n = 0;
        for (const auto& b : batches) n += b->rows.size();
        return n;
    }

    bool all_empty() const {
        for (const auto& b : batches)
            if (!b->empty()) return false;
        return true;
    }

    std::vector<FlightFeatureRow> rows() const {
        std::vector<FlightFeatureRow> out;
        out.reserve(row_count());
        for (const auto& b : batches) out.insert(out.end(), b->rows.begin(), b->rows.end());
        return out;
    }
};

struct PartitionResult {
    BatchStream batches;
    std::vector<int> empty_years;
};

/// One batch per year of `range`, ascending. Rows outside the range are dropped.
inline PartitionResult partition_by_year(std::span<const FlightFeatureRow> rows, YearRange range) {
    if (range.last < range.first) throw Error("empty year range");
    std::vector<Batch> tmp(static_cast<std::size_t>(range.size()));
    for (int i = 0; i < range.size(); ++i) {
        tmp[static_cast<std::size_t>(i)].index = i;
        tmp[static_cast<std::size_t>(i)].year = range.first + i;
    }
    for (const auto& r : rows)
        if (range.contains(r.year)) tmp[static_cast<std::size_t>(r.year - range.first)].rows.push_back(r);

    PartitionResult out;
    for (auto& b : tmp) {
        if (b.empty()) out.empty_years.push_back(b.year);
        out.batches.push_back(std::make_shared<const Batch>(std::move(b)));
    }
    return out;
}

/// seq(i, b): batches i-b+1 .. i, where i is a stream position.
inline BatchSequence batch_sequence(const BatchStream& stream, int end_index, int size) {
    if (size < 1) throw Error("batch sequence size must be at least 1");
    if (end_index < 0 || end_index >= static_cast<int>(stream.size()))
        throw Error("batch index " + std::to_string(end_index) + " outside the stream");
    if (end_index - size + 1 < 0)
        throw WindowUnderflowError("sequence of " + std::to_string(size) + " batches ending at position " +
                                   std::to_string(end_index));
    BatchSequence seq;
    seq.end_index = end_index;
    seq.size = size;
    for (int i = end_index - size + 1; i <= end_index; ++i) seq.batches.push_back(stream[static_cast<std::size_t>(i)]);
    return seq;
}

/// Position of `year` in the stream, or -1.
inline int stream_position(const BatchStream& stream, int year) {
    for (std::size_t i = 0; i < stream.size(); ++i)
        if (stream[i]->year == year) return static_cast<int>(i);
    return -1;
}

/// seq(year, b) addressed by calendar year.
inline BatchSequence batch_sequence_for_year(const BatchStream& stream, int year, int size) {
    const int pos = stream_position(stream, year);
    if (pos < 0) throw Error("year " + std::to_string(year) + " not in stream");
    return batch_sequence(stream, pos, size);
}

/// The (n - b + 1) x b window matrix; row r is seq(r + b - 1, b).
inline std::vector<BatchSequence> sliding_window(const BatchStream& stream, int size) {
    const int n = static_cast<int>(stream.size());
    if (size < 1 || n < size)
        throw Error("sliding window of size " + std::to_string(size) + " over " + std::to_string(n) + " batches");
    std::vector<BatchSequence> out;
    out.reserve(static_cast<std::size_t>(n - size + 1));
    for (int i = size - 1; i < n; ++i) out.push_back(batch_sequence(stream, i, size));
    return out;
}

}  // namespace driftflow
