#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "driftflow/learn/encoding.hpp"

namespace driftflow {

/// One CART node. Leaves have feature == -1.
struct TreeNode {
    int feature = -1;
    bool categorical = false;
    double threshold = 0.0;  // numeric: go left when x <= threshold
    int level = -1;          // categorical: go left when code == level
    int left = -1;
    int right = -1;
    int majority_child = -1;  // taken by levels unseen at fit time
    int label = 0;
};

struct TreeParams {
    /// Features considered per split; 0 or >= total means all of them.
    std::size_t predictors_per_split = 0;
    std::size_t min_node_size = 1;
    std::size_t max_depth = 0;  // 0 = unlimited
};

/// Binary CART classifier with Gini impurity. Features 0..numeric-1 are the
/// normalized numerics, the next kCategoricalCount are categorical codes split
/// one level against the rest.
class DecisionTree {
public:
    /// Fits on the multiset of row indices `sample` (duplicates allowed).
    static DecisionTree fit(const EncodedData& data, std::vector<std::size_t> sample, const TreeParams& params,
                            std::mt19937_64& rng) {
        DecisionTree tree;
        tree.numeric_ = data.numeric;
        if (sample.empty()) throw Error("decision tree on zero rows");
        const std::size_t features = data.numeric + kCategoricalCount;
        std::vector<std::size_t> candidates(features);

        struct Work {
            int node;
            std::size_t begin, end, depth;
        };
        tree.nodes_.push_back({});
        std::vector<Work> stack{{0, 0, sample.size(), 0}};
        std::vector<std::pair<double, int>> column;

        while (!stack.empty()) {
            const Work w = stack.back();
            stack.pop_back();
            const std::size_t n = w.end - w.begin;
            std::size_t pos = 0;
            for (std::size_t i = w.begin; i < w.end; ++i) pos += static_cast<std::size_t>(data.y[sample[i]]);
            tree.nodes_[static_cast<std::size_t>(w.node)].label = 2 * pos > n ? 1 : 0;
            if (pos == 0 || pos == n || n <= params.min_node_size || n < 2 ||
                (params.max_depth > 0 && w.depth >= params.max_depth))
                continue;

            // Sample the candidate features, then evaluate them in index order.
            std::iota(candidates.begin(), candidates.end(), 0);
            std::size_t m = params.predictors_per_split;
            if (m == 0 || m >= features) {
                m = features;
            } else {
                for (std::size_t i = 0; i < m; ++i) {
                    std::uniform_int_distribution<std::size_t> pick(i, features - 1);
                    std::swap(candidates[i], candidates[pick(rng)]);
                }
                std::sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(m));
            }

            const double parent = gini_weighted(pos, n);
            double best_impurity = parent - 1e-12;
            int best_feature = -1;
            double best_threshold = 0.0;
            int best_level = -1;

            for (std::size_t c = 0; c < m; ++c) {
                const std::size_t f = candidates[c];
                if (f < data.numeric) {
                    column.clear();
                    for (std::size_t i = w.begin; i < w.end; ++i)
                        column.emplace_back(data.numeric_row(sample[i])[f], data.y[sample[i]]);
                    std::sort(column.begin(), column.end());
                    std::size_t left_n = 0, left_pos = 0;
                    for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                        ++left_n;
                        left_pos += static_cast<std::size_t>(column[i].second);
                        if (column[i].first == column[i + 1].first) continue;
                        const double imp = gini_weighted(left_pos, left_n) + gini_weighted(pos - left_pos, n - left_n);
                        if (imp < best_impurity) {
                            best_impurity = imp;
                            best_feature = static_cast<int>(f);
                            best_threshold = 0.5 * (column[i].first + column[i + 1].first);
                        }
                    }
                } else {
                    const std::size_t cf = f - data.numeric;
                    std::vector<std::pair<std::size_t, std::size_t>> per_level;  // (count, positives)
                    for (std::size_t i = w.begin; i < w.end; ++i) {
                        const int code = data.cat_row(sample[i])[cf];
                        if (code < 0) continue;
                        if (static_cast<std::size_t>(code) >= per_level.size())
                            per_level.resize(static_cast<std::size_t>(code) + 1, {0, 0});
                        auto& lv = per_level[static_cast<std::size_t>(code)];
                        ++lv.first;
                        lv.second += static_cast<std::size_t>(data.y[sample[i]]);
                    }
                    for (std::size_t l = 0; l < per_level.size(); ++l) {
                        const auto [ln, lp] = per_level[l];
                        if (ln == 0 || ln == n) continue;
                        const double imp = gini_weighted(lp, ln) + gini_weighted(pos - lp, n - ln);
                        if (imp < best_impurity) {
                            best_impurity = imp;
                            best_feature = static_cast<int>(f);
                            best_level = static_cast<int>(l);
                        }
                    }
                }
            }
            if (best_feature < 0) continue;

            const bool categorical = static_cast<std::size_t>(best_feature) >= data.numeric;
            auto goes_left = [&](std::size_t row) {
                if (categorical) return data.cat_row(row)[static_cast<std::size_t>(best_feature) - data.numeric] == best_level;
                return data.numeric_row(row)[best_feature] <= best_threshold;
            };
            const auto mid = std::stable_partition(sample.begin() + static_cast<std::ptrdiff_t>(w.begin),
                                                   sample.begin() + static_cast<std::ptrdiff_t>(w.end), goes_left);
            const auto split = static_cast<std::size_t>(mid - sample.begin());

            const int left = static_cast<int>(tree.nodes_.size());
            tree.nodes_.push_back({});
            const int right = static_cast<int>(tree.nodes_.size());
            tree.nodes_.push_back({});
            auto& node = tree.nodes_[static_cast<std::size_t>(w.node)];
            node.feature = best_feature;
            node.categorical = categorical;
            node.threshold = best_threshold;
            node.level = best_level;
            node.left = left;
            node.right = right;
            node.majority_child = split - w.begin >= w.end - split ? left : right;
            stack.push_back({right, split, w.end, w.depth + 1});
            stack.push_back({left, w.begin, split, w.depth + 1});
        }
        return tree;
    }

    int predict(const EncodedData& data, std::size_t i) const {
        const double* x = data.numeric_row(i);
        const int* cats = data.cat_row(i);
        std::size_t at = 0;
        while (nodes_[at].feature >= 0) {
            const auto& nd = nodes_[at];
            int next;
            if (nd.categorical) {
                const int code = cats[static_cast<std::size_t>(nd.feature) - numeric_];
                next = code < 0 ? nd.majority_child : (code == nd.level ? nd.left : nd.right);
            } else {
                next = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
            }
            at = static_cast<std::size_t>(next);
        }
        return nodes_[at].label;
    }

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    std::size_t numeric_count() const noexcept { return numeric_; }

    static DecisionTree from_nodes(std::size_t numeric, std::vector<TreeNode> nodes) {
        DecisionTree t;
        t.numeric_ = numeric;
        t.nodes_ = std::move(nodes);
        return t;
    }

private:
    // n * gini = 2 * pos * neg / n
    static double gini_weighted(std::size_t pos, std::size_t n) {
        if (n == 0) return 0.0;
        return 2.0 * static_cast<double>(pos) * static_cast<double>(n - pos) / static_cast<double>(n);
    }

    std::size_t numeric_ = 0;
    std::vector<TreeNode> nodes_;
};

struct ForestParams {
    std::size_t trees_count = 100;
    TreeParams tree;
    bool bootstrap = true;
};

/// Bagged CART trees with per-split feature sampling and majority vote.
class RandomForest {
public:
    static RandomForest fit(const EncodedData& data, const ForestParams& params, std::uint64_t seed) {
        if (params.trees_count == 0) throw Error("random forest needs at least one tree");
        if (data.rows == 0) throw Error("random forest on zero rows");
        RandomForest rf;
        rf.trees_.reserve(params.trees_count);
        for (std::size_t t = 0; t < params.trees_count; ++t) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(t)};
            std::mt19937_64 rng(seq);
            std::vector<std::size_t> sample(data.rows);
            if (params.bootstrap) {
                std::uniform_int_distribution<std::size_t> pick(0, data.rows - 1);
                for (auto& s : sample) s = pick(rng);
            } else {
                std::iota(sample.begin(), sample.end(), 0);
            }
            rf.trees_.push_back(DecisionTree::fit(data, std::move(sample), params.tree, rng));
        }
        return rf;
    }

    int predict(const EncodedData& data, std::size_t i) const {
        std::size_t votes = 0;
        for (const auto& t : trees_) votes += static_cast<std::size_t>(t.predict(data, i));
        return 2 * votes > trees_.size() ? 1 : 0;
    }

    const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
    std::vector<DecisionTree>& trees() noexcept { return trees_; }

    static RandomForest from_trees(std::vector<DecisionTree> trees) {
        RandomForest rf;
        rf.trees_ = std::move(trees);
        return rf;
    }

private:
    std::vector<DecisionTree> trees_;
};

}  // namespace driftflow
