#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "topolog/error.hpp"
#include "topolog/parallel.hpp"
#include "topolog/rng.hpp"

namespace topolog {

/// Per-run feature rows (row-major) with binary labels: 0 benign, 1 anomalous.
struct FeatureMatrix {
    std::vector<std::string> row_ids;
    std::vector<std::string> column_names;
    std::vector<int> labels;
    std::vector<double> data;

    std::size_t rows() const { return labels.size(); }
    std::size_t cols() const { return column_names.size(); }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }

    void validate() const {
        if (row_ids.size() != labels.size() || data.size() != rows() * cols())
            throw Error(ErrorCode::RowMismatch, "feature matrix shape is inconsistent");
        for (double v : data)
            if (!std::isfinite(v)) throw Error(ErrorCode::DegenerateConfig, "feature matrix has NaN/Inf");
        for (int y : labels)
            if (y != 0 && y != 1) throw Error(ErrorCode::DegenerateConfig, "labels must be 0 or 1");
    }

    /// Sub-matrix of the given rows, all columns.
    FeatureMatrix select_rows(const std::vector<std::size_t>& idx) const {
        FeatureMatrix out;
        out.column_names = column_names;
        out.row_ids.reserve(idx.size());
        out.labels.reserve(idx.size());
        out.data.reserve(idx.size() * cols());
        for (auto r : idx) {
            out.row_ids.push_back(row_ids[r]);
            out.labels.push_back(labels[r]);
            out.data.insert(out.data.end(), data.begin() + static_cast<std::ptrdiff_t>(r * cols()),
                            data.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols()));
        }
        return out;
    }

    /// Columns whose names start with `prefix`, in order.
    FeatureMatrix select_prefix(std::string_view prefix) const {
        std::vector<std::size_t> keep;
        for (std::size_t c = 0; c < cols(); ++c)
            if (column_names[c].starts_with(prefix)) keep.push_back(c);
        FeatureMatrix out;
        out.row_ids = row_ids;
        out.labels = labels;
        for (auto c : keep) out.column_names.push_back(column_names[c]);
        out.data.reserve(rows() * keep.size());
        for (std::size_t r = 0; r < rows(); ++r)
            for (auto c : keep) out.data.push_back(at(r, c));
        return out;
    }
};

/// Column-wise concatenation; rows must describe the same runs in the same order.
inline FeatureMatrix concat(const FeatureMatrix& a, const FeatureMatrix& b, std::string_view prefix_a = {},
                            std::string_view prefix_b = {}) {
    if (a.rows() != b.rows() || a.row_ids != b.row_ids || a.labels != b.labels)
        throw Error(ErrorCode::RowMismatch, "feature matrices describe different runs");
    FeatureMatrix out;
    out.row_ids = a.row_ids;
    out.labels = a.labels;
    for (const auto& n : a.column_names) out.column_names.push_back(std::string(prefix_a) + n);
    for (const auto& n : b.column_names) out.column_names.push_back(std::string(prefix_b) + n);
    out.data.reserve(a.data.size() + b.data.size());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) out.data.push_back(a.at(r, c));
        for (std::size_t c = 0; c < b.cols(); ++c) out.data.push_back(b.at(r, c));
    }
    return out;
}

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = 0;     // 0: unbounded
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // 0: floor(sqrt(n_features)), at least 1
    bool bootstrap = true;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

inline std::size_t resolve_max_features(const ForestConfig& cfg, std::size_t n_features) {
    if (cfg.max_features > 0) return std::min(cfg.max_features, n_features);
    std::size_t r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features)));
    while (r * r > n_features) --r;
    while ((r + 1) * (r + 1) <= n_features) ++r;
    return std::max<std::size_t>(1, r);
}

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double weight[2] = {0.0, 0.0}; // bootstrap-weighted class totals
};

struct Tree {
    std::vector<TreeNode> nodes;

    /// Probability of class 1 at the leaf reached by `row`.
    template <class RowAccess>
    double predict_proba(RowAccess&& x) const {
        std::size_t i = 0;
        while (nodes[i].feature >= 0) {
            const auto& n = nodes[i];
            i = static_cast<std::size_t>(x(static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right);
        }
        const auto& leaf = nodes[i];
        return leaf.weight[1] / (leaf.weight[0] + leaf.weight[1]);
    }

    std::size_t split_count() const {
        return static_cast<std::size_t>(
            std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature >= 0; }));
    }
};

struct Forest {
    std::vector<Tree> trees;
    std::size_t n_features = 0;
    std::vector<double> impurity_decrease; // per feature, averaged over trees, unnormalized

    bool fitted() const { return !trees.empty(); }

    int predict(const FeatureMatrix& x, std::size_t row) const {
        double p1 = 0.0;
        double p0 = 0.0;
        for (const auto& t : trees) {
            const double p = t.predict_proba([&](std::size_t c) { return x.at(row, c); });
            p1 += p;
            p0 += 1.0 - p;
        }
        return p1 > p0 ? 1 : 0;
    }
};

namespace detail {

inline double gini(double w0, double w1) {
    const double w = w0 + w1;
    if (w <= 0.0) return 0.0;
    const double a = w0 / w;
    const double b = w1 / w;
    return 1.0 - a * a - b * b;
}

/// CART growth on a column-major copy of the training data.
class TreeGrower {
public:
    TreeGrower(const std::vector<std::vector<double>>& columns, const std::vector<int>& labels,
               const std::vector<double>& weights, const ForestConfig& cfg, std::uint64_t seed)
        : cols_(columns), labels_(labels), weights_(weights), cfg_(cfg), rng_(seed),
          max_features_(resolve_max_features(cfg, columns.size())), importance_(columns.size(), 0.0) {}

    Tree grow() {
        std::vector<std::size_t> samples;
        for (std::size_t i = 0; i < weights_.size(); ++i)
            if (weights_[i] > 0.0) samples.push_back(i);
        total_weight_ = 0.0;
        for (auto i : samples) total_weight_ += weights_[i];

        std::vector<std::size_t> live(cols_.size());
        std::iota(live.begin(), live.end(), std::size_t{0});

        struct Pending {
            std::size_t node;
            std::vector<std::size_t> samples;
            std::vector<std::size_t> live;
            std::size_t depth;
        };
        Tree tree;
        tree.nodes.emplace_back();
        std::vector<Pending> stack;
        stack.push_back({0, std::move(samples), std::move(live), 0});
        while (!stack.empty()) {
            Pending job = std::move(stack.back());
            stack.pop_back();
            double w[2] = {0.0, 0.0};
            for (auto i : job.samples) w[labels_[i]] += weights_[i];
            tree.nodes[job.node].weight[0] = w[0];
            tree.nodes[job.node].weight[1] = w[1];

            const bool depth_limited = cfg_.max_depth > 0 && job.depth >= cfg_.max_depth;
            if (job.samples.size() < cfg_.min_samples_split || w[0] == 0.0 || w[1] == 0.0 || depth_limited)
                continue;

            const Split split = find_split(job.samples, job.live, w);
            if (split.feature < 0) continue;

            std::vector<std::size_t> left, right;
            const auto& col = cols_[static_cast<std::size_t>(split.feature)];
            for (auto i : job.samples) (col[i] <= split.threshold ? left : right).push_back(i);

            importance_[static_cast<std::size_t>(split.feature)] += split.weighted_decrease / total_weight_;

            const auto l = static_cast<std::int32_t>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto& n = tree.nodes[job.node];
            n.feature = split.feature;
            n.threshold = split.threshold;
            n.left = l;
            n.right = l + 1;
            stack.push_back({static_cast<std::size_t>(l + 1), std::move(right), job.live, job.depth + 1});
            stack.push_back({static_cast<std::size_t>(l), std::move(left), std::move(job.live), job.depth + 1});
        }
        return tree;
    }

    const std::vector<double>& importance() const { return importance_; }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double decrease = -1.0;          // gini(parent) - weighted child gini
        double weighted_decrease = 0.0;  // decrease scaled by node weight
    };

    /// Draws features without replacement until `max_features` non-constant
    /// ones have been evaluated. Features found constant are dropped from
    /// `live`, since they stay constant in every descendant.
    Split find_split(const std::vector<std::size_t>& samples, std::vector<std::size_t>& live, const double* w) {
        Split best;
        const double node_w = w[0] + w[1];
        const double node_gini = gini(w[0], w[1]);
        std::size_t visited = 0;
        std::size_t i = 0;
        std::vector<std::size_t> constant;
        while (visited < max_features_ && i < live.size()) {
            const std::size_t j = i + static_cast<std::size_t>(rng_.below(live.size() - i));
            std::swap(live[i], live[j]);
            const std::size_t f = live[i++];
            const auto& col = cols_[f];

            scratch_.clear();
            for (auto s : samples) scratch_.push_back({col[s], s});
            auto [mn, mx] = std::minmax_element(scratch_.begin(), scratch_.end(),
                                                [](const auto& a, const auto& b) { return a.first < b.first; });
            if (mn->first == mx->first) {
                constant.push_back(f);
                continue;
            }
            ++visited;
            std::sort(scratch_.begin(), scratch_.end());

            double lw[2] = {0.0, 0.0};
            std::size_t left_n = 0;
            for (std::size_t k = 0; k + 1 < scratch_.size(); ++k) {
                const auto s = scratch_[k].second;
                lw[labels_[s]] += weights_[s];
                ++left_n;
                const double v = scratch_[k].first;
                const double next = scratch_[k + 1].first;
                if (v == next) continue;
                if (left_n < cfg_.min_samples_leaf || scratch_.size() - left_n < cfg_.min_samples_leaf) continue;
                const double rw0 = w[0] - lw[0];
                const double rw1 = w[1] - lw[1];
                const double wl = lw[0] + lw[1];
                const double wr = rw0 + rw1;
                const double decrease = node_gini - (wl / node_w) * gini(lw[0], lw[1]) - (wr / node_w) * gini(rw0, rw1);
                double thr = v + (next - v) / 2.0;
                if (thr >= next || thr < v) thr = v;
                const bool better = decrease > best.decrease ||
                                    (decrease == best.decrease &&
                                     (static_cast<int>(f) < best.feature ||
                                      (static_cast<int>(f) == best.feature && thr < best.threshold)));
                if (better) {
                    best.feature = static_cast<int>(f);
                    best.threshold = thr;
                    best.decrease = decrease;
                }
            }
        }
        if (!constant.empty()) {
            std::sort(constant.begin(), constant.end());
            std::erase_if(live, [&](std::size_t f) { return std::binary_search(constant.begin(), constant.end(), f); });
        }
        if (best.feature >= 0) {
            best.weighted_decrease = node_w * std::max(best.decrease, 0.0);
        }
        return best;
    }

    const std::vector<std::vector<double>>& cols_;
    const std::vector<int>& labels_;
    const std::vector<double>& weights_;
    const ForestConfig& cfg_;
    Rng rng_;
    std::size_t max_features_;
    std::vector<double> importance_;
    double total_weight_ = 0.0;
    std::vector<std::pair<double, std::size_t>> scratch_;
};

} // namespace detail

/// Bagged CART forest with gini splits and per-node feature subsampling.
/// Tree t is grown from sub-seed derive_seed(cfg.seed, t), so the result is
/// identical for any `cfg.jobs`.
inline Forest fit_forest(const FeatureMatrix& x, const ForestConfig& cfg) {
    x.validate();
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (n == 0) throw Error(ErrorCode::TooFewSamples, "no training rows");
    const bool has0 = std::find(x.labels.begin(), x.labels.end(), 0) != x.labels.end();
    const bool has1 = std::find(x.labels.begin(), x.labels.end(), 1) != x.labels.end();
    if (!has0 || !has1) throw Error(ErrorCode::SingleClass, "training labels contain a single class");
    if (cfg.n_trees == 0) throw Error(ErrorCode::DegenerateConfig, "n_trees must be positive");

    std::vector<std::vector<double>> columns(p, std::vector<double>(n));
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < p; ++c) columns[c][r] = x.at(r, c);

    Forest forest;
    forest.n_features = p;
    forest.trees.resize(cfg.n_trees);
    std::vector<std::vector<double>> importances(cfg.n_trees);

    parallel_for(cfg.n_trees, cfg.jobs, [&](std::size_t t) {
        const std::uint64_t seed = derive_seed(cfg.seed, t);
        std::vector<double> weights(n, 1.0);
        if (cfg.bootstrap) {
            Rng boot(derive_seed(seed, 0xB007));
            std::fill(weights.begin(), weights.end(), 0.0);
            for (std::size_t k = 0; k < n; ++k) weights[static_cast<std::size_t>(boot.below(n))] += 1.0;
        }
        detail::TreeGrower grower(columns, x.labels, weights, cfg, seed);
        forest.trees[t] = grower.grow();
        importances[t] = grower.importance();
    });

    forest.impurity_decrease.assign(p, 0.0);
    for (const auto& imp : importances)
        for (std::size_t c = 0; c < p; ++c) forest.impurity_decrease[c] += imp[c];
    for (auto& v : forest.impurity_decrease) v /= static_cast<double>(cfg.n_trees);
    return forest;
}

/// Mean decrease in impurity per feature, normalized to sum 1 (all zeros when
/// no tree has a split).
inline std::vector<double> mdi_importance(const Forest& forest) {
    if (!forest.fitted()) throw Error(ErrorCode::Unfitted, "forest has not been fitted");
    std::vector<double> out = forest.impurity_decrease;
    const double total = std::accumulate(out.begin(), out.end(), 0.0);
    if (total > 0.0)
        for (auto& v : out) v /= total;
    return out;
}

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation across folds
    std::vector<double> folds;
};

struct FoldScores {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Percent scores with the anomalous class as positive. Undefined ratios are 0.
inline FoldScores score_predictions(const std::vector<int>& truth, const std::vector<int>& pred) {
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (pred[i] == 1) (truth[i] == 1 ? tp : fp) += 1;
        else (truth[i] == 1 ? fn : tn) += 1;
    }
    FoldScores s;
    const double n = tp + fp + fn + tn;
    s.accuracy = n > 0 ? (tp + tn) / n : 0.0;
    s.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    s.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    s.accuracy *= 100;
    s.precision *= 100;
    s.recall *= 100;
    s.f1 *= 100;
    return s;
}

inline MetricSummary summarize(std::vector<double> folds) {
    MetricSummary m;
    m.folds = std::move(folds);
    const auto k = static_cast<double>(m.folds.size());
    if (m.folds.empty()) return m;
    m.mean = std::accumulate(m.folds.begin(), m.folds.end(), 0.0) / k;
    if (m.folds.size() > 1) {
        double ss = 0.0;
        for (double v : m.folds) ss += (v - m.mean) * (v - m.mean);
        m.std = std::sqrt(ss / (k - 1));
    }
    return m;
}

struct CvReport {
    std::vector<std::string> column_names;
    std::vector<std::string> row_ids;
    std::size_t folds = 0;
    std::uint64_t seed = 0;
    MetricSummary accuracy, precision, recall, f1;
    std::vector<double> mdi;
    std::vector<int> fold_of; // fold index per row
};

/// Stratified fold assignment: each class is shuffled with a seeded stream
/// and dealt round-robin, continuing the deal across classes so fold sizes
/// differ by at most one.
inline std::vector<int> stratified_folds(const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
    std::vector<int> fold_of(labels.size(), -1);
    Rng rng(derive_seed(seed, 0xF01D));
    std::size_t deal = 0;
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) members.push_back(i);
        rng.shuffle(std::span<std::size_t>(members));
        for (auto i : members) fold_of[i] = static_cast<int>(deal++ % k);
    }
    return fold_of;
}

/// k-fold cross-validation over an explicit fold assignment.
inline CvReport cross_validate(const FeatureMatrix& x, const ForestConfig& cfg, const std::vector<int>& fold_of,
                               std::size_t k) {
    x.validate();
    if (fold_of.size() != x.rows()) throw Error(ErrorCode::RowMismatch, "fold assignment length mismatch");
    CvReport report;
    report.column_names = x.column_names;
    report.row_ids = x.row_ids;
    report.folds = k;
    report.seed = cfg.seed;
    report.fold_of = fold_of;
    std::vector<double> acc, prec, rec, f1;
    std::vector<double> mdi(x.cols(), 0.0);
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < x.rows(); ++i)
            (fold_of[i] == static_cast<int>(f) ? test : train).push_back(i);
        const FeatureMatrix tr = x.select_rows(train);
        const Forest forest = fit_forest(tr, cfg);
        std::vector<int> truth, pred;
        for (auto i : test) {
            truth.push_back(x.labels[i]);
            pred.push_back(forest.predict(x, i));
        }
        const FoldScores s = score_predictions(truth, pred);
        acc.push_back(s.accuracy);
        prec.push_back(s.precision);
        rec.push_back(s.recall);
        f1.push_back(s.f1);
        const auto imp = mdi_importance(forest);
        for (std::size_t c = 0; c < mdi.size(); ++c) mdi[c] += imp[c];
    }
    const double total = std::accumulate(mdi.begin(), mdi.end(), 0.0);
    if (total > 0.0)
        for (auto& v : mdi) v /= total;
    report.accuracy = summarize(std::move(acc));
    report.precision = summarize(std::move(prec));
    report.recall = summarize(std::move(rec));
    report.f1 = summarize(std::move(f1));
    report.mdi = std::move(mdi);
    return report;
}

inline CvReport cross_validate(const FeatureMatrix& x, const ForestConfig& cfg, std::size_t k = 10) {
    x.validate();
    if (k < 2) throw Error(ErrorCode::TooFewSamples, "need at least 2 folds");
    for (int cls = 0; cls <= 1; ++cls) {
        const auto members = static_cast<std::size_t>(std::count(x.labels.begin(), x.labels.end(), cls));
        if (members < k)
            throw Error(ErrorCode::TooFewSamples, "class " + std::to_string(cls) + " has " + std::to_string(members) +
                                                      " rows, fewer than " + std::to_string(k) + " folds");
    }
    return cross_validate(x, cfg, stratified_folds(x.labels, k, cfg.seed), k);
}

inline nlohmann::ordered_json to_json(const MetricSummary& m) {
    nlohmann::ordered_json j;
    j["mean"] = m.mean;
    j["std"] = m.std;
    j["folds"] = m.folds;
    return j;
}

inline nlohmann::ordered_json to_json(const CvReport& r) {
    nlohmann::ordered_json j;
    j["folds"] = r.folds;
    j["seed"] = r.seed;
    j["n_rows"] = r.row_ids.size();
    nlohmann::ordered_json metrics;
    metrics["accuracy"] = to_json(r.accuracy);
    metrics["precision"] = to_json(r.precision);
    metrics["recall"] = to_json(r.recall);
    metrics["f1"] = to_json(r.f1);
    j["metrics"] = std::move(metrics);
    j["columns"] = r.column_names;
    j["mdi"] = r.mdi;
    j["row_ids"] = r.row_ids;
    j["fold_of"] = r.fold_of;
    return j;
}

} // namespace topolog
