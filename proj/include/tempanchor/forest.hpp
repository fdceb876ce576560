#ifndef TEMPANCHOR_FOREST_HPP
#define TEMPANCHOR_FOREST_HPP

// Random-forest Gini importance for feature selection.
//
// CART trees grown on bootstrap samples; at each node a random subset of
// max_features features (default floor(sqrt(F))) is searched first, and the
// remaining features are searched in random order only when none of the
// subset admits a split. The importance of a feature is the sum, over every
// split on it in every tree, of n_node * gini(node) - n_left * gini(left) -
// n_right * gini(right), normalized so all importances sum to 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tempanchor/error.hpp"
#include "tempanchor/features.hpp"
#include "tempanchor/rng.hpp"

namespace tempanchor {

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = 0; // 0 = unlimited
    std::size_t min_samples_split = 2;
    bool bootstrap = true;
    std::size_t max_features = 0; // 0 = floor(sqrt(F))

    bool operator==(const ForestConfig&) const = default;
};

namespace detail {

/// Column-major sample table for tree growing.
struct TreeData {
    std::size_t n_samples = 0;
    std::size_t n_features = 0;
    std::vector<double> columns; // feature f occupies [f * n_samples, (f + 1) * n_samples)
    std::vector<int> labels;

    double value(std::size_t sample, std::size_t feature) const { return columns[feature * n_samples + sample]; }
};

inline double gini(double n0, double n1) {
    const double n = n0 + n1;
    if (n <= 0.0) return 0.0;
    const double p0 = n0 / n, p1 = n1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

class TreeGrower {
public:
    TreeGrower(const TreeData& data, const ForestConfig& config, Rng& rng, std::vector<double>& importance)
        : data_(data), config_(config), rng_(rng), importance_(importance) {}

    void grow(std::vector<std::size_t> samples, std::size_t depth) {
        double n1 = 0.0;
        for (auto s : samples) n1 += data_.labels[s];
        const double n = static_cast<double>(samples.size());
        const double n0 = n - n1;
        if (n0 == 0.0 || n1 == 0.0) return;
        if (samples.size() < config_.min_samples_split) return;
        if (config_.max_depth != 0 && depth >= config_.max_depth) return;

        std::vector<std::size_t> order(data_.n_features);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng_.shuffle(std::span<std::size_t>(order));
        const std::size_t mtry = config_.max_features != 0
                                     ? std::min(config_.max_features, data_.n_features)
                                     : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(
                                                                    std::sqrt(static_cast<double>(data_.n_features)))));

        const double parent = n * gini(n0, n1);
        Split best;
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (k >= mtry && best.valid) break;
            consider(order[k], samples, parent, best);
        }
        if (!best.valid) return;

        importance_[best.feature] += best.decrease;
        std::vector<std::size_t> left, right;
        for (auto s : samples) (data_.value(s, best.feature) <= best.threshold ? left : right).push_back(s);
        samples.clear();
        samples.shrink_to_fit();
        grow(std::move(left), depth + 1);
        grow(std::move(right), depth + 1);
    }

private:
    struct Split {
        bool valid = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double decrease = 0.0;
    };

    void consider(std::size_t feature, const std::vector<std::size_t>& samples, double parent, Split& best) {
        scratch_.clear();
        for (auto s : samples) scratch_.emplace_back(data_.value(s, feature), data_.labels[s]);
        std::sort(scratch_.begin(), scratch_.end());
        const double n = static_cast<double>(scratch_.size());
        double total1 = 0.0;
        for (const auto& p : scratch_) total1 += p.second;
        double left0 = 0.0, left1 = 0.0;
        for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
            (scratch_[i].second ? left1 : left0) += 1.0;
            if (scratch_[i].first == scratch_[i + 1].first) continue;
            const double nl = left0 + left1;
            const double nr = n - nl;
            const double right1 = total1 - left1;
            const double right0 = nr - right1;
            const double decrease = parent - nl * gini(left0, left1) - nr * gini(right0, right1);
            if (!best.valid || decrease > best.decrease) {
                best.valid = true;
                best.feature = feature;
                best.decrease = std::max(0.0, decrease);
                best.threshold = 0.5 * (scratch_[i].first + scratch_[i + 1].first);
                if (best.threshold >= scratch_[i + 1].first) best.threshold = scratch_[i].first;
            }
        }
    }

    const TreeData& data_;
    const ForestConfig& config_;
    Rng& rng_;
    std::vector<double>& importance_;
    std::vector<std::pair<double, int>> scratch_;
};

} // namespace detail

/// Normalized Gini importances of each column of `rows` (one row per
/// sample) for binary `labels` in {0, 1}. Tree t draws from its own stream
/// derived from (seed, t).
inline std::vector<double> gini_importance(const std::vector<std::vector<double>>& rows,
                                           const std::vector<int>& labels, const ForestConfig& config,
                                           std::uint64_t seed) {
    detail::require(!rows.empty() && rows.size() == labels.size(), "forest: rows and labels must align");
    detail::require(config.n_trees >= 1, "forest: need at least one tree");
    detail::require(config.min_samples_split >= 2, "forest: min_samples_split must be >= 2");
    const std::size_t n = rows.size();
    const std::size_t n_features = rows.front().size();
    detail::require(n_features >= 1, "forest: need at least one feature");

    std::size_t per_class[2] = {0, 0};
    for (int y : labels) {
        detail::require(y == 0 || y == 1, "forest: labels must be 0 or 1");
        per_class[y]++;
    }
    if (per_class[0] < 2 || per_class[1] < 2) {
        throw PreconditionError("forest: need at least 2 samples of each class");
    }

    detail::TreeData data{n, n_features, std::vector<double>(n * n_features), labels};
    bool any_varies = false;
    for (std::size_t i = 0; i < n; ++i) {
        detail::require(rows[i].size() == n_features, "forest: ragged feature rows");
        for (std::size_t f = 0; f < n_features; ++f) {
            data.columns[f * n + i] = rows[i][f];
            if (rows[i][f] != rows[0][f]) any_varies = true;
        }
    }
    if (!any_varies) throw PreconditionError("forest: every feature is constant; no split is possible");

    std::vector<double> importance(n_features, 0.0);
    for (std::size_t t = 0; t < config.n_trees; ++t) {
        Rng rng(derive_seed(seed, "tree", t));
        std::vector<std::size_t> samples(n);
        if (config.bootstrap) {
            for (auto& s : samples) s = static_cast<std::size_t>(rng.below(n));
        } else {
            std::iota(samples.begin(), samples.end(), std::size_t{0});
        }
        detail::TreeGrower(data, config, rng, importance).grow(std::move(samples), 0);
    }
    const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
    if (total <= 0.0) {
        throw PreconditionError("forest: no split reduced impurity (are the classes separable at all?)");
    }
    for (auto& v : importance) v /= total;
    return importance;
}

struct SelectionReport {
    std::vector<std::pair<std::string, double>> ranking; // descending importance
    std::vector<std::string> selected;
    ForestConfig forest;
    std::uint64_t seed = 0;

    bool operator==(const SelectionReport&) const = default;
};

/// First k ids of the ranking.
inline std::vector<std::string> select_top_k(const SelectionReport& report, std::size_t k) {
    if (k > report.ranking.size()) {
        throw PreconditionError("select: k = " + std::to_string(k) + " exceeds the " +
                                std::to_string(report.ranking.size()) + " ranked features");
    }
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < k; ++i) ids.push_back(report.ranking[i].first);
    return ids;
}

/// Ranks named columns by Gini importance; ties broken by id. `k` is clamped
/// to the number of columns when filling `selected`.
inline SelectionReport rank_columns(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                                    const std::vector<std::string>& ids, const ForestConfig& config,
                                    std::uint64_t seed, std::size_t k) {
    const auto importance = gini_importance(rows, labels, config, seed);
    detail::require(ids.size() == importance.size(), "forest: id count does not match column count");
    SelectionReport report;
    report.forest = config;
    report.seed = seed;
    for (std::size_t i = 0; i < ids.size(); ++i) report.ranking.emplace_back(ids[i], importance[i]);
    std::sort(report.ranking.begin(), report.ranking.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    report.selected = select_top_k(report, std::min(k, report.ranking.size()));
    return report;
}

/// Ranks catalog features (optionally restricted to `subset` ids) over a set
/// of labelled feature vectors.
inline SelectionReport rank_by_gini(const std::vector<FeatureVector>& features, const ForestConfig& config,
                                    std::uint64_t seed, std::size_t k = 30,
                                    const std::vector<std::string>& subset = {}) {
    const auto ids = subset.empty() ? feature_ids() : subset;
    std::vector<std::size_t> columns;
    for (const auto& id : ids) columns.push_back(feature_index(id));
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (const auto& fv : features) {
        std::vector<double> row;
        for (auto c : columns) row.push_back(fv.values[c]);
        rows.push_back(std::move(row));
        labels.push_back(fv.label == Label::condition ? 1 : 0);
    }
    detail::require(!rows.empty(), "select: no feature vectors");
    return rank_columns(rows, labels, ids, config, seed, k);
}

inline nlohmann::ordered_json to_json(const ForestConfig& c) {
    return {{"n_trees", c.n_trees},
            {"max_depth", c.max_depth},
            {"min_samples_split", c.min_samples_split},
            {"bootstrap", c.bootstrap},
            {"max_features", c.max_features}};
}

inline ForestConfig forest_config_from_json(const nlohmann::json& j) {
    ForestConfig c;
    c.n_trees = j.value("n_trees", c.n_trees);
    c.max_depth = j.value("max_depth", c.max_depth);
    c.min_samples_split = j.value("min_samples_split", c.min_samples_split);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
    c.max_features = j.value("max_features", c.max_features);
    return c;
}

inline nlohmann::ordered_json to_json(const SelectionReport& r) {
    nlohmann::ordered_json j;
    auto ranking = nlohmann::ordered_json::array();
    for (const auto& [id, score] : r.ranking) ranking.push_back({{"feature_id", id}, {"importance", score}});
    j["ranking"] = std::move(ranking);
    j["selected"] = r.selected;
    j["forest_config"] = to_json(r.forest);
    j["seed"] = r.seed;
    return j;
}

inline SelectionReport selection_from_json(const nlohmann::json& j) {
    SelectionReport r;
    for (const auto& e : j.at("ranking")) {
        r.ranking.emplace_back(e.at("feature_id").get<std::string>(), e.at("importance").get<double>());
    }
    r.selected = j.at("selected").get<std::vector<std::string>>();
    r.forest = forest_config_from_json(j.at("forest_config"));
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

inline SelectionReport load_selection(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open selection report '" + path + "'");
    try {
        return selection_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": malformed selection report (" + e.what() + ")");
    }
}

} // namespace tempanchor

#endif // TEMPANCHOR_FOREST_HPP
