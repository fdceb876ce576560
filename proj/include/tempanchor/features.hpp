#ifndef TEMPANCHOR_FEATURES_HPP
#define TEMPANCHOR_FEATURES_HPP

// Fixed catalog of statistical and temporal features of a scalar series.
//
// Conventions shared by the catalog (x has length n >= 1, mean m, population
// standard deviation s):
//  - variance and standard deviation are population (divide by n);
//  - quantiles interpolate linearly between order statistics at q * (n - 1);
//  - anything divided by s, or by a zero-length difference set, is 0 when that
//    denominator vanishes (constant series, n = 1, lag >= n). No feature ever
//    yields NaN or infinity.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tempanchor/anchor.hpp"
#include "tempanchor/error.hpp"

namespace tempanchor {

struct FeatureInfo {
    std::string_view id;
    std::string_view description;
    bool order_sensitive;
};

inline constexpr std::array<FeatureInfo, 44> kFeatureCatalog{{
    {"mean", "arithmetic mean", false},
    {"variance", "population variance", false},
    {"standard_deviation", "population standard deviation", false},
    {"median", "median (0.5 quantile)", false},
    {"minimum", "smallest value", false},
    {"maximum", "largest value", false},
    {"range", "maximum - minimum", false},
    {"sum", "sum of values", false},
    {"length", "number of steps", false},
    {"quantile_0.1", "0.1 quantile", false},
    {"quantile_0.25", "0.25 quantile", false},
    {"quantile_0.75", "0.75 quantile", false},
    {"quantile_0.9", "0.9 quantile", false},
    {"skewness", "m3 / m2^1.5 from central moments; 0 if constant", false},
    {"kurtosis", "excess kurtosis m4 / m2^2 - 3; 0 if constant", false},
    {"abs_energy", "sum of squares", false},
    {"mean_change", "(x[n-1] - x[0]) / (n - 1); 0 if n < 2", true},
    {"mean_abs_change", "mean |x[i+1] - x[i]|; 0 if n < 2", true},
    {"number_mean_crossings", "count of i with (x[i] > m) != (x[i+1] > m)", true},
    {"count_above_mean", "count of x[i] > m", false},
    {"count_below_mean", "count of x[i] < m", false},
    {"longest_run_above_mean", "longest run of consecutive x[i] > m", true},
    {"longest_run_below_mean", "longest run of consecutive x[i] < m", true},
    {"autocorrelation_lag_1", "sum (x[t]-m)(x[t+1]-m) / ((n-1) s^2); 0 if undefined", true},
    {"autocorrelation_lag_2", "as lag 1 with lag 2", true},
    {"autocorrelation_lag_5", "as lag 1 with lag 5", true},
    {"autocorrelation_lag_10", "as lag 1 with lag 10", true},
    {"linear_trend_slope", "least-squares slope against t = 0..n-1; 0 if n < 2", true},
    {"linear_trend_intercept", "least-squares intercept; x[0] if n < 2", true},
    {"linear_trend_rvalue", "Pearson r of x against t; 0 if undefined", true},
    {"number_peaks_3", "count of i with x[i] > x[i+-j] for j = 1..3", true},
    {"first_location_of_maximum", "first argmax / n", true},
    {"last_location_of_maximum", "(last argmax + 1) / n", true},
    {"first_location_of_minimum", "first argmin / n", true},
    {"last_location_of_minimum", "(last argmin + 1) / n", true},
    {"binned_entropy_10", "entropy of a 10-bin equal-width histogram over [min, max]", false},
    {"c3_lag_1", "mean x[i+2] x[i+1] x[i]; 0 if n < 3", true},
    {"cid_ce", "sqrt(sum of squared successive differences of the z-scored series)", true},
    {"ratio_beyond_1_sigma", "fraction with |x - m| > s", false},
    {"ratio_beyond_2_sigma", "fraction with |x - m| > 2 s", false},
    {"mean_abs_value", "mean |x|", false},
    {"root_mean_square", "sqrt(mean x^2)", false},
    {"index_max_abs_change", "(first argmax_i |x[i+1] - x[i]| + 1) / n; 0 if n < 2", true},
    {"mean_second_derivative_central", "mean (x[i+2] - 2 x[i+1] + x[i]) / 2; 0 if n < 3", true},
}};

inline constexpr std::size_t kFeatureCount = kFeatureCatalog.size();

inline std::vector<std::string> feature_ids() {
    std::vector<std::string> ids;
    for (const auto& f : kFeatureCatalog) ids.emplace_back(f.id);
    return ids;
}

inline std::vector<std::string> order_invariant_feature_ids() {
    std::vector<std::string> ids;
    for (const auto& f : kFeatureCatalog) {
        if (!f.order_sensitive) ids.emplace_back(f.id);
    }
    return ids;
}

inline std::size_t feature_index(std::string_view id) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (kFeatureCatalog[i].id == id) return i;
    }
    throw PreconditionError("unknown feature id '" + std::string(id) + "'");
}

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double autocorrelation(std::span<const double> x, double mean, double var, std::size_t lag) {
    const std::size_t n = x.size();
    if (lag >= n || var <= 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += (x[t] - mean) * (x[t + lag] - mean);
    return acc / (static_cast<double>(n - lag) * var);
}

template <class Pred>
std::size_t longest_run(std::span<const double> x, Pred pred) {
    std::size_t best = 0, run = 0;
    for (double v : x) {
        run = pred(v) ? run + 1 : 0;
        best = std::max(best, run);
    }
    return best;
}

} // namespace detail

/// Computes every catalog feature, in catalog order.
inline std::array<double, kFeatureCount> extract_feature_values(std::span<const double> x) {
    if (x.empty()) throw PreconditionError("features: series must have at least one step");
    const std::size_t n = x.size();
    const double nd = static_cast<double>(n);
    std::array<double, kFeatureCount> f{};
    std::size_t k = 0;
    const auto put = [&](double v) { f[k++] = v; };

    // Order-free statistics accumulate over the sorted copy so they are
    // bit-identical under any permutation of x.
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const double sum = std::accumulate(sorted.begin(), sorted.end(), 0.0);
    const double mean = sum / nd;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, energy = 0.0, abs_sum = 0.0;
    for (double v : sorted) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        energy += v * v;
        abs_sum += std::abs(v);
    }
    m2 /= nd;
    m3 /= nd;
    m4 /= nd;
    const double sd = std::sqrt(m2);
    const double lo = sorted.front(), hi = sorted.back();

    put(mean);
    put(m2);
    put(sd);
    put(detail::quantile_sorted(sorted, 0.5));
    put(lo);
    put(hi);
    put(hi - lo);
    put(sum);
    put(nd);
    for (double q : {0.1, 0.25, 0.75, 0.9}) put(detail::quantile_sorted(sorted, q));
    put(m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0);
    put(m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0);
    put(energy);

    double abs_change = 0.0, max_abs_change = -1.0;
    std::size_t max_change_at = 0, crossings = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d = std::abs(x[i + 1] - x[i]);
        abs_change += d;
        if (d > max_abs_change) {
            max_abs_change = d;
            max_change_at = i;
        }
        if ((x[i] > mean) != (x[i + 1] > mean)) ++crossings;
    }
    put(n > 1 ? (x[n - 1] - x[0]) / (nd - 1.0) : 0.0);
    put(n > 1 ? abs_change / (nd - 1.0) : 0.0);
    put(static_cast<double>(crossings));
    put(static_cast<double>(std::count_if(x.begin(), x.end(), [&](double v) { return v > mean; })));
    put(static_cast<double>(std::count_if(x.begin(), x.end(), [&](double v) { return v < mean; })));
    put(static_cast<double>(detail::longest_run(x, [&](double v) { return v > mean; })));
    put(static_cast<double>(detail::longest_run(x, [&](double v) { return v < mean; })));
    for (std::size_t lag : {1, 2, 5, 10}) put(detail::autocorrelation(x, mean, m2, lag));

    // Linear trend against t = 0..n-1.
    if (n > 1) {
        const double t_mean = (nd - 1.0) / 2.0;
        double stt = 0.0, stx = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double dt = static_cast<double>(t) - t_mean;
            stt += dt * dt;
            stx += dt * (x[t] - mean);
        }
        const double slope = stx / stt;
        put(slope);
        put(mean - slope * t_mean);
        put(m2 > 0.0 ? std::clamp(stx / std::sqrt(stt * m2 * nd), -1.0, 1.0) : 0.0);
    } else {
        put(0.0);
        put(x[0]);
        put(0.0);
    }

    std::size_t peaks = 0;
    for (std::size_t i = 3; i + 3 < n; ++i) {
        bool peak = true;
        for (std::size_t j = 1; j <= 3 && peak; ++j) peak = x[i] > x[i - j] && x[i] > x[i + j];
        if (peak) ++peaks;
    }
    put(static_cast<double>(peaks));

    std::size_t first_max = 0, last_max = 0, first_min = 0, last_min = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > x[first_max]) first_max = i;
        if (x[i] >= x[last_max]) last_max = i;
        if (x[i] < x[first_min]) first_min = i;
        if (x[i] <= x[last_min]) last_min = i;
    }
    put(static_cast<double>(first_max) / nd);
    put(static_cast<double>(last_max + 1) / nd);
    put(static_cast<double>(first_min) / nd);
    put(static_cast<double>(last_min + 1) / nd);

    {
        std::array<std::size_t, 10> bins{};
        const double width = (hi - lo) / 10.0;
        for (double v : x) {
            std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - lo) / width) : 0;
            bins[std::min<std::size_t>(b, 9)]++;
        }
        double h = 0.0;
        for (std::size_t c : bins) {
            if (c == 0) continue;
            const double p = static_cast<double>(c) / nd;
            h -= p * std::log(p);
        }
        put(h);
    }

    double c3 = 0.0, second = 0.0;
    for (std::size_t i = 0; i + 2 < n; ++i) {
        c3 += x[i + 2] * x[i + 1] * x[i];
        second += 0.5 * (x[i + 2] - 2.0 * x[i + 1] + x[i]);
    }
    put(n > 2 ? c3 / (nd - 2.0) : 0.0);

    double cid = 0.0;
    if (sd > 0.0) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double d = (x[i + 1] - x[i]) / sd;
            cid += d * d;
        }
    }
    put(std::sqrt(cid));

    const auto beyond = [&](double r) {
        return static_cast<double>(
                   std::count_if(x.begin(), x.end(), [&](double v) { return std::abs(v - mean) > r * sd; })) /
               nd;
    };
    put(beyond(1.0));
    put(beyond(2.0));
    put(abs_sum / nd);
    put(std::sqrt(energy / nd));
    put(n > 1 ? static_cast<double>(max_change_at + 1) / nd : 0.0);
    put(n > 2 ? second / (nd - 2.0) : 0.0);
    return f;
}

struct FeatureVector {
    std::string user_id;
    Label label = Label::control;
    std::vector<double> values; // aligned with kFeatureCatalog

    double operator[](std::string_view id) const { return values[feature_index(id)]; }
    bool operator==(const FeatureVector&) const = default;
};

inline FeatureVector extract_features(const SimilaritySeries& series) {
    if (series.channels != 1) {
        throw PreconditionError("features: series '" + series.user_id + "' has " +
                                std::to_string(series.channels) + " channels; only scalar series are supported");
    }
    const auto v = extract_feature_values(series.values);
    return {series.user_id, series.label, std::vector<double>(v.begin(), v.end())};
}

inline std::vector<FeatureVector> extract_features(const SeriesSet& set) {
    std::vector<FeatureVector> out;
    out.reserve(set.series.size());
    for (const auto& s : set.series) out.push_back(extract_features(s));
    return out;
}

inline void write_features(const std::string& path, const std::vector<FeatureVector>& rows) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write feature file '" + path + "'");
    for (const auto& row : rows) {
        nlohmann::ordered_json j;
        j["user_id"] = row.user_id;
        j["label"] = to_string(row.label);
        nlohmann::ordered_json f = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < kFeatureCount; ++i) f[std::string(kFeatureCatalog[i].id)] = row.values[i];
        j["features"] = std::move(f);
        out << j.dump() << '\n';
    }
}

inline std::vector<FeatureVector> load_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open feature file '" + path + "'");
    std::vector<FeatureVector> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            FeatureVector row{j.at("user_id").get<std::string>(), parse_label(j.at("label").get<std::string>()),
                              std::vector<double>(kFeatureCount)};
            const auto& f = j.at("features");
            for (std::size_t i = 0; i < kFeatureCount; ++i) {
                row.values[i] = f.at(std::string(kFeatureCatalog[i].id)).get<double>();
            }
            rows.push_back(std::move(row));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path + ": line " + std::to_string(line_no) + ": malformed record (" + e.what() + ")");
        }
    }
    return rows;
}

} // namespace tempanchor

#endif // TEMPANCHOR_FEATURES_HPP
