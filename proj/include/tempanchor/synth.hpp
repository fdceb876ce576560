#ifndef TEMPANCHOR_SYNTH_HPP
#define TEMPANCHOR_SYNTH_HPP

// Seeded synthetic longitudinal corpora.
//
// A hidden unit direction u plays the role of the condition-class semantics.
// Every post is built from a Gaussian draw g: its cosine to u is c0 and its
// direction orthogonal to u is w. A post with target similarity s is
//     v = |g| * (s * u + sqrt(1 - s^2) * w),
// so s == c0 reproduces g and an elevated s only rotates g toward u.
//
//  magnitude: condition users get s = c0 + strength on a contiguous episode
//             covering episode_fraction of their posts; everything else is
//             isotropic noise.
//  trend:     condition user i and control user i share one multiset of
//             similarities; the condition user shows the elevated values as a
//             contiguous rising run, the control user in random order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tempanchor/corpus.hpp"
#include "tempanchor/error.hpp"
#include "tempanchor/rng.hpp"

namespace tempanchor {

enum class SignalMode { magnitude, trend };

inline std::string to_string(SignalMode mode) {
    return mode == SignalMode::trend ? "trend" : "magnitude";
}

inline SignalMode parse_signal_mode(const std::string& text) {
    if (text == "magnitude") return SignalMode::magnitude;
    if (text == "trend") return SignalMode::trend;
    throw PreconditionError("unknown signal mode '" + text + "'");
}

/// Post counts: a blend of a fixed count and a geometric draw with the same
/// mean. spread 0 gives exactly `mean` posts per user.
struct PostCountModel {
    double mean = 50.0;
    double spread = 0.0;
};

/// Hidden direction built at a fixed cosine to another seed's direction.
struct RelatedDirection {
    std::uint64_t seed = 0;
    double cosine = 0.0;
};

struct SynthConfig {
    std::uint64_t seed = 0;
    std::uint64_t direction_seed = 0;
    std::optional<RelatedDirection> related;
    std::size_t n_condition = 100;
    std::size_t n_control = 100;
    std::size_t dim = 768;
    PostCountModel condition_posts{400.0, 1.0};
    PostCountModel control_posts{550.0, 1.0};
    SignalMode mode = SignalMode::magnitude;
    double signal_strength = 0.5;
    double episode_fraction = 0.2;
    std::string disorder = "synthetic";
    Split split = Split::train;

    void validate() const {
        detail::require(n_condition >= 1 && n_control >= 1, "synth: class counts must be >= 1");
        detail::require(dim >= 2, "synth: dim must be >= 2");
        detail::require(signal_strength >= 0.0 && signal_strength <= 1.0,
                        "synth: signal_strength must lie in [0, 1]");
        detail::require(episode_fraction >= 0.0 && episode_fraction <= 1.0,
                        "synth: episode_fraction must lie in [0, 1]");
        detail::require(condition_posts.mean >= 1.0 && control_posts.mean >= 1.0,
                        "synth: mean post count must be >= 1");
        detail::require(condition_posts.spread >= 0.0 && condition_posts.spread <= 1.0 &&
                            control_posts.spread >= 0.0 && control_posts.spread <= 1.0,
                        "synth: post count spread must lie in [0, 1]");
        detail::require(mode != SignalMode::trend || n_condition == n_control,
                        "synth: trend mode pairs users, so n_condition must equal n_control");
        detail::require(!related || (related->cosine >= -1.0 && related->cosine <= 1.0),
                        "synth: related cosine must lie in [-1, 1]");
    }
};

struct GroundTruth {
    std::vector<double> hidden_direction;
    /// (condition user, matched control user); trend mode only.
    std::vector<std::pair<std::string, std::string>> pair_map;
};

struct SynthResult {
    Corpus corpus;
    GroundTruth truth;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::vector<double> gaussian_vector(std::size_t dim, Rng& rng) {
    std::vector<double> g(dim);
    for (auto& x : g) x = rng.normal();
    return g;
}

inline void normalize(std::vector<double>& v) {
    const double n = std::sqrt(dot(v, v));
    for (auto& x : v) x /= n;
}

inline std::vector<double> random_unit(std::size_t dim, Rng& rng) {
    auto v = gaussian_vector(dim, rng);
    normalize(v);
    return v;
}

struct Decomposed {
    double norm;
    double cosine;                 // to the hidden direction
    std::vector<double> orthogonal; // unit, orthogonal to the hidden direction
};

inline Decomposed decompose_draw(const std::vector<double>& u, Rng& rng) {
    for (;;) {
        auto g = gaussian_vector(u.size(), rng);
        const double norm = std::sqrt(dot(g, g));
        const double along = dot(g, u);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= along * u[i];
        const double orth = std::sqrt(dot(g, g));
        if (norm <= 0.0 || orth <= 1e-12 * norm) continue;
        for (auto& x : g) x /= orth;
        return {norm, std::clamp(along / norm, -1.0, 1.0), std::move(g)};
    }
}

inline std::vector<double> compose(const std::vector<double>& u, const Decomposed& d, double similarity) {
    const double s = std::clamp(similarity, -1.0, 1.0);
    const double c = std::sqrt(std::max(0.0, 1.0 - s * s));
    std::vector<double> v(u.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = d.norm * (s * u[i] + c * d.orthogonal[i]);
    return v;
}

inline std::size_t draw_post_count(const PostCountModel& model, Rng& rng) {
    double geometric = 1.0;
    if (model.mean > 1.0) {
        const double p = 1.0 / model.mean;
        const double u = 1.0 - rng.uniform(); // (0, 1]
        geometric = std::max(1.0, std::ceil(std::log(u) / std::log1p(-p)));
    }
    const double x = (1.0 - model.spread) * model.mean + model.spread * geometric;
    return static_cast<std::size_t>(std::max<long long>(1, std::llround(x)));
}

inline std::size_t episode_length(std::size_t posts, double fraction) {
    if (fraction <= 0.0) return 0;
    const auto e = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(posts)));
    return std::clamp<std::size_t>(e, 1, posts);
}

inline std::vector<PostEmbedding> make_posts(const std::vector<double>& u,
                                             const std::vector<double>& similarities, Rng& rng) {
    std::vector<PostEmbedding> posts;
    posts.reserve(similarities.size());
    std::int64_t ts = 1'600'000'000 + static_cast<std::int64_t>(rng.below(86'400 * 365));
    for (std::size_t j = 0; j < similarities.size(); ++j) {
        const auto d = decompose_draw(u, rng);
        ts += 600 + static_cast<std::int64_t>(rng.below(3 * 86'400));
        posts.push_back({j, ts, compose(u, d, similarities[j])});
    }
    return posts;
}

inline std::string user_name(const SynthConfig& config, Label label, std::size_t i) {
    std::string number = std::to_string(i);
    number.insert(0, number.size() < 4 ? 4 - number.size() : 0, '0');
    return config.disorder + "-" + to_string(config.split) + "-" +
           (label == Label::condition ? "cond-" : "ctrl-") + number;
}

} // namespace detail

/// The unit hidden direction for a seed, optionally tilted to a fixed cosine
/// against another seed's direction.
inline std::vector<double> hidden_direction(std::size_t dim, std::uint64_t direction_seed,
                                            const std::optional<RelatedDirection>& related = {}) {
    Rng rng(derive_seed(direction_seed, "direction"));
    auto own = detail::random_unit(dim, rng);
    if (!related) return own;
    const auto base = hidden_direction(dim, related->seed);
    const double along = detail::dot(own, base);
    for (std::size_t i = 0; i < dim; ++i) own[i] -= along * base[i];
    detail::normalize(own);
    const double c = related->cosine;
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    std::vector<double> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = c * base[i] + s * own[i];
    return out;
}

inline SynthResult synth_generate(const SynthConfig& config) {
    config.validate();
    SynthResult result;
    const auto u = hidden_direction(config.dim, config.direction_seed, config.related);
    result.truth.hidden_direction = u;
    Corpus& corpus = result.corpus;
    corpus.dim = config.dim;
    corpus.disorder = config.disorder;
    corpus.split = config.split;

    if (config.mode == SignalMode::magnitude) {
        const auto emit = [&](Label label, std::size_t i) {
            Rng rng(derive_seed(config.seed, label == Label::condition ? "condition" : "control", i));
            const auto& counts = label == Label::condition ? config.condition_posts : config.control_posts;
            const std::size_t k = detail::draw_post_count(counts, rng);
            std::size_t start = k, stop = k;
            if (label == Label::condition) {
                const std::size_t e = detail::episode_length(k, config.episode_fraction);
                start = static_cast<std::size_t>(rng.below(k - e + 1));
                stop = start + e;
            }
            UserTimeline user{detail::user_name(config, label, i), label, {}};
            std::int64_t ts = 1'600'000'000 + static_cast<std::int64_t>(rng.below(86'400 * 365));
            for (std::size_t j = 0; j < k; ++j) {
                const auto d = detail::decompose_draw(u, rng);
                const double boost = (j >= start && j < stop) ? config.signal_strength : 0.0;
                ts += 600 + static_cast<std::int64_t>(rng.below(3 * 86'400));
                user.posts.push_back({j, ts, detail::compose(u, d, d.cosine + boost)});
            }
            corpus.users.push_back(std::move(user));
        };
        for (std::size_t i = 0; i < config.n_condition; ++i) emit(Label::condition, i);
        for (std::size_t i = 0; i < config.n_control; ++i) emit(Label::control, i);
        return result;
    }

    std::vector<UserTimeline> condition, control;
    for (std::size_t i = 0; i < config.n_condition; ++i) {
        Rng pair_rng(derive_seed(config.seed, "pair", i));
        const std::size_t k = detail::draw_post_count(config.condition_posts, pair_rng);
        const std::size_t e = detail::episode_length(k, config.episode_fraction);
        std::vector<double> values(k);
        for (std::size_t j = 0; j < k; ++j) {
            values[j] = detail::decompose_draw(u, pair_rng).cosine;
            if (j < e) values[j] = std::clamp(values[j] + config.signal_strength, -1.0, 1.0);
        }

        Rng cond_rng(derive_seed(config.seed, "condition", i));
        std::vector<double> episode(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(e));
        std::vector<double> rest(values.begin() + static_cast<std::ptrdiff_t>(e), values.end());
        std::sort(episode.begin(), episode.end());
        cond_rng.shuffle(std::span<double>(rest));
        const auto start = static_cast<std::ptrdiff_t>(cond_rng.below(rest.size() + 1));
        std::vector<double> arranged(rest.begin(), rest.begin() + start);
        arranged.insert(arranged.end(), episode.begin(), episode.end());
        arranged.insert(arranged.end(), rest.begin() + start, rest.end());

        Rng ctrl_rng(derive_seed(config.seed, "control", i));
        std::vector<double> shuffled = values;
        ctrl_rng.shuffle(std::span<double>(shuffled));

        UserTimeline cu{detail::user_name(config, Label::condition, i), Label::condition,
                        detail::make_posts(u, arranged, cond_rng)};
        UserTimeline hu{detail::user_name(config, Label::control, i), Label::control,
                        detail::make_posts(u, shuffled, ctrl_rng)};
        result.truth.pair_map.emplace_back(cu.user_id, hu.user_id);
        condition.push_back(std::move(cu));
        control.push_back(std::move(hu));
    }
    for (auto& user : condition) corpus.users.push_back(std::move(user));
    for (auto& user : control) corpus.users.push_back(std::move(user));
    return result;
}

inline nlohmann::ordered_json to_json(const GroundTruth& truth) {
    nlohmann::ordered_json j;
    j["hidden_direction"] = truth.hidden_direction;
    nlohmann::ordered_json pairs = nlohmann::ordered_json::object();
    for (const auto& [cond, ctrl] : truth.pair_map) pairs[cond] = ctrl;
    j["pair_map"] = std::move(pairs);
    return j;
}

inline void write_ground_truth(const std::string& path, const GroundTruth& truth) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write ground-truth file '" + path + "'");
    out << to_json(truth).dump(2) << '\n';
}

} // namespace tempanchor

#endif // TEMPANCHOR_SYNTH_HPP
