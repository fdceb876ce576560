#ifndef TEMPANCHOR_ANCHOR_HPP
#define TEMPANCHOR_ANCHOR_HPP

// Anchor embeddings and similarity time series.
//
// File formats:
//   anchor:   {"disorder", "dim", "n_source_posts", "vector"}
//   series:   JSON Lines; header {"channels", "disorder", "anchor_disorder"},
//             then {"user_id", "label", "series": [[...], ...]} per user
//             (scalar series use 1-vectors; "degraded": true is added when
//             a zero-norm vector was replaced by the fill value)
//   channels: JSON Lines {"user_id", "idx", "probs": [...]} per post

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tempanchor/corpus.hpp"
#include "tempanchor/error.hpp"

namespace tempanchor {

struct AnchorEmbedding {
    std::string disorder;
    std::size_t dim = 0;
    std::size_t n_source_posts = 0;
    std::vector<double> vector;

    bool operator==(const AnchorEmbedding&) const = default;
};

/// Value substituted for a cosine against a zero-norm vector.
inline constexpr double kDegenerateFill = 0.0;

/// Mean over every post of every condition-class user in the pool. Uses
/// compensated summation; the vectors are not normalized first.
inline AnchorEmbedding compute_anchor(const Corpus& pool) {
    std::vector<double> sum(pool.dim, 0.0), carry(pool.dim, 0.0);
    std::size_t n = 0;
    for (const auto& user : pool.users) {
        if (user.label != Label::condition) continue;
        for (const auto& post : user.posts) {
            if (post.vector.size() != pool.dim) {
                throw PreconditionError("anchor: dimension mismatch in user '" + user.user_id + "'");
            }
            for (std::size_t i = 0; i < pool.dim; ++i) {
                // Neumaier
                const double x = post.vector[i];
                const double t = sum[i] + x;
                if (std::abs(sum[i]) >= std::abs(x)) {
                    carry[i] += (sum[i] - t) + x;
                } else {
                    carry[i] += (x - t) + sum[i];
                }
                sum[i] = t;
            }
            ++n;
        }
    }
    if (n == 0) throw PreconditionError("anchor: pool has no condition-class posts");
    AnchorEmbedding anchor{pool.disorder, pool.dim, n, std::vector<double>(pool.dim)};
    for (std::size_t i = 0; i < pool.dim; ++i) {
        anchor.vector[i] = (sum[i] + carry[i]) / static_cast<double>(n);
    }
    return anchor;
}

/// Cosine similarity clamped to [-1, 1]; nullopt when either vector has zero
/// norm.
inline std::optional<double> cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw PreconditionError("cosine: vectors differ in dimension");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) return std::nullopt;
    return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

/// One user's sequence of C-vectors, stored row-major (step-major).
struct SimilaritySeries {
    std::string user_id;
    Label label = Label::control;
    std::size_t channels = 1;
    std::vector<double> values;
    bool degraded = false;

    std::size_t length() const { return channels == 0 ? 0 : values.size() / channels; }
    double at(std::size_t step, std::size_t channel = 0) const { return values[step * channels + channel]; }
    std::span<const double> step(std::size_t t) const {
        return std::span<const double>(values).subspan(t * channels, channels);
    }

    bool operator==(const SimilaritySeries&) const = default;
};

/// A series file: shared channel count and provenance tags.
struct SeriesSet {
    std::size_t channels = 1;
    std::string disorder;        // where the posts came from
    std::string anchor_disorder; // which anchor scored them; empty when anchor-free
    std::vector<SimilaritySeries> series;

    std::size_t count(Label label) const {
        return static_cast<std::size_t>(std::count_if(
            series.begin(), series.end(), [&](const SimilaritySeries& s) { return s.label == label; }));
    }

    bool operator==(const SeriesSet&) const = default;
};

inline SimilaritySeries build_series(const UserTimeline& timeline, const AnchorEmbedding& anchor) {
    SimilaritySeries out{timeline.user_id, timeline.label, 1, {}, false};
    out.values.reserve(timeline.posts.size());
    for (const auto& post : timeline.posts) {
        if (post.vector.size() != anchor.vector.size()) {
            throw PreconditionError("series: user '" + timeline.user_id + "' has dim " +
                                    std::to_string(post.vector.size()) + " but anchor has dim " +
                                    std::to_string(anchor.vector.size()));
        }
        const auto c = cosine(post.vector, anchor.vector);
        if (!c) out.degraded = true;
        out.values.push_back(c.value_or(kDegenerateFill));
    }
    return out;
}

/// Scores every user of `corpus` against `anchor`. When the disorders differ
/// this is the cross-disorder pairing used for transfer.
inline SeriesSet build_cross_series(const Corpus& corpus, const AnchorEmbedding& anchor) {
    if (corpus.dim != anchor.dim) {
        throw PreconditionError("series: corpus dim " + std::to_string(corpus.dim) +
                                " does not match anchor dim " + std::to_string(anchor.dim));
    }
    SeriesSet set{1, corpus.disorder, anchor.disorder, {}};
    set.series.reserve(corpus.users.size());
    for (const auto& user : corpus.users) set.series.push_back(build_series(user, anchor));
    return set;
}

/// Class-stratified split of a series set, same assignment rule as
/// split_corpus.
inline std::pair<SeriesSet, SeriesSet> split_series(const SeriesSet& set, double train_fraction, std::uint64_t seed) {
    std::vector<Label> labels;
    for (const auto& s : set.series) labels.push_back(s.label);
    const auto to_train = detail::stratified_train_mask(labels, train_fraction, seed);
    SeriesSet train{set.channels, set.disorder, set.anchor_disorder, {}};
    SeriesSet val = train;
    for (std::size_t i = 0; i < set.series.size(); ++i) (to_train[i] ? train : val).series.push_back(set.series[i]);
    return {std::move(train), std::move(val)};
}

// ---------------------------------------------------------------------------
// Anchor-free multichannel series
// ---------------------------------------------------------------------------

/// Per-post channel vectors keyed by (user_id, idx).
class ChannelTable {
public:
    void add(const std::string& user_id, std::size_t idx, std::vector<double> values) {
        if (channels_ == 0) channels_ = values.size();
        if (values.empty() || values.size() != channels_) {
            throw FormatError("channel file: user '" + user_id + "' idx " + std::to_string(idx) +
                              " has " + std::to_string(values.size()) + " channels, expected " +
                              std::to_string(channels_));
        }
        if (!rows_[user_id].emplace(idx, std::move(values)).second) {
            throw FormatError("channel file: duplicate entry for user '" + user_id + "' idx " +
                              std::to_string(idx));
        }
    }

    std::size_t channels() const { return channels_; }

    const std::vector<double>* find(const std::string& user_id, std::size_t idx) const {
        const auto u = rows_.find(user_id);
        if (u == rows_.end()) return nullptr;
        const auto p = u->second.find(idx);
        return p == u->second.end() ? nullptr : &p->second;
    }

private:
    std::size_t channels_ = 0;
    std::map<std::string, std::map<std::size_t, std::vector<double>>> rows_;
};

enum class MultichannelMode { direct, channels };

/// direct: the raw post embeddings (C = dim). channels: the per-post vectors
/// from `table` (required in that mode). No anchor is involved.
inline SimilaritySeries build_multichannel_series(const UserTimeline& timeline, MultichannelMode mode,
                                                  const ChannelTable* table = nullptr) {
    SimilaritySeries out{timeline.user_id, timeline.label, 0, {}, false};
    if (mode == MultichannelMode::direct) {
        out.channels = timeline.posts.front().vector.size();
        for (const auto& post : timeline.posts) {
            out.values.insert(out.values.end(), post.vector.begin(), post.vector.end());
        }
        return out;
    }
    if (table == nullptr) throw PreconditionError("channels mode requires a channel file");
    out.channels = table->channels();
    for (const auto& post : timeline.posts) {
        const auto* row = table->find(timeline.user_id, post.index);
        if (row == nullptr) {
            throw PreconditionError("channel file misaligned: no entry for user '" + timeline.user_id +
                                    "' idx " + std::to_string(post.index));
        }
        out.values.insert(out.values.end(), row->begin(), row->end());
    }
    return out;
}

inline SeriesSet build_multichannel_set(const Corpus& corpus, MultichannelMode mode,
                                        const ChannelTable* table = nullptr) {
    SeriesSet set{mode == MultichannelMode::direct ? corpus.dim : (table ? table->channels() : 0),
                  corpus.disorder, "", {}};
    for (const auto& user : corpus.users) set.series.push_back(build_multichannel_series(user, mode, table));
    return set;
}

// ---------------------------------------------------------------------------
// I/O
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const AnchorEmbedding& anchor) {
    nlohmann::ordered_json j;
    j["disorder"] = anchor.disorder;
    j["dim"] = anchor.dim;
    j["n_source_posts"] = anchor.n_source_posts;
    j["vector"] = anchor.vector;
    return j;
}

inline void write_anchor(const std::string& path, const AnchorEmbedding& anchor) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write anchor file '" + path + "'");
    out << to_json(anchor).dump() << '\n';
}

inline AnchorEmbedding load_anchor(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open anchor file '" + path + "'");
    try {
        const auto j = nlohmann::json::parse(in);
        AnchorEmbedding a{j.at("disorder").get<std::string>(), j.at("dim").get<std::size_t>(),
                          j.at("n_source_posts").get<std::size_t>(),
                          j.at("vector").get<std::vector<double>>()};
        if (a.vector.size() != a.dim) throw FormatError("vector length does not match dim");
        if (a.n_source_posts < 1) throw FormatError("n_source_posts must be >= 1");
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": malformed anchor file (" + e.what() + ")");
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline void write_series(std::ostream& out, const SeriesSet& set) {
    nlohmann::ordered_json header;
    header["channels"] = set.channels;
    header["disorder"] = set.disorder;
    header["anchor_disorder"] = set.anchor_disorder;
    out << header.dump() << '\n';
    for (const auto& s : set.series) {
        nlohmann::ordered_json j;
        j["user_id"] = s.user_id;
        j["label"] = to_string(s.label);
        auto rows = nlohmann::ordered_json::array();
        for (std::size_t t = 0; t < s.length(); ++t) {
            const auto step = s.step(t);
            rows.push_back(std::vector<double>(step.begin(), step.end()));
        }
        j["series"] = std::move(rows);
        if (s.degraded) j["degraded"] = true;
        out << j.dump() << '\n';
    }
}

inline void write_series(const std::string& path, const SeriesSet& set) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write series file '" + path + "'");
    write_series(out, set);
}

inline SeriesSet load_series(std::istream& in) {
    SeriesSet set;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (!have_header) {
                set.channels = j.at("channels").get<std::size_t>();
                set.disorder = j.value("disorder", std::string{});
                set.anchor_disorder = j.value("anchor_disorder", std::string{});
                if (set.channels < 1) throw FormatError("channels must be >= 1");
                have_header = true;
                continue;
            }
            SimilaritySeries s;
            s.user_id = j.at("user_id").get<std::string>();
            s.label = parse_label(j.at("label").get<std::string>());
            s.channels = set.channels;
            s.degraded = j.value("degraded", false);
            for (const auto& row : j.at("series")) {
                const auto values = row.get<std::vector<double>>();
                if (values.size() != set.channels) {
                    throw FormatError("user '" + s.user_id + "' has a step with " +
                                      std::to_string(values.size()) + " channels, expected " +
                                      std::to_string(set.channels));
                }
                s.values.insert(s.values.end(), values.begin(), values.end());
            }
            if (s.values.empty()) throw FormatError("user '" + s.user_id + "' has an empty series");
            set.series.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("line " + std::to_string(line_no) + ": malformed record (" + e.what() + ")");
        } catch (const FormatError& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw FormatError("empty series file (no header record)");
    return set;
}

inline SeriesSet load_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open series file '" + path + "'");
    try {
        return load_series(in);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline ChannelTable load_channels(std::istream& in) {
    ChannelTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            table.add(j.at("user_id").get<std::string>(), j.at("idx").get<std::size_t>(),
                      j.at("probs").get<std::vector<double>>());
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("line " + std::to_string(line_no) + ": malformed record (" + e.what() + ")");
        } catch (const FormatError& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return table;
}

inline ChannelTable load_channels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open channel file '" + path + "'");
    try {
        return load_channels(in);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline void write_channels(std::ostream& out, const std::string& user_id, std::size_t idx,
                           const std::vector<double>& probs) {
    nlohmann::ordered_json j;
    j["user_id"] = user_id;
    j["idx"] = idx;
    j["probs"] = probs;
    out << j.dump() << '\n';
}

} // namespace tempanchor

#endif // TEMPANCHOR_ANCHOR_HPP
