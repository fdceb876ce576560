#ifndef TEMPANCHOR_CORPUS_HPP
#define TEMPANCHOR_CORPUS_HPP

// Corpus data model and the JSON Lines corpus format.
//
// Line 1 is a header object {format_version, dim, disorder, split}; every
// following line is one user:
//   {"user_id": "...", "label": "condition"|"control",
//    "posts": [{"idx": 0, "ts": 1700000000, "v": [...]}, ...]}
// "ts" is optional. Post order is defined by "idx".

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tempanchor/error.hpp"
#include "tempanchor/rng.hpp"

namespace tempanchor {

inline constexpr int kCorpusFormatVersion = 1;

enum class Label { control = 0, condition = 1 };
enum class Split { train, val, test, pool };

inline std::string to_string(Label label) {
    return label == Label::condition ? "condition" : "control";
}

inline Label parse_label(const std::string& text) {
    if (text == "condition") return Label::condition;
    if (text == "control") return Label::control;
    throw FormatError("unknown label '" + text + "'");
}

inline std::string to_string(Split split) {
    switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::pool: return "pool";
    }
    return "train";
}

inline Split parse_split(const std::string& text) {
    if (text == "train") return Split::train;
    if (text == "val") return Split::val;
    if (text == "test") return Split::test;
    if (text == "pool") return Split::pool;
    throw FormatError("unknown split '" + text + "'");
}

struct PostEmbedding {
    std::size_t index = 0;
    std::optional<std::int64_t> timestamp;
    std::vector<double> vector;

    bool operator==(const PostEmbedding&) const = default;
};

struct UserTimeline {
    std::string user_id;
    Label label = Label::control;
    std::vector<PostEmbedding> posts;

    bool operator==(const UserTimeline&) const = default;
};

struct Corpus {
    std::size_t dim = 0;
    std::string disorder;
    Split split = Split::train;
    std::vector<UserTimeline> users;

    std::size_t post_count() const {
        std::size_t n = 0;
        for (const auto& u : users) n += u.posts.size();
        return n;
    }

    std::size_t count(Label label) const {
        return static_cast<std::size_t>(std::count_if(
            users.begin(), users.end(), [&](const UserTimeline& u) { return u.label == label; }));
    }

    bool operator==(const Corpus&) const = default;
};

/// Checks one timeline against the corpus invariants. Throws FormatError
/// naming the user.
inline void validate_timeline(const UserTimeline& user, std::size_t dim) {
    if (user.user_id.empty()) throw FormatError("user with empty user_id");
    if (user.posts.empty()) throw FormatError("user '" + user.user_id + "' has no posts");
    for (std::size_t j = 0; j < user.posts.size(); ++j) {
        const auto& p = user.posts[j];
        if (p.vector.size() != dim) {
            throw FormatError("dimension mismatch for user '" + user.user_id + "' post idx " +
                              std::to_string(p.index) + ": expected " + std::to_string(dim) +
                              ", got " + std::to_string(p.vector.size()));
        }
        if (j > 0) {
            const auto& prev = user.posts[j - 1];
            if (p.index <= prev.index) {
                throw FormatError("user '" + user.user_id + "': post indices not strictly increasing at idx " +
                                  std::to_string(p.index));
            }
            if (p.timestamp && prev.timestamp && *p.timestamp < *prev.timestamp) {
                throw FormatError("user '" + user.user_id + "': timestamps decrease at idx " +
                                  std::to_string(p.index));
            }
        }
    }
}

inline void validate_corpus(const Corpus& corpus) {
    if (corpus.dim < 1) throw FormatError("corpus dim must be positive");
    std::set<std::string> seen;
    for (const auto& u : corpus.users) {
        validate_timeline(u, corpus.dim);
        if (!seen.insert(u.user_id).second) throw FormatError("duplicate user_id '" + u.user_id + "'");
    }
}

// ---------------------------------------------------------------------------
// JSON mapping
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const UserTimeline& user) {
    nlohmann::ordered_json j;
    j["user_id"] = user.user_id;
    j["label"] = to_string(user.label);
    auto posts = nlohmann::ordered_json::array();
    for (const auto& p : user.posts) {
        nlohmann::ordered_json jp;
        jp["idx"] = p.index;
        if (p.timestamp) jp["ts"] = *p.timestamp;
        jp["v"] = p.vector;
        posts.push_back(std::move(jp));
    }
    j["posts"] = std::move(posts);
    return j;
}

inline UserTimeline timeline_from_json(const nlohmann::json& j) {
    UserTimeline user;
    user.user_id = j.at("user_id").get<std::string>();
    user.label = parse_label(j.at("label").get<std::string>());
    for (const auto& jp : j.at("posts")) {
        PostEmbedding p;
        p.index = jp.at("idx").get<std::size_t>();
        if (jp.contains("ts") && !jp.at("ts").is_null()) p.timestamp = jp.at("ts").get<std::int64_t>();
        p.vector = jp.at("v").get<std::vector<double>>();
        user.posts.push_back(std::move(p));
    }
    return user;
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
    nlohmann::ordered_json header;
    header["format_version"] = kCorpusFormatVersion;
    header["dim"] = corpus.dim;
    header["disorder"] = corpus.disorder;
    header["split"] = to_string(corpus.split);
    out << header.dump() << '\n';
    for (const auto& u : corpus.users) out << to_json(u).dump() << '\n';
}

inline void write_corpus(const std::string& path, const Corpus& corpus) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write corpus file '" + path + "'");
    write_corpus(out, corpus);
    if (!out) throw FormatError("failed writing corpus file '" + path + "'");
}

/// Parses and validates a corpus stream. Malformed records are reported with
/// their 1-based line number.
inline Corpus load_corpus(std::istream& in) {
    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = [&] { return "line " + std::to_string(line_no) + ": "; };
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(where() + "malformed JSON (" + e.what() + ")");
        }
        try {
            if (!have_header) {
                if (!j.is_object() || !j.contains("dim")) throw FormatError("missing header record");
                const int version = j.value("format_version", kCorpusFormatVersion);
                if (version != kCorpusFormatVersion) {
                    throw FormatError("unsupported format_version " + std::to_string(version));
                }
                corpus.dim = j.at("dim").get<std::size_t>();
                if (corpus.dim < 1) throw FormatError("dim must be positive");
                corpus.disorder = j.value("disorder", std::string{});
                corpus.split = parse_split(j.value("split", std::string{"train"}));
                have_header = true;
                continue;
            }
            UserTimeline user = timeline_from_json(j);
            validate_timeline(user, corpus.dim);
            if (!seen.insert(user.user_id).second) {
                throw FormatError("duplicate user_id '" + user.user_id + "'");
            }
            corpus.users.push_back(std::move(user));
        } catch (const FormatError& e) {
            throw FormatError(where() + e.what());
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(where() + "malformed record (" + e.what() + ")");
        }
    }
    if (!have_header) throw FormatError("empty corpus file (no header record)");
    return corpus;
}

inline Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open corpus file '" + path + "'");
    try {
        return load_corpus(in);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

namespace detail {

/// Class-stratified train membership for items with the given labels. Each
/// class keeps round(train_fraction * n) items in train, clamped so both
/// sides receive at least one item of every class.
inline std::vector<bool> stratified_train_mask(const std::vector<Label>& labels, double train_fraction,
                                               std::uint64_t seed) {
    require(train_fraction > 0.0 && train_fraction < 1.0, "train fraction must lie strictly between 0 and 1");
    std::vector<bool> to_train(labels.size(), false);
    for (Label label : {Label::condition, Label::control}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == label) members.push_back(i);
        }
        if (members.size() < 2) {
            throw PreconditionError("cannot stratify: class '" + to_string(label) + "' has " +
                                    std::to_string(members.size()) + " user(s), need at least 2");
        }
        Rng rng(derive_seed(seed, "split", static_cast<std::uint64_t>(label)));
        rng.shuffle(std::span<std::size_t>(members));
        auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
        for (std::size_t k = 0; k < n_train; ++k) to_train[members[k]] = true;
    }
    return to_train;
}

} // namespace detail

/// User-level, class-stratified split into (train, val). Users keep their
/// original relative order.
inline std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_fraction,
                                              std::uint64_t seed) {
    std::vector<Label> labels;
    for (const auto& u : corpus.users) labels.push_back(u.label);
    const auto to_train = detail::stratified_train_mask(labels, train_fraction, seed);
    Corpus train{corpus.dim, corpus.disorder, Split::train, {}};
    Corpus val{corpus.dim, corpus.disorder, Split::val, {}};
    for (std::size_t i = 0; i < corpus.users.size(); ++i) {
        (to_train[i] ? train : val).users.push_back(corpus.users[i]);
    }
    return {std::move(train), std::move(val)};
}

} // namespace tempanchor

#endif // TEMPANCHOR_CORPUS_HPP
