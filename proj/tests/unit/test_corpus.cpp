#include <gtest/gtest.h>

#include <sstream>

#include "tempanchor/corpus.hpp"
#include "tempanchor/synth.hpp"

using namespace tempanchor;

namespace {

Corpus two_user_corpus() {
    Corpus c{4, "toy", Split::train, {}};
    for (int u = 0; u < 2; ++u) {
        UserTimeline t{"u" + std::to_string(u), u == 0 ? Label::condition : Label::control, {}};
        for (std::size_t j = 0; j < 3; ++j) {
            t.posts.push_back({j, std::nullopt, {1.0 * j, 2.0, -0.5, static_cast<double>(u)}});
        }
        c.users.push_back(t);
    }
    return c;
}

std::string serialize(const Corpus& c) {
    std::ostringstream out;
    write_corpus(out, c);
    return out.str();
}

} // namespace

TEST(Corpus, RoundTripKeepsEveryField) {
    const Corpus c = two_user_corpus();
    std::istringstream in(serialize(c));
    const Corpus back = load_corpus(in);
    EXPECT_EQ(back.users.size(), 2u);
    EXPECT_EQ(back.post_count(), 6u);
    EXPECT_EQ(serialize(back), serialize(c));
}

TEST(Corpus, SynthOutputRoundTrips) {
    SynthConfig cfg;
    cfg.seed = 3;
    cfg.dim = 8;
    cfg.n_condition = cfg.n_control = 4;
    cfg.condition_posts = cfg.control_posts = {12, 0.5};
    const auto gen = synth_generate(cfg).corpus;
    std::istringstream in(serialize(gen));
    const Corpus back = load_corpus(in);
    ASSERT_EQ(back.users.size(), gen.users.size());
    for (std::size_t u = 0; u < gen.users.size(); ++u) {
        EXPECT_EQ(back.users[u].user_id, gen.users[u].user_id);
        EXPECT_EQ(back.users[u].label, gen.users[u].label);
        ASSERT_EQ(back.users[u].posts.size(), gen.users[u].posts.size());
        for (std::size_t j = 0; j < gen.users[u].posts.size(); ++j) {
            EXPECT_EQ(back.users[u].posts[j].index, gen.users[u].posts[j].index);
            EXPECT_EQ(back.users[u].posts[j].timestamp, gen.users[u].posts[j].timestamp);
            EXPECT_EQ(back.users[u].posts[j].vector, gen.users[u].posts[j].vector);
        }
    }
}

TEST(Corpus, DimensionMismatchNamesUser) {
    std::string text = serialize(two_user_corpus());
    const auto at = text.rfind("[1.0,2.0,-0.5,1.0]");
    ASSERT_NE(at, std::string::npos);
    text.replace(at, 18, "[1.0,2.0,-0.5]");
    std::istringstream in(text);
    try {
        load_corpus(in);
        FAIL() << "expected a format error";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("u1"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Corpus, RejectsDuplicateUsersAndEmptyTimelines) {
    Corpus dup = two_user_corpus();
    dup.users[1].user_id = "u0";
    std::istringstream a(serialize(dup));
    EXPECT_THROW(load_corpus(a), FormatError);

    Corpus empty = two_user_corpus();
    empty.users[0].posts.clear();
    std::istringstream b(serialize(empty));
    EXPECT_THROW(load_corpus(b), FormatError);
}

TEST(Corpus, RejectsMalformedLineWithLineNumber) {
    std::istringstream in(serialize(two_user_corpus()) + "{not json\n");
    try {
        load_corpus(in);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    }
}

TEST(Corpus, MissingFileIsFormatError) {
    EXPECT_THROW(load_corpus(std::string("/nonexistent/corpus.jsonl")), FormatError);
}

namespace {

Corpus labelled(std::size_t n_cond, std::size_t n_ctrl) {
    Corpus c{2, "toy", Split::train, {}};
    for (std::size_t i = 0; i < n_cond + n_ctrl; ++i) {
        c.users.push_back({"u" + std::to_string(i), i < n_cond ? Label::condition : Label::control,
                           {{0, std::nullopt, {1.0, 0.0}}}});
    }
    return c;
}

} // namespace

TEST(Split, StratifiedArithmetic) {
    const auto [train, val] = split_corpus(labelled(10, 10), 0.8, 1);
    EXPECT_EQ(train.count(Label::condition), 8u);
    EXPECT_EQ(train.count(Label::control), 8u);
    EXPECT_EQ(val.count(Label::condition), 2u);
    EXPECT_EQ(val.count(Label::control), 2u);
}

TEST(Split, DeterministicUnderSeed) {
    const auto c = labelled(10, 10);
    const auto a = split_corpus(c, 0.8, 5);
    const auto b = split_corpus(c, 0.8, 5);
    EXPECT_EQ(serialize(a.first), serialize(b.first));
    EXPECT_EQ(serialize(a.second), serialize(b.second));
}

TEST(Split, IsAPartitionPreservingRatios) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto c = labelled(13, 29);
        const auto [train, val] = split_corpus(c, 0.7, seed);
        std::multiset<std::string> ids;
        for (const auto& u : train.users) ids.insert(u.user_id);
        for (const auto& u : val.users) ids.insert(u.user_id);
        ASSERT_EQ(ids.size(), c.users.size());
        EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), c.users.size());
        const double expected_cond = 0.7 * 13;
        EXPECT_LE(std::abs(static_cast<double>(train.count(Label::condition)) - expected_cond), 1.0);
    }
}

TEST(Split, TooFewUsersPerClass) {
    EXPECT_THROW(split_corpus(labelled(1, 10), 0.8, 0), PreconditionError);
}

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

} // namespace

TEST(Synth, ZeroSignalClassesAreIndistinguishable) {
    int below = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SynthConfig cfg;
        cfg.seed = seed;
        cfg.direction_seed = seed;
        cfg.dim = 8;
        cfg.n_condition = cfg.n_control = 20;
        cfg.condition_posts = cfg.control_posts = {20, 0.0};
        cfg.signal_strength = 0.0;
        const auto gen = synth_generate(cfg);
        std::vector<double> cond, ctrl;
        for (const auto& u : gen.corpus.users) {
            for (const auto& p : u.posts) {
                double dot = 0.0, nn = 0.0;
                for (std::size_t k = 0; k < cfg.dim; ++k) {
                    dot += p.vector[k] * gen.truth.hidden_direction[k];
                    nn += p.vector[k] * p.vector[k];
                }
                (u.label == Label::condition ? cond : ctrl).push_back(dot / std::sqrt(nn));
            }
        }
        const double n = static_cast<double>(cond.size()), m = static_cast<double>(ctrl.size());
        const double critical = 1.358 * std::sqrt((n + m) / (n * m));
        below += ks_statistic(cond, ctrl) < critical ? 1 : 0;
    }
    EXPECT_GE(below, 18);
}
