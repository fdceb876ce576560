#include <gtest/gtest.h>

#include <sstream>

#include "tempanchor/anchor.hpp"
#include "tempanchor/rng.hpp"
#include "tempanchor/synth.hpp"

using namespace tempanchor;

namespace {

UserTimeline timeline(const std::string& id, Label label, const std::vector<std::vector<double>>& vectors) {
    UserTimeline t{id, label, {}};
    for (std::size_t j = 0; j < vectors.size(); ++j) t.posts.push_back({j, std::nullopt, vectors[j]});
    return t;
}

Corpus pool_of(const std::vector<std::vector<double>>& vectors) {
    Corpus c{vectors.front().size(), "d", Split::pool, {}};
    c.users.push_back(timeline("p", Label::condition, vectors));
    return c;
}

// Welford-style running mean, coded independently of the library.
std::vector<double> streaming_mean(const std::vector<std::vector<double>>& xs) {
    std::vector<double> m(xs.front().size(), 0.0);
    for (std::size_t n = 0; n < xs.size(); ++n) {
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += (xs[n][i] - m[i]) / static_cast<double>(n + 1);
    }
    return m;
}

std::vector<std::vector<double>> random_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> xs(n, std::vector<double>(dim));
    for (auto& x : xs) {
        for (auto& v : x) v = rng.normal() * 3.0 + 1.0;
    }
    return xs;
}

} // namespace

TEST(Anchor, MeanOfOne) {
    const auto a = compute_anchor(pool_of({{1, 2, 3}}));
    EXPECT_EQ(a.vector, (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(a.n_source_posts, 1u);
}

TEST(Anchor, Symmetry) {
    EXPECT_EQ(compute_anchor(pool_of({{1, 2, 3}, {3, 2, 1}})).vector, (std::vector<double>{2, 2, 2}));
}

TEST(Anchor, IgnoresControlUsers) {
    Corpus c = pool_of({{1, 1}});
    c.users.push_back(timeline("q", Label::control, {{100, -100}}));
    EXPECT_EQ(compute_anchor(c).vector, (std::vector<double>{1, 1}));
}

TEST(Anchor, MatchesStreamingOracle) {
    const auto xs = random_vectors(1000, 16, 9);
    const auto a = compute_anchor(pool_of(xs));
    const auto oracle = streaming_mean(xs);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(a.vector[i], oracle[i], 1e-12);
}

TEST(Anchor, Linearity) {
    const auto xa = random_vectors(37, 6, 1);
    const auto xb = random_vectors(90, 6, 2);
    auto all = xa;
    all.insert(all.end(), xb.begin(), xb.end());
    const auto a = compute_anchor(pool_of(xa)).vector;
    const auto b = compute_anchor(pool_of(xb)).vector;
    const auto ab = compute_anchor(pool_of(all)).vector;
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(ab[i], (37 * a[i] + 90 * b[i]) / 127.0, 1e-10);
}

TEST(Anchor, EmptyPoolAndDimensionMismatch) {
    Corpus c{2, "d", Split::pool, {}};
    c.users.push_back(timeline("q", Label::control, {{1, 1}}));
    EXPECT_THROW(compute_anchor(c), PreconditionError);
    EXPECT_THROW(compute_anchor(pool_of({{1, 2}, {1, 2, 3}})), PreconditionError);
}

TEST(Cosine, AxisCasesAndScale) {
    const std::vector<double> x{1, 0}, y{0, 1}, x2{2, 0};
    EXPECT_EQ(*cosine(x, x), 1.0);
    EXPECT_EQ(*cosine(x, y), 0.0);
    EXPECT_EQ(*cosine(x2, x), 1.0);
    const std::vector<double> zero{0, 0};
    EXPECT_FALSE(cosine(zero, x).has_value());
}

TEST(Cosine, ScaleInvarianceAndRange) {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(5), b(5);
        for (auto& v : a) v = rng.normal();
        for (auto& v : b) v = rng.normal();
        const double alpha = rng.uniform(0.01, 100.0), beta = rng.uniform(0.01, 100.0);
        std::vector<double> sa = a, sb = b;
        for (auto& v : sa) v *= alpha;
        for (auto& v : sb) v *= beta;
        const double c = *cosine(a, b);
        EXPECT_NEAR(*cosine(sa, sb), c, 1e-12);
        EXPECT_GE(c, -1.0);
        EXPECT_LE(c, 1.0);
    }
    const std::vector<double> v{0.1, 0.7, 0.3};
    EXPECT_LE(*cosine(v, v), 1.0);
}

TEST(Series, AxisCases) {
    const AnchorEmbedding a{"d", 2, 1, {1, 0}};
    const auto s = build_series(timeline("u", Label::control, {{1, 0}, {0, 1}, {-1, 0}}), a);
    EXPECT_EQ(s.values, (std::vector<double>{1.0, 0.0, -1.0}));
    EXPECT_FALSE(s.degraded);
}

TEST(Series, EveryPostEqualsAnchor) {
    const AnchorEmbedding a{"d", 3, 1, {0.3, -0.2, 0.9}};
    const auto s = build_series(timeline("u", Label::control, {a.vector, a.vector, a.vector}), a);
    for (double v : s.values) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(Series, ZeroNormPostIsFilledAndFlagged) {
    const AnchorEmbedding a{"d", 2, 1, {1, 0}};
    const auto s = build_series(timeline("u", Label::control, {{1, 0}, {0, 0}}), a);
    EXPECT_EQ(s.values, (std::vector<double>{1.0, kDegenerateFill}));
    EXPECT_TRUE(s.degraded);
}

TEST(Series, ReverseFidelity) {
    const auto xs = random_vectors(25, 4, 3);
    auto rev = xs;
    std::reverse(rev.begin(), rev.end());
    const AnchorEmbedding a{"d", 4, 1, {0.5, 1, -1, 2}};
    auto forward = build_series(timeline("u", Label::control, xs), a).values;
    std::reverse(forward.begin(), forward.end());
    EXPECT_EQ(build_series(timeline("u", Label::control, rev), a).values, forward);
}

TEST(Series, DimensionMismatch) {
    const AnchorEmbedding a{"d", 3, 1, {1, 0, 0}};
    EXPECT_THROW(build_series(timeline("u", Label::control, {{1, 0}}), a), PreconditionError);
}

TEST(Series, HeldOutAnchorSeparatesClasses) {
    SynthConfig cfg;
    cfg.dim = 8;
    cfg.n_condition = cfg.n_control = 30;
    cfg.condition_posts = cfg.control_posts = {50, 0.0};
    cfg.signal_strength = 0.5;
    cfg.direction_seed = 1;
    cfg.seed = 10;
    const auto data = synth_generate(cfg).corpus;
    cfg.seed = 11;
    cfg.split = Split::pool;
    const auto anchor = compute_anchor(synth_generate(cfg).corpus);
    double cond = 0.0, ctrl = 0.0;
    for (const auto& s : build_cross_series(data, anchor).series) {
        double m = 0.0;
        for (double v : s.values) m += v / static_cast<double>(s.values.size());
        (s.label == Label::condition ? cond : ctrl) += m;
    }
    EXPECT_GT(cond, ctrl);
}

namespace {

double class_gap(double related_cosine) {
    SynthConfig d1;
    d1.dim = 16;
    d1.n_condition = d1.n_control = 40;
    d1.condition_posts = d1.control_posts = {40, 0.0};
    d1.signal_strength = 0.6;
    d1.direction_seed = 1;
    d1.seed = 2;
    d1.split = Split::pool;
    d1.disorder = "d1";
    const auto anchor = compute_anchor(synth_generate(d1).corpus);
    SynthConfig d2 = d1;
    d2.disorder = "d2";
    d2.seed = 3;
    d2.split = Split::train;
    d2.direction_seed = 5;
    d2.related = RelatedDirection{1, related_cosine};
    double cond = 0.0, ctrl = 0.0;
    const auto set = build_cross_series(synth_generate(d2).corpus, anchor);
    EXPECT_EQ(set.anchor_disorder, "d1");
    EXPECT_EQ(set.disorder, "d2");
    for (const auto& s : set.series) {
        double m = 0.0;
        for (double v : s.values) m += v / static_cast<double>(s.values.size());
        (s.label == Label::condition ? cond : ctrl) += m / 40.0;
    }
    return cond - ctrl;
}

} // namespace

TEST(CrossSeries, CorrelatedKeepsSeparationOrthogonalLosesIt) {
    EXPECT_GT(class_gap(0.8), 0.02);
    EXPECT_LT(std::abs(class_gap(0.0)), 0.01);
}

TEST(Multichannel, DirectCopiesVectors) {
    const auto t = timeline("u", Label::condition, {{1, 2, 3, 4}, {5, 6, 7, 8}});
    const auto s = build_multichannel_series(t, MultichannelMode::direct);
    EXPECT_EQ(s.channels, 4u);
    EXPECT_EQ(s.values, (std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST(Multichannel, ChannelFileShapeAndMisalignment) {
    std::istringstream in(R"({"user_id":"u","idx":0,"probs":[0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.3]}
{"user_id":"u","idx":1,"probs":[0.2,0.1,0.1,0.1,0.1,0.1,0.1,0.2]}
)");
    const auto table = load_channels(in);
    const auto t = timeline("u", Label::condition, {{1, 0}, {0, 1}});
    const auto s = build_multichannel_series(t, MultichannelMode::channels, &table);
    EXPECT_EQ(s.channels, 8u);
    EXPECT_EQ(s.length(), 2u);
    const auto t3 = timeline("u", Label::condition, {{1, 0}, {0, 1}, {1, 1}});
    try {
        build_multichannel_series(t3, MultichannelMode::channels, &table);
        FAIL();
    } catch (const PreconditionError& e) {
        EXPECT_NE(std::string(e.what()).find("'u' idx 2"), std::string::npos) << e.what();
    }
}

TEST(SeriesIo, RoundTrip) {
    const AnchorEmbedding a{"d", 2, 1, {1, 0}};
    Corpus c{2, "d", Split::test, {timeline("u", Label::condition, {{1, 0}, {0, 0}}),
                                   timeline("v", Label::control, {{0.3, 0.4}})}};
    const auto set = build_cross_series(c, a);
    std::stringstream io;
    write_series(io, set);
    EXPECT_EQ(load_series(io), set);
}
