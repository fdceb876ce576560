#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "tempanchor/anchor.hpp"
#include "tempanchor/synth.hpp"

using namespace tempanchor;

namespace {

SynthConfig small(SignalMode mode, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.direction_seed = seed + 100;
    cfg.dim = 8;
    cfg.n_condition = cfg.n_control = 6;
    cfg.condition_posts = cfg.control_posts = {30, 0.5};
    cfg.mode = mode;
    cfg.signal_strength = 0.6;
    return cfg;
}

std::string serialize(const Corpus& c) {
    std::ostringstream out;
    write_corpus(out, c);
    return out.str();
}

SimilaritySeries truth_series(const UserTimeline& u, const std::vector<double>& direction) {
    AnchorEmbedding a{"truth", direction.size(), 0, direction};
    return build_series(u, a);
}

} // namespace

TEST(Synth, ByteIdenticalUnderSeed) {
    for (auto mode : {SignalMode::magnitude, SignalMode::trend}) {
        EXPECT_EQ(serialize(synth_generate(small(mode, 7)).corpus), serialize(synth_generate(small(mode, 7)).corpus));
        EXPECT_NE(serialize(synth_generate(small(mode, 7)).corpus), serialize(synth_generate(small(mode, 8)).corpus));
    }
}

TEST(Synth, HiddenDirectionIsUnit) {
    const auto u = hidden_direction(16, 4);
    double n = 0.0;
    for (double x : u) n += x * x;
    EXPECT_NEAR(n, 1.0, 1e-12);
}

TEST(Synth, RelatedDirectionHasRequestedCosine) {
    const auto base = hidden_direction(32, 1);
    for (double c : {0.0, 0.8, -0.3}) {
        const auto other = hidden_direction(32, 2, RelatedDirection{1, c});
        double d = 0.0;
        for (std::size_t i = 0; i < 32; ++i) d += base[i] * other[i];
        EXPECT_NEAR(d, c, 1e-12);
    }
}

TEST(Synth, TrendPairsShareSimilarityMultisets) {
    const auto gen = synth_generate(small(SignalMode::trend, 3));
    ASSERT_EQ(gen.truth.pair_map.size(), 6u);
    std::map<std::string, const UserTimeline*> by_id;
    for (const auto& u : gen.corpus.users) by_id[u.user_id] = &u;
    for (const auto& [cond, ctrl] : gen.truth.pair_map) {
        auto a = truth_series(*by_id.at(cond), gen.truth.hidden_direction).values;
        auto b = truth_series(*by_id.at(ctrl), gen.truth.hidden_direction).values;
        ASSERT_EQ(a.size(), b.size());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
    }
}

TEST(Synth, MagnitudeEpisodeRaisesSimilarity) {
    auto cfg = small(SignalMode::magnitude, 5);
    cfg.n_condition = cfg.n_control = 30;
    const auto gen = synth_generate(cfg);
    double cond = 0.0, ctrl = 0.0;
    for (const auto& u : gen.corpus.users) {
        const auto s = truth_series(u, gen.truth.hidden_direction);
        const double mx = *std::max_element(s.values.begin(), s.values.end());
        (u.label == Label::condition ? cond : ctrl) += mx / 30.0;
    }
    EXPECT_GT(cond, ctrl + 0.2);
}

TEST(Synth, ValidatesConfig) {
    auto cfg = small(SignalMode::trend, 1);
    cfg.n_control = 5;
    EXPECT_THROW(synth_generate(cfg), PreconditionError);
    cfg = small(SignalMode::magnitude, 1);
    cfg.signal_strength = 1.5;
    EXPECT_THROW(synth_generate(cfg), PreconditionError);
    cfg = small(SignalMode::magnitude, 1);
    cfg.dim = 1;
    EXPECT_THROW(synth_generate(cfg), PreconditionError);
}

TEST(Synth, GroundTruthJson) {
    const auto gen = synth_generate(small(SignalMode::trend, 2));
    const auto j = to_json(gen.truth);
    EXPECT_EQ(j.at("hidden_direction").size(), 8u);
    EXPECT_EQ(j.at("pair_map").size(), 6u);
}
