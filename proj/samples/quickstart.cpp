// Minimal end-to-end run: synthetic corpora, anchor, series, one LSTM per seed,
// and the majority-vote baseline on the same test users.

#include <iomanip>
#include <iostream>

#include "tempanchor/tempanchor.hpp"

using namespace tempanchor;

namespace {

Corpus corpus(std::uint64_t seed, Split split, std::size_t per_class) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.direction_seed = 2024;
    cfg.dim = 16;
    cfg.n_condition = cfg.n_control = per_class;
    cfg.condition_posts = cfg.control_posts = {40.0, 0.5};
    cfg.signal_strength = 0.7;
    cfg.split = split;
    cfg.disorder = "demo";
    return synth_generate(cfg).corpus;
}

} // namespace

int main() {
    const auto anchor = compute_anchor(corpus(1, Split::pool, 50));
    const auto train = corpus(2, Split::train, 40), val = corpus(3, Split::val, 15), test = corpus(4, Split::test, 30);
    const SplitSeries data{build_cross_series(train, anchor), build_cross_series(val, anchor),
                           build_cross_series(test, anchor)};

    TrainConfig cfg = TrainConfig::defaults_for(ModelKind::lstm);
    cfg.epochs = 20;
    cfg.seeds = {11, 22};
    const auto lstm = run_seeds(ModelSpec::lstm(1, 16), data, cfg);

    const auto scorer = mean_cosine_scorer(anchor);
    const auto tuned = tune_vote_threshold(val, scorer);
    const auto vote = majority_vote_baseline(test, scorer, tuned.threshold);

    std::cout << std::fixed << std::setprecision(3);
    for (const auto& r : lstm.per_seed) {
        std::cout << "lstm seed " << r.seed << ": F1 " << r.condition.f1 << " at threshold " << r.threshold << '\n';
    }
    std::cout << "lstm mean F1      " << lstm.mean_condition.f1 << '\n';
    std::cout << "majority vote F1  " << vote.mean_condition.f1 << '\n';
}
