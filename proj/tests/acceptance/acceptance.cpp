// Acceptance gate. One PASS/FAIL line per criterion; exit status is the
// number of failures (capped at 1). All tolerances and budgets live below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tempanchor/tempanchor.hpp"

using namespace tempanchor;

namespace {

// Anchor / cosine.
constexpr double kAnchorTol = 1e-12;
constexpr double kAnchorBudgetS = 1.0;
// Gradients.
constexpr double kGradTolDense = 1e-4;
constexpr double kGradTolLstm = 1e-3;
constexpr double kGradBudgetS = 30.0;
// Pipelines.
constexpr double kEasyF1 = 0.90;
constexpr double kEasyBudgetS = 120.0;
constexpr double kTemporalGap = 0.10;
constexpr double kOrderFreeCeiling = 0.65;
constexpr double kTemporalBudgetS = 300.0;
constexpr double kGlobalGap = 0.10;
constexpr double kGlobalBudgetS = 300.0;
constexpr double kTransferRetention = 0.70;
constexpr double kPrevalenceSlack = 0.05;
constexpr double kSweepTol = 1e-12;
// Gini.
constexpr double kGiniTop = 0.5;
constexpr double kGiniSumTol = 1e-9;

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

int failures = 0;

void criterion(const std::string& name, const std::function<void(Outcome&)>& body, double budget_s = 0.0) {
    Outcome o;
    o.detail << std::setprecision(4);
    const auto t0 = Clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << "threw: " << e.what() << ' ';
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    if (budget_s > 0.0) o.check(elapsed < budget_s, "runtime < " + std::to_string(budget_s) + " s");
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << "(" << std::fixed
              << std::setprecision(2) << elapsed << " s)" << std::defaultfloat << std::endl;
}

Corpus synth(SynthConfig cfg) { return synth_generate(cfg).corpus; }

SynthConfig base(std::uint64_t seed, Split split, std::size_t per_class) {
    SynthConfig c;
    c.seed = seed;
    c.direction_seed = 100;
    c.dim = 8;
    c.n_condition = c.n_control = per_class;
    c.condition_posts = c.control_posts = {50.0, 0.0};
    c.signal_strength = 0.8;
    c.split = split;
    return c;
}

SplitSeries series_for(const AnchorEmbedding& anchor, const Corpus& train, const Corpus& val, const Corpus& test) {
    return {build_cross_series(train, anchor), build_cross_series(val, anchor), build_cross_series(test, anchor)};
}

// Learning rate chosen on validation by grid search, first default seed.
TrainConfig tuned_lstm(const nn::ModelSpec& spec, const SplitSeries& data, Outcome& o) {
    const auto base = TrainConfig::defaults_for(nn::ModelKind::lstm);
    const auto tr = to_samples(data.train), va = to_samples(data.val);
    auto cfg = grid_search(spec, tr, va, base, Grid{{1e-2, 1e-3}, {}, {}}, base.seeds.front()).best;
    cfg.seeds = base.seeds;
    o.detail << "lstm lr " << cfg.lr << "; ";
    return cfg;
}

double f1_at(const std::vector<double>& probs, const std::vector<int>& labels, double t) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool pos = probs[i] >= t;
        tp += pos && labels[i] == 1;
        fp += pos && labels[i] == 0;
        fn += !pos && labels[i] == 1;
    }
    return tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
}

// ---------------------------------------------------------------------------

void anchor_criterion(Outcome& o) {
    Rng rng(1);
    Corpus pool;
    pool.dim = 16;
    pool.disorder = "oracle";
    pool.split = Split::pool;
    for (int u = 0; u < 10; ++u) {
        UserTimeline user{"u" + std::to_string(u), Label::condition, {}};
        for (int j = 0; j < 100; ++j) {
            std::vector<double> v(16);
            for (double& x : v) x = rng.normal() * 3.0 + 1.0;
            user.posts.push_back({static_cast<std::size_t>(j), j, v});
        }
        pool.users.push_back(user);
    }
    pool.users.push_back({"ctrl", Label::control, {{0, 0, std::vector<double>(16, 1e6)}}});
    const auto anchor = compute_anchor(pool);

    std::vector<double> mean(16, 0.0);
    std::size_t k = 0;
    for (const auto& user : pool.users) {
        if (user.label != Label::condition) continue;
        for (const auto& p : user.posts) {
            ++k;
            for (std::size_t i = 0; i < 16; ++i) mean[i] += (p.vector[i] - mean[i]) / static_cast<double>(k);
        }
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < 16; ++i) worst = std::max(worst, std::abs(mean[i] - anchor.vector[i]));
    o.detail << "max |anchor - streaming mean| " << worst << "; ";
    o.check(k == 1000 && worst <= kAnchorTol, "anchor oracle");

    const std::vector<double> e0{1, 0, 0}, e1{0, 1, 0}, neg{-1, 0, 0};
    o.check(cosine(e0, e0) == 1.0 && cosine(e0, e1) == 0.0 && cosine(e0, neg) == -1.0, "axis cases");
    bool scale_ok = true;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> a(16), b(16);
        for (double& x : a) x = rng.normal();
        for (double& x : b) x = rng.normal();
        const double c = *cosine(a, b);
        for (double s : {0.25, 2.0, 1024.0}) {
            std::vector<double> sa = a, sb = b;
            for (double& x : sa) x *= s;
            for (double& x : sb) x *= 4.0 / s;
            scale_ok = scale_ok && *cosine(sa, sb) == c;
        }
    }
    o.check(scale_ok, "scale invariance");
}

void gradient_criterion(Outcome& o) {
    // Smooth activation: ReLU kinks make central differences meaningless at
    // the coordinates they cross. ReLU backward is covered by feedforward.
    nn::ModelSpec cnn = nn::ModelSpec::cnn1d(1, 32);
    cnn.activation = "tanh";
    double ff = 0.0, conv = 0.0, rec = 0.0;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        ff = std::max(ff, nn::grad_check(nn::ModelSpec::feedforward(), seed).max_relative_error);
        conv = std::max(conv, nn::grad_check(cnn, seed, {1e-5, 2, 10}).max_relative_error);
        rec = std::max(rec, nn::grad_check(nn::ModelSpec::lstm(1, 32), seed, {1e-5, 4, 10}).max_relative_error);
    }
    o.detail << "max rel err ff " << ff << ", cnn1d " << conv << ", lstm " << rec << "; ";
    o.check(ff < kGradTolDense, "feedforward");
    o.check(conv < kGradTolDense, "cnn1d");
    o.check(rec < kGradTolLstm, "lstm");
}

void easy_criterion(Outcome& o) {
    auto pool_cfg = base(900, Split::pool, 100);
    const auto anchor = compute_anchor(synth(pool_cfg));
    const auto data = series_for(anchor, synth(base(1, Split::train, 100)), synth(base(2, Split::val, 100)),
                                 synth(base(3, Split::test, 100)));
    const auto ff = run_seeds(nn::ModelSpec::feedforward(), data, TrainConfig::defaults_for(nn::ModelKind::feedforward));
    const auto lstm = run_seeds(nn::ModelSpec::lstm(), data, tuned_lstm(nn::ModelSpec::lstm(), data, o));
    o.detail << "F1 feedforward " << ff.mean_f1() << ", lstm " << lstm.mean_f1() << "; ";
    o.check(ff.mean_f1() >= kEasyF1, "feedforward F1");
    o.check(lstm.mean_f1() >= kEasyF1, "lstm F1");
}

void temporality_criterion(Outcome& o) {
    const auto trend = [](std::uint64_t seed, Split split, std::size_t n) {
        auto c = base(seed, split, n);
        c.mode = SignalMode::trend;
        c.episode_fraction = 0.5;
        return synth(c);
    };
    const auto anchor = compute_anchor(trend(910, Split::pool, 100));
    const auto data = series_for(anchor, trend(11, Split::train, 100), trend(12, Split::val, 50),
                                 trend(13, Split::test, 100));
    const auto perm = run_permutation(nn::ModelSpec::lstm(), data, tuned_lstm(nn::ModelSpec::lstm(), data, o), 5, 7);
    PipelineOptions order_free;
    order_free.feature_subset = order_invariant_feature_ids();
    const auto ff =
        run_seeds(nn::ModelSpec::feedforward(), data, TrainConfig::defaults_for(nn::ModelKind::feedforward), order_free);
    o.detail << "ordered lstm F1 " << perm.ordered_f1() << ", permuted " << perm.mean_permuted_f1() << ", gap "
             << perm.gap() << "; order-invariant features F1 " << ff.mean_f1()
             << " (matched pairs score identically, so this arm cannot exceed 2/3); ";
    o.check(perm.gap() >= kTemporalGap, "ordered vs permuted gap");
    o.check(ff.mean_f1() <= kOrderFreeCeiling, "order-invariant ceiling");
}

void imbalance_criterion(Outcome& o) {
    const auto skewed = [](std::uint64_t seed, Split split, std::size_t cond, std::size_t ctrl) {
        auto c = base(seed, split, 0);
        c.n_condition = cond;
        c.n_control = ctrl;
        c.signal_strength = 0.3;
        c.episode_fraction = 0.2;
        return synth(c);
    };
    const auto anchor = compute_anchor(skewed(920, Split::pool, 100, 100));
    const auto data = series_for(anchor, skewed(21, Split::train, 30, 270), skewed(22, Split::val, 20, 180),
                                 skewed(23, Split::test, 20, 180));
    const auto config = TrainConfig::defaults_for(nn::ModelKind::feedforward);
    bool dominates = true, optimal = true;
    for (std::uint64_t seed : config.seeds) {
        const auto run = run_seed(nn::ModelSpec::feedforward(), data, config, seed);
        const auto val_f = feature_samples(*run.model.features, extract_features(data.val));
        const auto test_f = feature_samples(*run.model.features, extract_features(data.test));
        const auto val_p = predict(run.model, val_f), test_p = predict(run.model, test_f);
        const auto val_y = labels_of(val_f), test_y = labels_of(test_f);
        const double t = *run.model.threshold;

        // Sweep oracle: every observed probability plus a dense grid.
        double best = 0.0;
        for (double p : val_p) best = std::max(best, f1_at(val_p, val_y, p));
        for (int i = 0; i <= 10000; ++i) best = std::max(best, f1_at(val_p, val_y, i / 10000.0));

        const double moved = f1_at(test_p, test_y, t), fixed = f1_at(test_p, test_y, 0.5);
        o.detail << "seed " << seed << " t=" << t << " test F1 " << moved << " vs@0.5 " << fixed << "; ";
        dominates = dominates && moved >= fixed;
        optimal = optimal && std::abs(f1_at(val_p, val_y, t) - best) <= kSweepTol;
    }
    o.check(dominates, "moved >= fixed on every seed");
    o.check(optimal, "validation optimum equals sweep oracle");
}

void global_view_criterion(Outcome& o) {
    const auto long_history = [](std::uint64_t seed, Split split, std::size_t n) {
        auto c = base(seed, split, n);
        c.condition_posts = c.control_posts = {175.0, 0.0};
        c.episode_fraction = 0.2;
        c.signal_strength = 0.6;
        return synth(c);
    };
    const auto anchor = compute_anchor(long_history(930, Split::pool, 60));
    const auto train = long_history(31, Split::train, 60), val = long_history(32, Split::val, 30),
               test = long_history(33, Split::test, 60);
    const auto data = series_for(anchor, train, val, test);
    const auto lstm = run_seeds(nn::ModelSpec::lstm(), data, tuned_lstm(nn::ModelSpec::lstm(), data, o));
    const auto scorer = mean_cosine_scorer(anchor);
    const auto tuned = tune_vote_threshold(val, scorer);
    const auto vote = majority_vote_baseline(test, scorer, tuned.threshold);
    o.detail << "lstm F1 " << lstm.mean_f1() << ", majority vote F1 " << vote.mean_f1() << "; ";
    o.check(lstm.mean_f1() - vote.mean_f1() >= kGlobalGap, "global gap");
}

void transfer_criterion(Outcome& o) {
    const auto disorder = [](std::uint64_t seed, Split split, std::size_t n, std::uint64_t direction,
                             std::optional<double> related) {
        auto c = base(seed, split, n);
        c.direction_seed = direction;
        if (related) c.related = RelatedDirection{100, *related};
        c.disorder = "d1";
        return synth(c);
    };
    const auto anchor = compute_anchor(disorder(940, Split::pool, 100, 100, std::nullopt));
    const auto train = disorder(41, Split::train, 100, 100, std::nullopt);
    const auto val = disorder(42, Split::val, 50, 100, std::nullopt);
    const auto test = disorder(43, Split::test, 100, 100, std::nullopt);
    const auto spec = nn::ModelSpec::lstm();
    const auto in_domain_data = series_for(anchor, train, val, test);
    const auto config = tuned_lstm(spec, in_domain_data, o);

    const auto in_domain = run_seeds(spec, in_domain_data, config);
    const auto same = run_transfer(spec, {anchor, test, train, val}, config);
    o.check(to_json(in_domain).dump() == to_json(same).dump(), "D1 = D2 reproduces in-domain");

    const auto correlated = run_transfer(
        spec, {anchor, test, disorder(51, Split::train, 100, 200, 0.8), disorder(52, Split::val, 50, 200, 0.8)}, config);
    const auto orthogonal = run_transfer(
        spec, {anchor, test, disorder(61, Split::train, 100, 300, 0.0), disorder(62, Split::val, 50, 300, 0.0)}, config);
    const double p = 0.5;
    const double prevalence_f1 = 2.0 * p / (1.0 + p);
    o.detail << "in-domain F1 " << in_domain.mean_f1() << ", correlated " << correlated.mean_f1() << " ("
             << correlated.mean_f1() / in_domain.mean_f1() << "x), orthogonal " << orthogonal.mean_f1()
             << " (prevalence level " << prevalence_f1 << "); ";
    o.check(correlated.mean_f1() >= kTransferRetention * in_domain.mean_f1(), "correlated retention");
    o.check(orthogonal.mean_f1() <= prevalence_f1 + kPrevalenceSlack, "orthogonal at prevalence level");
}

void flops_criterion(Outcome& o) {
    const auto dense = nn::count_flops(nn::ModelSpec::feedforward(30, {64})).breakdown.front().second;
    const auto tf = nn::count_flops(nn::TransformerShape{110'000'000, 12, 512, 768}).total;
    const auto small_ff = nn::count_flops(nn::ModelSpec::feedforward(30, {38})).total;
    const auto default_ff = nn::count_flops(nn::ModelSpec::feedforward()).total;
    o.detail << "dense 30->64 " << dense << ", transformer " << tf << ", 30->38->2 " << small_ff
             << ", default feedforward " << default_ff << "; ";
    o.check(dense == 3904, "dense closed form");
    o.check(tf == 229'437'184, "transformer closed form");
    o.check(small_ff == 2472, "30->38->2 closed form");
    o.check(default_ff >= 1000 && default_ff <= 10000, "default in 1e3..1e4");
}

void gini_criterion(Outcome& o) {
    Rng rng(3);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<std::string> ids{"planted"};
    for (int k = 1; k <= 9; ++k) ids.push_back("noise" + std::to_string(k));
    for (int i = 0; i < 100; ++i) {
        const int y = i % 2;
        std::vector<double> row{y + 0.1 * rng.uniform()};
        for (int k = 0; k < 9; ++k) row.push_back(rng.uniform());
        rows.push_back(row);
        labels.push_back(y);
    }
    const auto a = rank_columns(rows, labels, ids, {}, 42, 3);
    const auto b = rank_columns(rows, labels, ids, {}, 42, 3);
    double sum = 0.0;
    for (const auto& [id, v] : a.ranking) sum += v;
    o.detail << "top " << a.ranking.front().first << " " << a.ranking.front().second << ", sum " << sum << "; ";
    o.check(a.ranking.front().first == "planted" && a.ranking.front().second > kGiniTop, "planted first");
    o.check(std::abs(sum - 1.0) <= kGiniSumTol, "importances sum to 1");
    o.check(a == b, "deterministic");
}

} // namespace

int main() {
    criterion("anchor-cosine", anchor_criterion, kAnchorBudgetS);
    criterion("gradient-fidelity", gradient_criterion, kGradBudgetS);
    criterion("easy-separation", easy_criterion, kEasyBudgetS);
    criterion("temporality", temporality_criterion, kTemporalBudgetS);
    criterion("imbalance-threshold", imbalance_criterion);
    criterion("global-view", global_view_criterion, kGlobalBudgetS);
    criterion("transfer", transfer_criterion);
    criterion("flops", flops_criterion);
    criterion("gini-selection", gini_criterion);
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
