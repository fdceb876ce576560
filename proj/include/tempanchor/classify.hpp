#ifndef TEMPANCHOR_CLASSIFY_HPP
#define TEMPANCHOR_CLASSIFY_HPP

// Training, threshold moving, evaluation and the chunk + majority-vote
// baseline.
//
// Decision rule everywhere: predict condition when p >= threshold.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tempanchor/anchor.hpp"
#include "tempanchor/corpus.hpp"
#include "tempanchor/error.hpp"
#include "tempanchor/features.hpp"
#include "tempanchor/forest.hpp"
#include "tempanchor/nn/adam.hpp"
#include "tempanchor/nn/model.hpp"
#include "tempanchor/parallel.hpp"
#include "tempanchor/rng.hpp"

namespace tempanchor {

using nn::ModelKind;
using nn::ModelSpec;
using nn::Sample;

inline const std::vector<std::uint64_t> kDefaultSeeds{11, 22, 33, 44, 55};

struct TrainConfig {
    double lr = 1e-3;
    std::size_t batch_size = 16;
    std::size_t epochs = 200;
    std::size_t patience = 10;
    std::vector<std::uint64_t> seeds = kDefaultSeeds;

    /// Learning rate, batch size and epoch budget per model family.
    static TrainConfig defaults_for(ModelKind kind) {
        TrainConfig c;
        switch (kind) {
        case ModelKind::feedforward: c.lr = 1e-3; c.batch_size = 16; c.epochs = 200; break;
        case ModelKind::cnn1d: c.lr = 1e-3; c.batch_size = 16; c.epochs = 50; break;
        case ModelKind::lstm: c.lr = 1e-2; c.batch_size = 8; c.epochs = 50; break;
        }
        return c;
    }

    void validate() const {
        detail::require(epochs >= 1, "train: epochs must be >= 1");
        detail::require(patience >= 1, "train: patience must be >= 1");
        detail::require(batch_size >= 1, "train: batch size must be >= 1");
        detail::require(lr > 0.0, "train: learning rate must be positive");
        detail::require(!seeds.empty(), "train: at least one seed is required");
    }

    bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

/// A trained network plus what is needed to apply it to new series.
struct FeaturePipeline {
    std::vector<std::string> selected;
    std::vector<double> mean;
    std::vector<double> scale;

    Sample transform(const FeatureVector& fv) const {
        Sample s{nn::MatrixXd(static_cast<Eigen::Index>(selected.size()), 1), fv.label == Label::condition};
        for (std::size_t i = 0; i < selected.size(); ++i) {
            s.x(static_cast<Eigen::Index>(i), 0) = (fv[selected[i]] - mean[i]) / scale[i];
        }
        return s;
    }

    bool operator==(const FeaturePipeline&) const = default;
};

struct TrainedModel {
    ModelSpec spec;
    std::vector<double> parameters;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    std::optional<double> threshold;
    std::optional<FeaturePipeline> features;

    bool operator==(const TrainedModel&) const = default;
};

/// Training stopped on a non-finite loss or gradient. Carries the best model
/// seen before the failure.
class TrainingAborted : public std::runtime_error {
public:
    TrainingAborted(const std::string& what, TrainedModel last_good)
        : std::runtime_error(what), last_good_(std::move(last_good)) {}
    const TrainedModel& last_good() const { return last_good_; }

private:
    TrainedModel last_good_;
};

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

inline Sample to_sample(const SimilaritySeries& s) {
    const auto c = static_cast<Eigen::Index>(s.channels);
    const auto t = static_cast<Eigen::Index>(s.length());
    return {Eigen::Map<const nn::MatrixXd>(s.values.data(), c, t), s.label == Label::condition};
}

inline std::vector<Sample> to_samples(const SeriesSet& set) {
    std::vector<Sample> out;
    out.reserve(set.series.size());
    for (const auto& s : set.series) out.push_back(to_sample(s));
    return out;
}

inline std::vector<int> labels_of(std::span<const Sample> samples) {
    std::vector<int> y;
    for (const auto& s : samples) y.push_back(s.label);
    return y;
}

namespace detail {

inline void require_both_classes(std::span<const Sample> samples, const std::string& what) {
    bool has[2] = {false, false};
    for (const auto& s : samples) has[s.label != 0] = true;
    if (!has[0] || !has[1]) throw PreconditionError(what + " must contain both classes");
}

inline double mean_loss(nn::Network& net, std::span<const double> params, std::span<const Sample> samples) {
    double total = 0.0;
    std::vector<const Sample*> refs;
    std::vector<int> labels;
    const std::size_t chunk = 64;
    for (std::size_t start = 0; start < samples.size(); start += chunk) {
        refs.clear();
        labels.clear();
        for (std::size_t i = start; i < std::min(samples.size(), start + chunk); ++i) {
            refs.push_back(&samples[i]);
            labels.push_back(samples[i].label);
        }
        total += nn::softmax_cross_entropy(net.forward(refs, params), labels).loss * static_cast<double>(refs.size());
    }
    return total / static_cast<double>(samples.size());
}

} // namespace detail

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Adam on mean softmax cross-entropy. After every epoch the validation loss
/// is measured; the parameters with the lowest validation loss are kept and
/// training stops once `patience` epochs pass without improvement.
inline TrainedModel train(ModelSpec spec, std::span<const Sample> train_set, std::span<const Sample> val_set,
                          const TrainConfig& config, std::uint64_t seed) {
    config.validate();
    detail::require(!train_set.empty() && !val_set.empty(), "train: train and validation sets must be non-empty");
    detail::require_both_classes(train_set, "train: training set");
    detail::require_both_classes(val_set, "train: validation set");
    spec.seed = seed;
    nn::Network net(spec);
    TrainedModel model{spec, net.initial_parameters(seed), {}, 0, std::nullopt, std::nullopt};
    std::vector<double> params = model.parameters;
    nn::AdamState adam(params.size());
    const nn::AdamHyper hyper{config.lr};
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    std::vector<std::size_t> order(train_set.size());
    std::vector<const Sample*> batch;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(seed, "shuffle", epoch));
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        try {
            for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
                batch.clear();
                for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
                    batch.push_back(&train_set[order[i]]);
                }
                const auto lg = nn::loss_and_gradients(net, params, batch);
                if (!std::isfinite(lg.loss)) {
                    throw nn::NonFiniteError("non-finite training loss in epoch " + std::to_string(epoch));
                }
                epoch_loss += lg.loss * static_cast<double>(batch.size());
                nn::adam_step(params, lg.gradient, adam, hyper);
            }
        } catch (const nn::NonFiniteError& e) {
            throw TrainingAborted(std::string("training aborted: ") + e.what() + "; best epoch so far " +
                                      std::to_string(model.best_epoch),
                                  model);
        }
        const double val_loss = detail::mean_loss(net, params, val_set);
        model.history.push_back({epoch, epoch_loss / static_cast<double>(train_set.size()), val_loss});
        if (!std::isfinite(val_loss)) {
            throw TrainingAborted("training aborted: non-finite validation loss in epoch " + std::to_string(epoch),
                                  model);
        }
        if (val_loss < best_val) {
            best_val = val_loss;
            since_best = 0;
            model.best_epoch = epoch;
            model.parameters = params;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    return model;
}

inline std::vector<double> predict(const TrainedModel& model, std::span<const Sample> samples) {
    nn::Network net(model.spec);
    return nn::predict_probabilities(net, model.parameters, samples);
}

// ---------------------------------------------------------------------------
// Metrics and thresholds
// ---------------------------------------------------------------------------

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
    bool operator==(const Confusion&) const = default;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const ClassMetrics&) const = default;
};

inline ClassMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    ClassMetrics m;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

inline ClassMetrics condition_metrics(const Confusion& c) { return metrics_from_counts(c.tp, c.fp, c.fn); }
inline ClassMetrics control_metrics(const Confusion& c) { return metrics_from_counts(c.tn, c.fn, c.fp); }

inline Confusion confusion_at(std::span<const double> probs, std::span<const int> labels, double threshold) {
    detail::require(probs.size() == labels.size(), "metrics: probabilities and labels differ in length");
    Confusion c;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const bool pred = probs[i] >= threshold;
        const bool truth = labels[i] != 0;
        if (pred && truth) ++c.tp;
        else if (pred) ++c.fp;
        else if (truth) ++c.fn;
        else ++c.tn;
    }
    return c;
}

struct ThresholdChoice {
    double threshold = 0.5;
    double f1 = 0.0;
};

/// Candidates are the distinct predicted probabilities plus 0.5; returns the
/// one with the highest condition-class F1, preferring the larger threshold
/// on ties.
inline ThresholdChoice move_threshold(std::span<const double> probs, std::span<const int> labels) {
    detail::require(probs.size() == labels.size(), "threshold: probabilities and labels differ in length");
    bool has[2] = {false, false};
    for (int y : labels) has[y != 0] = true;
    if (!has[0] || !has[1]) throw PreconditionError("threshold: validation set must contain both classes");
    std::vector<double> candidates(probs.begin(), probs.end());
    candidates.push_back(0.5);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    ThresholdChoice best{candidates.back(), -1.0};
    for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
        const double f1 = condition_metrics(confusion_at(probs, labels, *it)).f1;
        if (f1 > best.f1) best = {*it, f1};
    }
    return best;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct SeedResult {
    std::uint64_t seed = 0;
    double threshold = 0.5;
    Confusion confusion;
    ClassMetrics condition;
    ClassMetrics control;
    double val_f1 = 0.0;
    std::size_t best_epoch = 0;

    bool operator==(const SeedResult&) const = default;
};

struct EvaluationReport {
    std::vector<SeedResult> per_seed;
    ClassMetrics mean_condition;
    ClassMetrics mean_control;

    double mean_f1() const { return mean_condition.f1; }
    bool operator==(const EvaluationReport&) const = default;
};

/// Means are arithmetic means of the per-seed values.
inline EvaluationReport summarize(std::vector<SeedResult> results) {
    EvaluationReport r;
    r.per_seed = std::move(results);
    if (r.per_seed.empty()) return r;
    const auto n = static_cast<double>(r.per_seed.size());
    for (const auto& s : r.per_seed) {
        r.mean_condition.precision += s.condition.precision / n;
        r.mean_condition.recall += s.condition.recall / n;
        r.mean_condition.f1 += s.condition.f1 / n;
        r.mean_control.precision += s.control.precision / n;
        r.mean_control.recall += s.control.recall / n;
        r.mean_control.f1 += s.control.f1 / n;
    }
    return r;
}

inline SeedResult score(std::span<const double> probs, std::span<const int> labels, double threshold,
                        std::uint64_t seed = 0) {
    detail::require(!probs.empty(), "evaluate: empty test set");
    SeedResult r;
    r.seed = seed;
    r.threshold = threshold;
    r.confusion = confusion_at(probs, labels, threshold);
    r.condition = condition_metrics(r.confusion);
    r.control = control_metrics(r.confusion);
    return r;
}

/// Scores a model on a test set at a threshold chosen beforehand on
/// validation data.
inline EvaluationReport evaluate(const TrainedModel& model, std::span<const Sample> test, double threshold) {
    detail::require(!test.empty(), "evaluate: empty test set");
    const auto probs = predict(model, test);
    const auto labels = labels_of(test);
    SeedResult r = score(probs, labels, threshold, model.spec.seed);
    r.best_epoch = model.best_epoch;
    return summarize({r});
}

// ---------------------------------------------------------------------------
// End-to-end runs over seeds
// ---------------------------------------------------------------------------

struct SplitSeries {
    SeriesSet train, val, test;
};

struct PipelineOptions {
    std::size_t top_k = 30;
    ForestConfig forest;
    /// Restricts feature selection to these ids (feedforward only).
    std::vector<std::string> feature_subset;
    std::size_t jobs = 1;
};

/// Gini selection of the top-k features on the training vectors, then
/// z-scoring with training statistics.
inline FeaturePipeline fit_feature_pipeline(const std::vector<FeatureVector>& train_vectors,
                                            const PipelineOptions& options, std::uint64_t seed,
                                            SelectionReport* report_out = nullptr) {
    auto report = rank_by_gini(train_vectors, options.forest, derive_seed(seed, "forest"), options.top_k,
                               options.feature_subset);
    FeaturePipeline p;
    p.selected = report.selected;
    for (const auto& id : p.selected) {
        const std::size_t col = feature_index(id);
        double mean = 0.0;
        for (const auto& fv : train_vectors) mean += fv.values[col];
        mean /= static_cast<double>(train_vectors.size());
        double var = 0.0;
        for (const auto& fv : train_vectors) var += (fv.values[col] - mean) * (fv.values[col] - mean);
        var /= static_cast<double>(train_vectors.size());
        p.mean.push_back(mean);
        p.scale.push_back(var > 0.0 ? std::sqrt(var) : 1.0);
    }
    if (report_out) *report_out = std::move(report);
    return p;
}

inline std::vector<Sample> feature_samples(const FeaturePipeline& p, const std::vector<FeatureVector>& vectors) {
    std::vector<Sample> out;
    for (const auto& fv : vectors) out.push_back(p.transform(fv));
    return out;
}

struct SeedRun {
    TrainedModel model;
    SeedResult result;
};

/// One replica: (features,) train, move the threshold on validation,
/// evaluate on test.
inline SeedRun run_seed(ModelSpec spec, const SplitSeries& data, const TrainConfig& config, std::uint64_t seed,
                        const PipelineOptions& options = {}) {
    std::vector<Sample> train_s, val_s, test_s;
    std::optional<FeaturePipeline> pipeline;
    if (spec.kind == ModelKind::feedforward) {
        const auto train_f = extract_features(data.train);
        pipeline = fit_feature_pipeline(train_f, options, seed);
        train_s = feature_samples(*pipeline, train_f);
        val_s = feature_samples(*pipeline, extract_features(data.val));
        test_s = feature_samples(*pipeline, extract_features(data.test));
        spec.input_size = pipeline->selected.size();
    } else {
        train_s = to_samples(data.train);
        val_s = to_samples(data.val);
        test_s = to_samples(data.test);
        spec.input_size = data.train.channels;
    }
    SeedRun run{train(spec, train_s, val_s, config, seed), {}};
    run.model.features = pipeline;
    const auto choice = move_threshold(predict(run.model, val_s), labels_of(val_s));
    run.model.threshold = choice.threshold;
    run.result = evaluate(run.model, test_s, choice.threshold).per_seed.front();
    run.result.val_f1 = choice.f1;
    return run;
}

inline EvaluationReport run_seeds(const ModelSpec& spec, const SplitSeries& data, const TrainConfig& config,
                                  const PipelineOptions& options = {}) {
    config.validate();
    auto results = parallel_map<SeedResult>(config.seeds.size(), options.jobs, [&](std::size_t i) {
        return run_seed(spec, data, config, config.seeds[i], options).result;
    });
    return summarize(std::move(results));
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

/// Empty lists keep the base configuration's value.
struct Grid {
    std::vector<double> lr;
    std::vector<std::size_t> batch_size;
    std::vector<std::size_t> epochs;

    std::size_t size() const {
        return std::max<std::size_t>(1, lr.size()) * std::max<std::size_t>(1, batch_size.size()) *
               std::max<std::size_t>(1, epochs.size());
    }
};

struct GridPoint {
    TrainConfig config;
    double val_f1 = 0.0;
    double threshold = 0.5;
};

struct GridResult {
    TrainConfig best;
    std::vector<GridPoint> table;
};

/// Exhaustive search; the best point has the highest validation F1 after
/// threshold moving, earliest in grid order on ties.
inline GridResult grid_search(const ModelSpec& spec, std::span<const Sample> train_set,
                              std::span<const Sample> val_set, const TrainConfig& base, const Grid& grid,
                              std::uint64_t seed, std::size_t jobs = 1) {
    detail::require(!grid.lr.empty() || !grid.batch_size.empty() || !grid.epochs.empty(),
                    "grid search: grid is empty");
    std::vector<TrainConfig> points;
    const auto lrs = grid.lr.empty() ? std::vector<double>{base.lr} : grid.lr;
    const auto bss = grid.batch_size.empty() ? std::vector<std::size_t>{base.batch_size} : grid.batch_size;
    const auto eps = grid.epochs.empty() ? std::vector<std::size_t>{base.epochs} : grid.epochs;
    for (double lr : lrs) {
        for (std::size_t bs : bss) {
            for (std::size_t e : eps) {
                TrainConfig c = base;
                c.lr = lr;
                c.batch_size = bs;
                c.epochs = e;
                c.seeds = {seed};
                points.push_back(c);
            }
        }
    }
    GridResult result;
    result.table = parallel_map<GridPoint>(points.size(), jobs, [&](std::size_t i) {
        const auto model = train(spec, train_set, val_set, points[i], seed);
        const auto choice = move_threshold(predict(model, val_set), labels_of(val_set));
        return GridPoint{points[i], choice.f1, choice.threshold};
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.table.size(); ++i) {
        if (result.table[i].val_f1 > result.table[best].val_f1) best = i;
    }
    result.best = result.table[best].config;
    return result;
}

// ---------------------------------------------------------------------------
// Chunk + majority-vote baseline
// ---------------------------------------------------------------------------

/// Maps a chunk of consecutive posts to a condition score.
using ChunkScorer = std::function<double(std::span<const PostEmbedding>)>;

/// Mean cosine of the chunk's posts to the anchor (zero-norm posts score 0).
inline ChunkScorer mean_cosine_scorer(AnchorEmbedding anchor) {
    return [anchor = std::move(anchor)](std::span<const PostEmbedding> chunk) {
        double total = 0.0;
        for (const auto& p : chunk) total += cosine(p.vector, anchor.vector).value_or(kDegenerateFill);
        return total / static_cast<double>(chunk.size());
    };
}

struct VoteOptions {
    std::size_t chunk_size = 35; // posts per chunk; the last chunk may be shorter
    bool ties_to_condition = false;
};

inline std::vector<double> chunk_scores(const UserTimeline& user, const ChunkScorer& scorer,
                                        const VoteOptions& options) {
    detail::require(options.chunk_size >= 1, "baseline: chunk size must be >= 1");
    if (user.posts.empty()) throw PreconditionError("baseline: user '" + user.user_id + "' has no posts");
    std::vector<double> scores;
    const std::span<const PostEmbedding> posts(user.posts);
    for (std::size_t start = 0; start < posts.size(); start += options.chunk_size) {
        scores.push_back(scorer(posts.subspan(start, std::min(options.chunk_size, posts.size() - start))));
    }
    return scores;
}

/// Condition iff strictly more than half of the chunk votes are condition
/// (ties follow options.ties_to_condition).
inline Label majority_label(std::span<const double> scores, double threshold, const VoteOptions& options = {}) {
    std::size_t votes = 0;
    for (double s : scores) votes += s >= threshold ? 1 : 0;
    const std::size_t against = scores.size() - votes;
    if (votes == against) return options.ties_to_condition ? Label::condition : Label::control;
    return votes > against ? Label::condition : Label::control;
}

inline EvaluationReport majority_vote_baseline(const Corpus& users, const ChunkScorer& scorer, double threshold,
                                               const VoteOptions& options = {}) {
    detail::require(!users.users.empty(), "baseline: no users");
    std::vector<double> predicted;
    std::vector<int> labels;
    for (const auto& user : users.users) {
        const auto scores = chunk_scores(user, scorer, options);
        predicted.push_back(majority_label(scores, threshold, options) == Label::condition ? 1.0 : 0.0);
        labels.push_back(user.label == Label::condition);
    }
    return summarize({score(predicted, labels, 0.5)});
}

/// Picks the chunk threshold maximizing user-level condition F1 on
/// validation users (candidates: every chunk score; ties to the larger).
inline ThresholdChoice tune_vote_threshold(const Corpus& val, const ChunkScorer& scorer,
                                           const VoteOptions& options = {}) {
    std::vector<std::vector<double>> per_user;
    std::vector<int> labels;
    std::vector<double> candidates;
    for (const auto& user : val.users) {
        per_user.push_back(chunk_scores(user, scorer, options));
        labels.push_back(user.label == Label::condition);
        candidates.insert(candidates.end(), per_user.back().begin(), per_user.back().end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    detail::require(!candidates.empty(), "baseline: validation set is empty");
    ThresholdChoice best{candidates.back(), -1.0};
    std::vector<double> predicted(per_user.size());
    for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
        for (std::size_t u = 0; u < per_user.size(); ++u) {
            predicted[u] = majority_label(per_user[u], *it, options) == Label::condition ? 1.0 : 0.0;
        }
        const double f1 = condition_metrics(confusion_at(predicted, labels, 0.5)).f1;
        if (f1 > best.f1) best = {*it, f1};
    }
    return best;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const TrainConfig& c) {
    return {{"lr", c.lr}, {"batch_size", c.batch_size}, {"epochs", c.epochs}, {"patience", c.patience},
            {"seeds", c.seeds}};
}

/// Missing fields fall back to `base`.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base) {
    base.lr = j.value("lr", base.lr);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.epochs = j.value("epochs", base.epochs);
    base.patience = j.value("patience", base.patience);
    base.seeds = j.value("seeds", base.seeds);
    return base;
}

inline nlohmann::ordered_json to_json(const ClassMetrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

inline nlohmann::ordered_json to_json(const SeedResult& r) {
    nlohmann::ordered_json j;
    j["seed"] = r.seed;
    j["threshold"] = r.threshold;
    j["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}, {"tn", r.confusion.tn}};
    j["condition"] = to_json(r.condition);
    j["control"] = to_json(r.control);
    j["val_f1"] = r.val_f1;
    j["best_epoch"] = r.best_epoch;
    return j;
}

inline nlohmann::ordered_json to_json(const EvaluationReport& r) {
    nlohmann::ordered_json j;
    auto seeds = nlohmann::ordered_json::array();
    for (const auto& s : r.per_seed) seeds.push_back(to_json(s));
    j["per_seed"] = std::move(seeds);
    j["mean"] = {{"condition", to_json(r.mean_condition)}, {"control", to_json(r.mean_control)}};
    return j;
}

inline nlohmann::ordered_json to_json(const TrainedModel& m) {
    nlohmann::ordered_json j;
    j["spec"] = nn::to_json(m.spec);
    j["parameters"] = m.parameters;
    auto history = nlohmann::ordered_json::array();
    for (const auto& e : m.history) {
        history.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
    }
    j["history"] = std::move(history);
    j["best_epoch"] = m.best_epoch;
    if (m.threshold) j["threshold"] = *m.threshold;
    if (m.features) {
        j["features"] = {{"selected", m.features->selected}, {"mean", m.features->mean}, {"scale", m.features->scale}};
    }
    return j;
}

inline TrainedModel trained_model_from_json(const nlohmann::json& j) {
    TrainedModel m;
    m.spec = nn::model_spec_from_json(j.at("spec"));
    m.parameters = j.at("parameters").get<std::vector<double>>();
    for (const auto& e : j.at("history")) {
        m.history.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                             e.at("val_loss").get<double>()});
    }
    m.best_epoch = j.at("best_epoch").get<std::size_t>();
    if (j.contains("threshold")) m.threshold = j.at("threshold").get<double>();
    if (j.contains("features")) {
        const auto& f = j.at("features");
        m.features = FeaturePipeline{f.at("selected").get<std::vector<std::string>>(),
                                     f.at("mean").get<std::vector<double>>(), f.at("scale").get<std::vector<double>>()};
    }
    if (m.parameters.size() != nn::closed_form_parameter_count(m.spec)) {
        throw FormatError("checkpoint has " + std::to_string(m.parameters.size()) + " parameters, spec needs " +
                          std::to_string(nn::closed_form_parameter_count(m.spec)));
    }
    return m;
}

inline void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw FormatError("failed writing '" + path + "'");
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": malformed JSON (" + e.what() + ")");
    }
}

inline TrainedModel load_checkpoint(const std::string& path) {
    const auto j = read_json_file(path);
    try {
        return trained_model_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": malformed checkpoint (" + e.what() + ")");
    } catch (const PreconditionError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

} // namespace tempanchor

#endif // TEMPANCHOR_CLASSIFY_HPP
