#ifndef TEMPANCHOR_EXPERIMENTS_HPP
#define TEMPANCHOR_EXPERIMENTS_HPP

// Experiment runners: permutation analysis, cross-disorder transfer and
// anchor-free multichannel ablations. Each has an in-memory entry point and
// a manifest-driven wrapper that loads files and writes a report.
//
// Reports never contain timestamps or paths resolved at run time, so the
// same manifest and seeds give byte-identical output.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tempanchor/anchor.hpp"
#include "tempanchor/classify.hpp"
#include "tempanchor/corpus.hpp"
#include "tempanchor/error.hpp"
#include "tempanchor/rng.hpp"

namespace tempanchor {

inline constexpr const char* kPermutedSplits = "train,val,test";

// ---------------------------------------------------------------------------
// Permutation
// ---------------------------------------------------------------------------

/// Shuffles the time steps of every series; each user draws from its own
/// stream derived from (seed, split tag, position).
inline SeriesSet permute_series(const SeriesSet& set, std::uint64_t seed, const std::string& tag) {
    SeriesSet out = set;
    for (std::size_t i = 0; i < out.series.size(); ++i) {
        auto& s = out.series[i];
        const std::size_t c = s.channels;
        std::vector<std::size_t> order(s.length());
        for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
        Rng rng(derive_seed(seed, tag, i));
        rng.shuffle(std::span<std::size_t>(order));
        std::vector<double> values(s.values.size());
        for (std::size_t t = 0; t < order.size(); ++t) {
            for (std::size_t k = 0; k < c; ++k) values[t * c + k] = s.values[order[t] * c + k];
        }
        s.values = std::move(values);
    }
    return out;
}

struct PermutationReport {
    EvaluationReport ordered;
    std::vector<EvaluationReport> permuted;
    std::uint64_t permutation_seed = 0;

    double ordered_f1() const { return ordered.mean_f1(); }
    double mean_permuted_f1() const {
        double total = 0.0;
        for (const auto& r : permuted) total += r.mean_f1();
        return permuted.empty() ? 0.0 : total / static_cast<double>(permuted.size());
    }
    double gap() const { return ordered_f1() - mean_permuted_f1(); }
};

/// Trains on ordered series, then once per permutation on series whose
/// steps were shuffled in every split.
inline PermutationReport run_permutation(const ModelSpec& spec, const SplitSeries& data, const TrainConfig& config,
                                         std::size_t permutations, std::uint64_t permutation_seed,
                                         const PipelineOptions& options = {}) {
    detail::require(permutations >= 1, "permute: permutation count must be >= 1");
    PermutationReport report;
    report.permutation_seed = permutation_seed;
    report.ordered = run_seeds(spec, data, config, options);
    for (std::size_t p = 0; p < permutations; ++p) {
        const std::uint64_t seed = derive_seed(permutation_seed, "permutation", p);
        const SplitSeries shuffled{permute_series(data.train, seed, "train"), permute_series(data.val, seed, "val"),
                                   permute_series(data.test, seed, "test")};
        report.permuted.push_back(run_seeds(spec, shuffled, config, options));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Transfer
// ---------------------------------------------------------------------------

/// Train and validation posts come from D2, scored against D1's anchor; the
/// test users are D1's own.
struct TransferData {
    AnchorEmbedding anchor_d1;
    Corpus d1_test;
    Corpus d2_train;
    Corpus d2_val;
};

inline SplitSeries transfer_series(const TransferData& data) {
    if (!data.anchor_d1.disorder.empty() && !data.d1_test.disorder.empty() &&
        data.anchor_d1.disorder != data.d1_test.disorder) {
        throw PreconditionError("transfer: anchor disorder '" + data.anchor_d1.disorder +
                                "' does not match test corpus disorder '" + data.d1_test.disorder + "'");
    }
    return {build_cross_series(data.d2_train, data.anchor_d1), build_cross_series(data.d2_val, data.anchor_d1),
            build_cross_series(data.d1_test, data.anchor_d1)};
}

/// The threshold is moved on the D2-derived validation series.
inline EvaluationReport run_transfer(const ModelSpec& spec, const TransferData& data, const TrainConfig& config,
                                     const PipelineOptions& options = {}) {
    return run_seeds(spec, transfer_series(data), config, options);
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

inline std::string to_string(MultichannelMode mode) {
    return mode == MultichannelMode::direct ? "direct" : "channels";
}

inline MultichannelMode parse_multichannel_mode(const std::string& text) {
    if (text == "direct") return MultichannelMode::direct;
    if (text == "channels") return MultichannelMode::channels;
    throw PreconditionError("unknown ablation mode '" + text + "' (expected direct or channels)");
}

struct SplitCorpora {
    Corpus train, val, test;
};

inline EvaluationReport run_ablation(const ModelSpec& spec, const SplitCorpora& data, MultichannelMode mode,
                                     const ChannelTable* table, const TrainConfig& config,
                                     const PipelineOptions& options = {}) {
    if (!spec.is_sequence()) {
        throw PreconditionError("ablate: multichannel input needs an lstm or cnn1d model, not feedforward");
    }
    const SplitSeries series{build_multichannel_set(data.train, mode, table),
                             build_multichannel_set(data.val, mode, table),
                             build_multichannel_set(data.test, mode, table)};
    return run_seeds(spec, series, config, options);
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

enum class ExperimentKind { permutation, transfer, ablation };

inline std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::permutation: return "permutation";
    case ExperimentKind::transfer: return "transfer";
    case ExperimentKind::ablation: return "ablation";
    }
    return "permutation";
}

inline ExperimentKind parse_experiment_kind(const std::string& text) {
    if (text == "permutation") return ExperimentKind::permutation;
    if (text == "transfer") return ExperimentKind::transfer;
    if (text == "ablation") return ExperimentKind::ablation;
    throw FormatError("unknown experiment kind '" + text + "'");
}

/// Corpus paths for one disorder. `val` may be empty, in which case the
/// train corpus is split 80/20 with `split_seed`.
struct CorpusPaths {
    std::string train, val, test, anchor;
};

struct ExperimentManifest {
    ExperimentKind kind = ExperimentKind::permutation;
    ModelSpec model;
    TrainConfig train;
    PipelineOptions pipeline;
    CorpusPaths d1;
    CorpusPaths d2; // transfer only
    std::size_t permutations = 5;
    std::uint64_t permutation_seed = 0;
    std::uint64_t split_seed = 0;
    MultichannelMode mode = MultichannelMode::direct;
    std::string channels; // channel file, channels mode only
    std::string output;   // directory

    void validate() const {
        detail::require(kind != ExperimentKind::permutation || permutations >= 1,
                        "manifest: permutations must be >= 1");
        detail::require(!output.empty(), "manifest: output directory is required");
        const auto need = [](const std::string& path, const std::string& what) {
            if (path.empty()) throw PreconditionError("manifest: " + what + " is required");
            if (!std::filesystem::exists(path)) throw FormatError("manifest: " + what + " '" + path + "' not found");
        };
        need(d1.train, "d1.train");
        need(d1.test, "d1.test");
        if (!d1.val.empty()) need(d1.val, "d1.val");
        if (kind != ExperimentKind::ablation) need(d1.anchor, "d1.anchor");
        if (kind == ExperimentKind::transfer) {
            need(d2.train, "d2.train");
            if (!d2.val.empty()) need(d2.val, "d2.val");
        }
        if (kind == ExperimentKind::ablation && mode == MultichannelMode::channels) need(channels, "channels");
    }
};

inline nlohmann::ordered_json to_json(const CorpusPaths& p) {
    nlohmann::ordered_json j;
    j["train"] = p.train;
    if (!p.val.empty()) j["val"] = p.val;
    j["test"] = p.test;
    if (!p.anchor.empty()) j["anchor"] = p.anchor;
    return j;
}

inline nlohmann::ordered_json to_json(const ExperimentManifest& m) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(m.kind);
    j["model"] = nn::to_json(m.model);
    j["train"] = to_json(m.train);
    j["pipeline"] = {{"top_k", m.pipeline.top_k}, {"forest", to_json(m.pipeline.forest)},
                     {"feature_subset", m.pipeline.feature_subset}};
    j["d1"] = to_json(m.d1);
    if (m.kind == ExperimentKind::transfer) j["d2"] = to_json(m.d2);
    if (m.kind == ExperimentKind::permutation) {
        j["permutations"] = m.permutations;
        j["permutation_seed"] = m.permutation_seed;
        j["permuted_splits"] = kPermutedSplits;
    }
    if (m.kind == ExperimentKind::ablation) {
        j["mode"] = to_string(m.mode);
        if (!m.channels.empty()) j["channels"] = m.channels;
    }
    j["split_seed"] = m.split_seed;
    j["output"] = m.output;
    return j;
}

inline CorpusPaths corpus_paths_from_json(const nlohmann::json& j) {
    return {j.value("train", std::string{}), j.value("val", std::string{}), j.value("test", std::string{}),
            j.value("anchor", std::string{})};
}

inline ExperimentManifest manifest_from_json(const nlohmann::json& j) {
    try {
        ExperimentManifest m;
        m.kind = parse_experiment_kind(j.at("kind").get<std::string>());
        m.model = nn::model_spec_from_json(j.at("model"));
        m.train = train_config_from_json(j.value("train", nlohmann::json::object()),
                                         TrainConfig::defaults_for(m.model.kind));
        if (j.contains("pipeline")) {
            const auto& p = j.at("pipeline");
            m.pipeline.top_k = p.value("top_k", m.pipeline.top_k);
            if (p.contains("forest")) m.pipeline.forest = forest_config_from_json(p.at("forest"));
            m.pipeline.feature_subset = p.value("feature_subset", m.pipeline.feature_subset);
        }
        m.d1 = corpus_paths_from_json(j.at("d1"));
        if (j.contains("d2")) m.d2 = corpus_paths_from_json(j.at("d2"));
        m.permutations = j.value("permutations", m.permutations);
        m.permutation_seed = j.value("permutation_seed", m.permutation_seed);
        m.split_seed = j.value("split_seed", m.split_seed);
        if (j.contains("mode")) m.mode = parse_multichannel_mode(j.at("mode").get<std::string>());
        m.channels = j.value("channels", std::string{});
        m.output = j.value("output", std::string{});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed manifest (") + e.what() + ")");
    }
}

inline ExperimentManifest load_manifest(const std::string& path) {
    return manifest_from_json(read_json_file(path));
}

namespace detail {

inline std::pair<Corpus, Corpus> load_train_val(const CorpusPaths& paths, std::uint64_t split_seed) {
    Corpus train = load_corpus(paths.train);
    if (!paths.val.empty()) return {std::move(train), load_corpus(paths.val)};
    return split_corpus(train, 0.8, split_seed);
}

inline nlohmann::ordered_json permutation_to_json(const PermutationReport& r) {
    nlohmann::ordered_json j;
    j["ordered"] = to_json(r.ordered);
    auto permuted = nlohmann::ordered_json::array();
    for (const auto& p : r.permuted) permuted.push_back(to_json(p));
    j["permuted"] = std::move(permuted);
    j["ordered_f1"] = r.ordered_f1();
    j["mean_permuted_f1"] = r.mean_permuted_f1();
    j["gap"] = r.gap();
    return j;
}

} // namespace detail

/// Runs the manifest, writes `<output>/manifest.json` and
/// `<output>/report.json`, and returns the report body.
inline nlohmann::ordered_json run_manifest(const ExperimentManifest& m, std::size_t jobs = 1) {
    m.validate();
    PipelineOptions options = m.pipeline;
    options.jobs = jobs;
    nlohmann::ordered_json body;
    switch (m.kind) {
    case ExperimentKind::permutation: {
        const auto anchor = load_anchor(m.d1.anchor);
        auto [train, val] = detail::load_train_val(m.d1, m.split_seed);
        const SplitSeries data{build_cross_series(train, anchor), build_cross_series(val, anchor),
                               build_cross_series(load_corpus(m.d1.test), anchor)};
        body = detail::permutation_to_json(
            run_permutation(m.model, data, m.train, m.permutations, m.permutation_seed, options));
        break;
    }
    case ExperimentKind::transfer: {
        auto [train, val] = detail::load_train_val(m.d2, m.split_seed);
        const TransferData data{load_anchor(m.d1.anchor), load_corpus(m.d1.test), std::move(train), std::move(val)};
        body = to_json(run_transfer(m.model, data, m.train, options));
        body["train_disorder"] = data.d2_train.disorder;
        body["test_disorder"] = data.d1_test.disorder;
        break;
    }
    case ExperimentKind::ablation: {
        std::optional<ChannelTable> table;
        if (m.mode == MultichannelMode::channels) table = load_channels(m.channels);
        auto [train, val] = detail::load_train_val(m.d1, m.split_seed);
        const SplitCorpora data{std::move(train), std::move(val), load_corpus(m.d1.test)};
        body = to_json(run_ablation(m.model, data, m.mode, table ? &*table : nullptr, m.train, options));
        body["mode"] = to_string(m.mode);
        break;
    }
    }
    nlohmann::ordered_json report;
    report["kind"] = to_string(m.kind);
    report["manifest"] = to_json(m);
    report["result"] = std::move(body);
    std::error_code ec;
    std::filesystem::create_directories(m.output, ec);
    if (ec) throw FormatError("cannot create output directory '" + m.output + "': " + ec.message());
    write_json_file((std::filesystem::path(m.output) / "manifest.json").string(), to_json(m));
    write_json_file((std::filesystem::path(m.output) / "report.json").string(), report);
    return report;
}

} // namespace tempanchor

#endif // TEMPANCHOR_EXPERIMENTS_HPP
