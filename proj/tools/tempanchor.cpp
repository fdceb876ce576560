// Command-line front end. Every subcommand wraps one library operation or
// experiment runner. Exit codes: 0 success, 1 precondition failure (bad
// flags or inputs that violate an operation's contract), 2 I/O or format
// error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tempanchor/tempanchor.hpp"

using namespace tempanchor;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write '" + path + "'");
    return out;
}

void add_seed(CLI::App* sub, std::uint64_t& seed, const std::string& what) {
    sub->add_option("--seed", seed, "Seed for " + what + " (falls back to $TEMPANCHOR_SEED)")
        ->envname("TEMPANCHOR_SEED");
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

void print_report(const std::string& title, const EvaluationReport& r) {
    std::cout << title << '\n';
    for (const auto& s : r.per_seed) {
        std::cout << "  seed " << s.seed << ": F1 " << fmt(s.condition.f1) << "  P " << fmt(s.condition.precision)
                  << "  R " << fmt(s.condition.recall) << "  threshold " << fmt(s.threshold) << "  (tp " << s.confusion.tp
                  << " fp " << s.confusion.fp << " fn " << s.confusion.fn << " tn " << s.confusion.tn << ")\n";
    }
    std::cout << "  mean: F1 " << fmt(r.mean_condition.f1) << "  P " << fmt(r.mean_condition.precision) << "  R "
              << fmt(r.mean_condition.recall) << '\n';
}

void write_series_csv(const std::string& path, const SeriesSet& set) {
    auto out = open_out(path);
    out << "user_id,label,step";
    for (std::size_t c = 0; c < set.channels; ++c) out << ",c" << c;
    out << '\n' << std::setprecision(17);
    for (const auto& s : set.series) {
        for (std::size_t t = 0; t < s.length(); ++t) {
            out << s.user_id << ',' << to_string(s.label) << ',' << t;
            for (double v : s.step(t)) out << ',' << v;
            out << '\n';
        }
    }
}

std::vector<Sample> samples_for(const TrainedModel& model, const SeriesSet& set) {
    if (model.spec.kind != ModelKind::feedforward) return to_samples(set);
    if (!model.features) throw FormatError("feedforward checkpoint has no feature pipeline");
    return feature_samples(*model.features, extract_features(set));
}

nlohmann::ordered_json read_manifest_checked(const std::string& path, ExperimentKind expected,
                                             ExperimentManifest& out) {
    out = load_manifest(path);
    if (out.kind != expected) {
        throw PreconditionError("manifest '" + path + "' is a " + to_string(out.kind) + " manifest, expected " +
                                to_string(expected));
    }
    return to_json(out);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anchor-similarity time series: generate, represent, train, evaluate."};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    std::function<void()> action;

    // ---- synth -------------------------------------------------------------
    SynthConfig synth;
    std::string synth_mode = "magnitude", synth_split = "train", synth_out, synth_truth;
    std::optional<std::uint64_t> related_seed;
    double related_cosine = 0.0, post_spread = 1.0;
    {
        auto* sub = app.add_subcommand("synth", "Generate a synthetic corpus");
        add_seed(sub, synth.seed, "user draws");
        sub->add_option("--direction-seed", synth.direction_seed, "Seed of the hidden direction");
        sub->add_option("--related-seed", related_seed, "Build the hidden direction at --related-cosine to this seed's");
        sub->add_option("--related-cosine", related_cosine, "Cosine to the related direction")->check(CLI::Range(-1.0, 1.0));
        sub->add_option("--mode", synth_mode, "Signal mode")->check(CLI::IsMember({"magnitude", "trend"}));
        sub->add_option("--n-condition", synth.n_condition, "Condition users");
        sub->add_option("--n-control", synth.n_control, "Control users");
        sub->add_option("--dim", synth.dim, "Embedding dimension");
        sub->add_option("--condition-posts", synth.condition_posts.mean, "Mean posts per condition user");
        sub->add_option("--control-posts", synth.control_posts.mean, "Mean posts per control user");
        sub->add_option("--spread", post_spread, "Post-count spread in [0, 1] (0 = fixed count)");
        sub->add_option("--signal-strength", synth.signal_strength, "Similarity boost in [0, 1]");
        sub->add_option("--episode-fraction", synth.episode_fraction, "Share of posts in the episode");
        sub->add_option("--disorder", synth.disorder, "Disorder tag");
        sub->add_option("--split", synth_split, "Split tag")->check(CLI::IsMember({"train", "val", "test", "pool"}));
        sub->add_option("--out", synth_out, "Corpus output (JSONL)")->required();
        sub->add_option("--truth", synth_truth, "Ground-truth output (JSON)");
        action = nullptr;
        sub->final_callback([&] {
            action = [&] {
                synth.mode = parse_signal_mode(synth_mode);
                synth.split = parse_split(synth_split);
                synth.condition_posts.spread = synth.control_posts.spread = post_spread;
                if (related_seed) synth.related = RelatedDirection{*related_seed, related_cosine};
                const auto result = synth_generate(synth);
                write_corpus(synth_out, result.corpus);
                if (!synth_truth.empty()) write_ground_truth(synth_truth, result.truth);
                std::cout << "wrote " << result.corpus.users.size() << " users, " << result.corpus.post_count()
                          << " posts (dim " << result.corpus.dim << ", " << synth_mode << ") to " << synth_out << '\n';
            };
        });
    }

    // ---- anchor ------------------------------------------------------------
    std::string anchor_pool, anchor_out;
    {
        auto* sub = app.add_subcommand("anchor", "Compute the anchor embedding of a pool corpus");
        sub->add_option("--pool", anchor_pool, "Pool corpus (condition users are averaged)")->required();
        sub->add_option("--out", anchor_out, "Anchor output (JSON)")->required();
        sub->final_callback([&] {
            action = [&] {
                const auto anchor = compute_anchor(load_corpus(anchor_pool));
                write_anchor(anchor_out, anchor);
                std::cout << "anchor '" << anchor.disorder << "' from " << anchor.n_source_posts << " posts (dim "
                          << anchor.dim << ") written to " << anchor_out << '\n';
            };
        });
    }

    // ---- series ------------------------------------------------------------
    std::string series_corpus, series_anchor, series_mode = "anchor", series_channels, series_out, series_csv;
    {
        auto* sub = app.add_subcommand("series", "Turn a corpus into per-user series");
        sub->add_option("--corpus", series_corpus, "Input corpus")->required();
        sub->add_option("--anchor", series_anchor, "Anchor file (anchor mode)");
        sub->add_option("--mode", series_mode, "anchor: cosine to the anchor; direct: raw vectors; channels: channel file")
            ->check(CLI::IsMember({"anchor", "direct", "channels"}));
        sub->add_option("--channels", series_channels, "Channel file (channels mode)");
        sub->add_option("--out", series_out, "Series output (JSONL)")->required();
        sub->add_option("--csv", series_csv, "Also write plot data as CSV");
        sub->final_callback([&] {
            action = [&] {
                std::optional<AnchorEmbedding> anchor_opt;
                if (series_mode == "anchor") {
                    if (series_anchor.empty()) throw PreconditionError("series: --anchor is required in anchor mode");
                    anchor_opt = load_anchor(series_anchor);
                }
                const auto corpus = load_corpus(series_corpus);
                SeriesSet set;
                if (series_mode == "anchor") {
                    set = build_cross_series(corpus, *anchor_opt);
                } else if (series_mode == "direct") {
                    set = build_multichannel_set(corpus, MultichannelMode::direct);
                } else {
                    if (series_channels.empty()) throw PreconditionError("series: --channels is required in channels mode");
                    const auto table = load_channels(series_channels);
                    set = build_multichannel_set(corpus, MultichannelMode::channels, &table);
                }
                write_series(series_out, set);
                if (!series_csv.empty()) write_series_csv(series_csv, set);
                std::size_t degraded = 0;
                for (const auto& s : set.series) degraded += s.degraded ? 1 : 0;
                std::cout << "wrote " << set.series.size() << " series (C = " << set.channels << ") to " << series_out;
                if (degraded) std::cout << "; " << degraded << " flagged degraded (zero-norm vectors)";
                std::cout << '\n';
            };
        });
    }

    // ---- features ----------------------------------------------------------
    std::string feat_series, feat_out, feat_csv;
    {
        auto* sub = app.add_subcommand("features", "Extract the feature catalog from scalar series");
        sub->add_option("--series", feat_series, "Scalar series file")->required();
        sub->add_option("--out", feat_out, "Feature output (JSONL)")->required();
        sub->add_option("--csv", feat_csv, "Also write a CSV table");
        sub->final_callback([&] {
            action = [&] {
                const auto rows = extract_features(load_series(feat_series));
                write_features(feat_out, rows);
                if (!feat_csv.empty()) {
                    auto out = open_out(feat_csv);
                    out << "user_id,label";
                    for (const auto& id : feature_ids()) out << ',' << id;
                    out << '\n' << std::setprecision(17);
                    for (const auto& r : rows) {
                        out << r.user_id << ',' << to_string(r.label);
                        for (double v : r.values) out << ',' << v;
                        out << '\n';
                    }
                }
                std::cout << "wrote " << rows.size() << " feature vectors x " << kFeatureCount << " features to "
                          << feat_out << '\n';
            };
        });
    }

    // ---- select ------------------------------------------------------------
    std::string sel_features, sel_out;
    std::size_t sel_k = 30;
    std::uint64_t sel_seed = 0;
    bool sel_invariant = false;
    ForestConfig sel_forest;
    {
        auto* sub = app.add_subcommand("select", "Rank features by random-forest Gini importance");
        sub->add_option("--features", sel_features, "Feature file")->required();
        sub->add_option("--k", sel_k, "Number of features to select");
        add_seed(sub, sel_seed, "the forest");
        sub->add_option("--n-trees", sel_forest.n_trees, "Trees in the forest");
        sub->add_option("--max-depth", sel_forest.max_depth, "Maximum tree depth (0 = unlimited)");
        sub->add_option("--max-features", sel_forest.max_features, "Features tried per split (0 = sqrt)");
        sub->add_flag("--order-invariant", sel_invariant, "Rank only order-invariant features");
        sub->add_option("--out", sel_out, "Selection report (JSON)")->required();
        sub->final_callback([&] {
            action = [&] {
                const auto report = rank_by_gini(load_features(sel_features), sel_forest, sel_seed, sel_k,
                                                 sel_invariant ? order_invariant_feature_ids() : std::vector<std::string>{});
                if (sel_k > report.ranking.size()) select_top_k(report, sel_k);
                write_json_file(sel_out, to_json(report));
                std::cout << "top features:\n";
                for (std::size_t i = 0; i < std::min<std::size_t>(10, report.ranking.size()); ++i) {
                    std::cout << "  " << std::setw(2) << i + 1 << ". " << report.ranking[i].first << "  "
                              << fmt(report.ranking[i].second) << '\n';
                }
            };
        });
    }

    // ---- train -------------------------------------------------------------
    std::string tr_model, tr_series, tr_val, tr_out, tr_history;
    double tr_val_fraction = 0.2;
    std::optional<double> tr_lr;
    std::optional<std::size_t> tr_batch, tr_epochs;
    std::size_t tr_patience = 10, tr_lstm_hidden = 64, tr_seq_len = 512, tr_top_k = 30;
    std::vector<std::size_t> tr_hidden{64, 32};
    std::uint64_t tr_seed = 11;
    bool tr_invariant = false;
    {
        auto* sub = app.add_subcommand("train", "Train one classifier and move its threshold on validation data");
        sub->add_option("--model", tr_model, "Model family")
            ->required()
            ->check(CLI::IsMember({"feedforward", "cnn1d", "lstm"}));
        sub->add_option("--series", tr_series, "Training series")->required();
        sub->add_option("--val", tr_val, "Validation series (default: stratified split of --series)");
        sub->add_option("--val-fraction", tr_val_fraction, "Validation share when --val is absent");
        add_seed(sub, tr_seed, "initialization, shuffling, splitting and feature selection");
        sub->add_option("--lr", tr_lr, "Learning rate (default: per-model value)");
        sub->add_option("--batch-size", tr_batch, "Batch size (default: per-model value)");
        sub->add_option("--epochs", tr_epochs, "Epoch budget (default: per-model value)");
        sub->add_option("--patience", tr_patience, "Early-stopping patience in epochs");
        sub->add_option("--hidden", tr_hidden, "Feedforward hidden widths")->delimiter(',');
        sub->add_option("--lstm-hidden", tr_lstm_hidden, "LSTM hidden size");
        sub->add_option("--sequence-length", tr_seq_len, "cnn1d padded length");
        sub->add_option("--top-k", tr_top_k, "Features kept for feedforward");
        sub->add_flag("--order-invariant", tr_invariant, "Feedforward: select from order-invariant features only");
        sub->add_option("--out", tr_out, "Checkpoint output (JSON)")->required();
        sub->add_option("--history-csv", tr_history, "Write the loss curve as CSV");
        sub->final_callback([&] {
            action = [&] {
                const auto kind = nn::parse_model_kind(tr_model);
                TrainConfig cfg = TrainConfig::defaults_for(kind);
                if (tr_lr) cfg.lr = *tr_lr;
                if (tr_batch) cfg.batch_size = *tr_batch;
                if (tr_epochs) cfg.epochs = *tr_epochs;
                cfg.patience = tr_patience;
                cfg.seeds = {tr_seed};
                SeriesSet train_set = load_series(tr_series), val_set;
                if (tr_val.empty()) {
                    std::tie(train_set, val_set) = split_series(train_set, 1.0 - tr_val_fraction, tr_seed);
                } else {
                    val_set = load_series(tr_val);
                }
                ModelSpec spec;
                spec.kind = kind;
                spec.hidden = tr_hidden;
                spec.lstm_hidden = tr_lstm_hidden;
                spec.sequence_length = tr_seq_len;
                std::optional<FeaturePipeline> pipeline;
                std::vector<Sample> tr, va;
                if (kind == ModelKind::feedforward) {
                    PipelineOptions opt;
                    opt.top_k = tr_top_k;
                    if (tr_invariant) opt.feature_subset = order_invariant_feature_ids();
                    const auto train_f = extract_features(train_set);
                    pipeline = fit_feature_pipeline(train_f, opt, tr_seed);
                    tr = feature_samples(*pipeline, train_f);
                    va = feature_samples(*pipeline, extract_features(val_set));
                    spec.input_size = pipeline->selected.size();
                } else {
                    tr = to_samples(train_set);
                    va = to_samples(val_set);
                    spec.input_size = train_set.channels;
                }
                auto model = train(spec, tr, va, cfg, tr_seed);
                model.features = pipeline;
                const auto choice = move_threshold(predict(model, va), labels_of(va));
                model.threshold = choice.threshold;
                write_json_file(tr_out, to_json(model));
                if (!tr_history.empty()) {
                    auto out = open_out(tr_history);
                    out << "epoch,train_loss,val_loss\n" << std::setprecision(17);
                    for (const auto& e : model.history) out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
                }
                std::cout << tr_model << ": " << model.history.size() << " epochs, best epoch " << model.best_epoch
                          << " (val loss " << fmt(model.history[model.best_epoch - 1].val_loss) << "), threshold "
                          << fmt(choice.threshold) << ", validation F1 " << fmt(choice.f1) << "\ncheckpoint: " << tr_out
                          << '\n';
            };
        });
    }

    // ---- eval --------------------------------------------------------------
    std::string ev_ckpt, ev_series, ev_out, ev_csv;
    std::optional<double> ev_threshold;
    {
        auto* sub = app.add_subcommand("eval", "Evaluate a checkpoint on test series");
        sub->add_option("--checkpoint", ev_ckpt, "Checkpoint from train")->required();
        sub->add_option("--series", ev_series, "Test series")->required();
        sub->add_option("--threshold", ev_threshold, "Override the checkpoint's validation threshold");
        sub->add_option("--out", ev_out, "Report output (JSON)");
        sub->add_option("--csv", ev_csv, "Per-user probabilities as CSV");
        sub->final_callback([&] {
            action = [&] {
                const auto model = load_checkpoint(ev_ckpt);
                const auto set = load_series(ev_series);
                const auto samples = samples_for(model, set);
                const double threshold = ev_threshold ? *ev_threshold : model.threshold.value_or(0.5);
                const auto report = evaluate(model, samples, threshold);
                if (!ev_out.empty()) {
                    nlohmann::ordered_json j;
                    j["config"] = {{"checkpoint", ev_ckpt}, {"series", ev_series}, {"model", nn::to_json(model.spec)}};
                    j["threshold"] = threshold;
                    j["report"] = to_json(report);
                    write_json_file(ev_out, j);
                }
                if (!ev_csv.empty()) {
                    const auto probs = predict(model, samples);
                    auto out = open_out(ev_csv);
                    out << "user_id,label,probability,predicted\n" << std::setprecision(17);
                    for (std::size_t i = 0; i < probs.size(); ++i) {
                        out << set.series[i].user_id << ',' << to_string(set.series[i].label) << ',' << probs[i] << ','
                            << (probs[i] >= threshold ? "condition" : "control") << '\n';
                    }
                }
                print_report("evaluation at threshold " + fmt(threshold), report);
            };
        });
    }

    // ---- baseline ----------------------------------------------------------
    std::string bl_corpus, bl_val, bl_anchor, bl_out;
    std::optional<double> bl_threshold;
    VoteOptions bl_opt;
    {
        auto* sub = app.add_subcommand("baseline", "Chunk + majority-vote baseline");
        sub->add_option("--corpus", bl_corpus, "Test corpus")->required();
        sub->add_option("--val", bl_val, "Validation corpus used to tune the chunk threshold");
        sub->add_option("--anchor", bl_anchor, "Anchor used by the mean-cosine chunk scorer")->required();
        sub->add_option("--chunk-size", bl_opt.chunk_size, "Posts per chunk");
        sub->add_option("--threshold", bl_threshold, "Chunk-score threshold (default: tuned on --val)");
        sub->add_flag("--ties-to-condition", bl_opt.ties_to_condition, "Resolve vote ties as condition");
        sub->add_option("--out", bl_out, "Report output (JSON)");
        sub->final_callback([&] {
            action = [&] {
                const auto scorer = mean_cosine_scorer(load_anchor(bl_anchor));
                double threshold = 0.0;
                if (bl_threshold) {
                    threshold = *bl_threshold;
                } else {
                    if (bl_val.empty()) throw PreconditionError("baseline: give --threshold or a --val corpus to tune it");
                    threshold = tune_vote_threshold(load_corpus(bl_val), scorer, bl_opt).threshold;
                }
                auto report = majority_vote_baseline(load_corpus(bl_corpus), scorer, threshold, bl_opt);
                report.per_seed.front().threshold = threshold;
                if (!bl_out.empty()) {
                    nlohmann::ordered_json j;
                    j["config"] = {{"chunk_size", bl_opt.chunk_size},
                                   {"ties_to_condition", bl_opt.ties_to_condition},
                                   {"chunk_threshold", threshold}};
                    j["report"] = to_json(report);
                    write_json_file(bl_out, j);
                }
                print_report("majority vote (" + std::to_string(bl_opt.chunk_size) + " posts/chunk)", report);
            };
        });
    }

    // ---- permute / transfer / ablate ----------------------------------------
    std::string mf_path, mf_output;
    std::size_t jobs = 1;
    const auto add_runner = [&](const std::string& name, const std::string& help, ExperimentKind kind) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--manifest", mf_path, "Experiment manifest (JSON)")->required();
        sub->add_option("--output", mf_output, "Override the manifest's output directory");
        sub->add_option("--jobs", jobs, "Concurrent training jobs (results do not depend on it)")
            ->check(CLI::PositiveNumber);
        sub->final_callback([&, kind] {
            action = [&, kind] {
                ExperimentManifest m;
                read_manifest_checked(mf_path, kind, m);
                if (!mf_output.empty()) m.output = mf_output;
                const auto report = run_manifest(m, jobs);
                const auto& result = report.at("result");
                std::ofstream csv = open_out((std::filesystem::path(m.output) / "summary.csv").string());
                csv << "arm,mean_f1\n" << std::setprecision(17);
                if (kind == ExperimentKind::permutation) {
                    csv << "ordered," << result.at("ordered_f1").get<double>() << '\n';
                    for (std::size_t p = 0; p < result.at("permuted").size(); ++p) {
                        csv << "permutation_" << p << ','
                            << result.at("permuted")[p].at("mean").at("condition").at("f1").get<double>() << '\n';
                    }
                    std::cout << "ordered F1 " << fmt(result.at("ordered_f1").get<double>()) << ", mean permuted F1 "
                              << fmt(result.at("mean_permuted_f1").get<double>()) << ", gap "
                              << fmt(result.at("gap").get<double>()) << '\n';
                } else {
                    const double f1 = result.at("mean").at("condition").at("f1").get<double>();
                    csv << to_string(kind) << ',' << f1 << '\n';
                    std::cout << to_string(kind) << " mean F1 " << fmt(f1) << '\n';
                }
                std::cout << "report: " << (std::filesystem::path(m.output) / "report.json").string() << '\n';
            };
        });
    };
    add_runner("permute", "Ordered vs permuted-series comparison", ExperimentKind::permutation);
    add_runner("transfer", "Train on another disorder's data scored against this disorder's anchor",
               ExperimentKind::transfer);
    add_runner("ablate", "Anchor-free multichannel input (direct or channels)", ExperimentKind::ablation);

    // ---- flops -------------------------------------------------------------
    std::string fl_model, fl_out;
    std::vector<std::size_t> fl_spec;
    std::size_t fl_input = 1, fl_lstm_hidden = 64, fl_steps = 0, fl_seq_len = 512;
    nn::TransformerShape fl_tf{110'000'000, 12, 512, 768};
    {
        auto* sub = app.add_subcommand("flops", "FLOPs of one forward pass");
        sub->add_option("--model", fl_model, "Model family")
            ->required()
            ->check(CLI::IsMember({"feedforward", "cnn1d", "lstm", "transformer"}));
        sub->add_option("--spec", fl_spec, "Feedforward widths input,hidden...,2 (default 30,64,32,2)")
            ->delimiter(',');
        sub->add_option("--input", fl_input, "Input channels (cnn1d, lstm)");
        sub->add_option("--lstm-hidden", fl_lstm_hidden, "LSTM hidden size");
        sub->add_option("--steps", fl_steps, "Sequence length (lstm)");
        sub->add_option("--sequence-length", fl_seq_len, "cnn1d padded length");
        sub->add_option("--n-params", fl_tf.n_params, "Transformer parameter count N");
        sub->add_option("--n-layer", fl_tf.n_layer, "Transformer layers");
        sub->add_option("--n-context", fl_tf.n_context, "Transformer context length");
        sub->add_option("--d-model", fl_tf.d_model, "Transformer width");
        sub->add_option("--out", fl_out, "Estimate output (JSON)");
        sub->final_callback([&] {
            action = [&] {
                nn::FlopsEstimate est;
                if (fl_model == "transformer") {
                    est = nn::count_flops(fl_tf);
                } else if (fl_model == "feedforward") {
                    std::vector<std::size_t> widths = fl_spec.empty() ? std::vector<std::size_t>{30, 64, 32, 2} : fl_spec;
                    if (widths.size() < 2 || widths.back() != 2) {
                        throw PreconditionError("flops: --spec must list input,hidden...,2");
                    }
                    est = nn::count_flops(
                        ModelSpec::feedforward(widths.front(), std::vector<std::size_t>(widths.begin() + 1, widths.end() - 1)));
                } else if (fl_model == "cnn1d") {
                    est = nn::count_flops(ModelSpec::cnn1d(fl_input, fl_seq_len));
                } else {
                    est = nn::count_flops(ModelSpec::lstm(fl_input, fl_lstm_hidden), fl_steps);
                }
                if (!fl_out.empty()) write_json_file(fl_out, nn::to_json(est));
                for (const auto& [name, f] : est.breakdown) std::cout << "  " << std::left << std::setw(52) << name << f << '\n';
                std::cout << "total " << est.total << " FLOPs\n";
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    if (!action) return 0;
    try {
        action();
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const TrainingAborted& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed input: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
