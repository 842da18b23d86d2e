#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gradsample/blobs.hpp"
#include "gradsample/checkpoint.hpp"
#include "gradsample/config.hpp"
#include "gradsample/csv.hpp"
#include "gradsample/dataset.hpp"
#include "gradsample/error.hpp"
#include "gradsample/glyphs.hpp"
#include "gradsample/idx.hpp"
#include "gradsample/importance.hpp"
#include "gradsample/mlp.hpp"
#include "gradsample/ppm.hpp"
#include "gradsample/stats.hpp"
#include "gradsample/trainer.hpp"

namespace gradsample {

struct MethodSpec {
    std::string name;
    SamplingMode mode = SamplingMode::uniform;
    ImportanceKind kind = ImportanceKind::loss_gradient_analytic;
};

inline MethodSpec method_from_name(const std::string& name) {
    if (name == "uniform")
        return {name, SamplingMode::uniform, ImportanceKind::loss_gradient_analytic};
    if (name == "is")
        return {name, SamplingMode::importance_sampling,
                ImportanceKind::loss_gradient_analytic};
    if (name == "as")
        return {name, SamplingMode::adaptive_sampling,
                ImportanceKind::loss_gradient_analytic};
    if (name == "loss_value_is")
        return {name, SamplingMode::importance_sampling, ImportanceKind::loss_value};
    throw ParseError("unknown method: " + name +
                     " (expected uniform, is, as, or loss_value_is)");
}

inline TrainConfig train_config_from(const KeyValueConfig& cfg) {
    TrainConfig tc;
    tc.batch_size = cfg.get_u64("train.batch_size", 64);
    tc.learning_rate = cfg.get_double("train.learning_rate", 1e-3);
    for (std::uint64_t e : cfg.get_u64_list("train.lr_decay_epochs"))
        tc.lr_decay_epochs.push_back(e);
    tc.lr_decay_divisor = cfg.get_double("train.lr_decay_divisor", 10.0);
    tc.epochs = cfg.get_u64("train.epochs", 1);
    tc.alpha = cfg.get_double("train.alpha", 0.1);
    tc.epsilon_scale = cfg.get_double("train.epsilon_scale", 1e-3);
    const std::string opt = cfg.get_string("train.optimizer", "adam");
    if (opt == "sgd")
        tc.optimizer = OptimizerKind::sgd;
    else if (opt == "sgd_momentum")
        tc.optimizer = OptimizerKind::sgd_momentum;
    else if (opt == "adam")
        tc.optimizer = OptimizerKind::adam;
    else
        throw ParseError("config: unknown optimizer " + opt);
    tc.momentum = cfg.get_double("train.momentum", 0.9);
    tc.adam_beta1 = cfg.get_double("train.adam_beta1", 0.9);
    tc.adam_beta2 = cfg.get_double("train.adam_beta2", 0.999);
    tc.adam_eps = cfg.get_double("train.adam_eps", 1e-8);
    tc.seed = cfg.get_u64("train.seed", 1);
    const std::string imp = cfg.get_string("train.importance", "loss_gradient");
    if (imp == "loss_gradient")
        tc.importance_kind = ImportanceKind::loss_gradient_analytic;
    else if (imp == "loss_gradient_numeric")
        tc.importance_kind = ImportanceKind::loss_gradient_numeric;
    else if (imp == "loss_value")
        tc.importance_kind = ImportanceKind::loss_value;
    else
        throw ParseError("config: unknown importance kind " + imp);
    const std::string mode = cfg.get_string("train.mode", "uniform");
    if (mode == "loss_value_is") {
        tc.mode = SamplingMode::importance_sampling;
        tc.importance_kind = ImportanceKind::loss_value;
    } else {
        tc.mode = method_from_name(mode).mode;
    }
    tc.eval_every = cfg.get_u64("train.eval_every", 1);
    return tc;
}

inline MlpModel model_from(const KeyValueConfig& cfg) {
    std::vector<std::size_t> dims;
    for (std::uint64_t d : cfg.get_u64_list("model.layer_dims")) dims.push_back(d);
    require(dims.size() >= 2, "config: model.layer_dims needs at least two entries");
    const std::string act = cfg.get_string("model.activation", "relu");
    Activation a;
    if (act == "relu")
        a = Activation::relu;
    else if (act == "sine")
        a = Activation::sine;
    else
        throw ParseError("config: unknown activation " + act);
    const std::string loss = cfg.get_string("model.loss", "cross_entropy");
    LossKind lk;
    if (loss == "cross_entropy")
        lk = LossKind::softmax_cross_entropy;
    else if (loss == "squared_error")
        lk = LossKind::squared_error;
    else
        throw ParseError("config: unknown loss " + loss);
    return make_mlp(std::move(dims), a, lk, cfg.get_double("model.omega0", 30.0));
}

struct DatasetPair {
    Dataset train;
    Dataset test;
};

inline DatasetPair load_datasets(const KeyValueConfig& cfg) {
    const std::string name = cfg.get_string("dataset.name");
    DatasetPair out;
    if (name == "mnist") {
        out.train = load_mnist_idx(cfg.get_string("dataset.train_images"),
                                   cfg.get_string("dataset.train_labels"));
        out.test = load_mnist_idx(cfg.get_string("dataset.test_images"),
                                  cfg.get_string("dataset.test_labels"));
        out.test.split = "test";
    } else if (name == "glyphs") {
        const std::uint64_t gseed = cfg.get_u64("dataset.glyph_seed", 9000);
        const auto train_raw =
            make_glyphs(cfg.get_u64("dataset.per_class_train", 6000), gseed);
        const auto test_raw =
            make_glyphs(cfg.get_u64("dataset.per_class_test", 1000), gseed + 1);
        out.train = glyphs_to_dataset(train_raw, "train");
        out.test = glyphs_to_dataset(test_raw, "test");
    } else if (name == "blobs") {
        BlobSpec spec;
        spec.class_count = cfg.get_u64("dataset.blob_classes", 3);
        spec.points_per_class = cfg.get_u64("dataset.blob_per_class", 267);
        spec.sigma = cfg.get_double("dataset.blob_sigma", 0.8);
        spec.seed = cfg.get_u64("dataset.blob_seed", 5);
        spec.means = ring_means(spec.class_count, cfg.get_double("dataset.blob_radius", 2.0));
        out.train = make_blobs(spec);
        BlobSpec test_spec = spec;
        test_spec.seed = spec.seed + 1;
        test_spec.points_per_class = cfg.get_u64("dataset.blob_test_per_class",
                                                 spec.points_per_class);
        out.test = make_blobs(test_spec);
        out.test.split = "test";
    } else if (name == "image") {
        out.train = image_regression_dataset(cfg.get_string("dataset.image"));
        out.test = out.train;
        out.test.split = "test";
    } else {
        throw ParseError("config: unknown dataset " + name);
    }
    if (cfg.has("dataset.subset")) {
        const std::uint64_t n = cfg.get_u64("dataset.subset", 0);
        const std::uint64_t sseed = cfg.get_u64("dataset.subset_seed", 17);
        out.train = subset(out.train, n, sseed);
    }
    return out;
}

namespace detail {

inline void write_history_csv(const std::string& dir, const std::string& tag,
                              const KeyValueConfig& echo, const RunHistory& history) {
    CsvWriter steps(dir + "/" + tag + "_steps.csv", echo,
                    "epoch,step,train_loss,cum_seconds");
    for (const auto& s : history.steps) {
        std::ostringstream row;
        row << s.epoch << "," << s.step << "," << format_f64(s.train_loss) << ","
            << format_f64(s.cum_seconds);
        steps.row(row.str());
    }
    steps.close();
    CsvWriter epochs(dir + "/" + tag + "_epochs.csv", echo,
                     "epoch,test_loss,test_error,cum_seconds");
    for (const auto& e : history.epochs) {
        std::ostringstream row;
        row << e.epoch << "," << format_f64(e.test_loss) << ","
            << format_f64(e.test_error) << "," << format_f64(e.cum_seconds);
        epochs.row(row.str());
    }
    epochs.close();
}

inline double time_to_threshold(const RunHistory& history, double threshold) {
    if (!std::isfinite(threshold)) return std::numeric_limits<double>::quiet_NaN();
    for (const auto& e : history.epochs)
        if (e.test_error <= threshold) return e.cum_seconds;
    return std::numeric_limits<double>::infinity();
}

} // namespace detail

struct RunOutcome {
    std::string method;
    std::uint64_t seed = 0;
    RunHistory history;
    double final_test_loss = std::numeric_limits<double>::quiet_NaN();
    double final_test_error = std::numeric_limits<double>::quiet_NaN();
};

// One (method, seed) run with a fresh model. Model init draws sit on their
// own stream, so methods sharing a seed start from identical parameters.
inline RunOutcome run_single(const KeyValueConfig& cfg, const MethodSpec& method,
                             std::uint64_t seed, const DatasetPair& data,
                             const std::string& out_dir, bool write_csvs) {
    TrainConfig tc = train_config_from(cfg);
    tc.mode = method.mode;
    tc.importance_kind = method.kind;
    tc.seed = seed;
    MlpModel model = model_from(cfg);
    Rng init_rng(seed, 0);
    init_params(model, init_rng);
    RunOutcome outcome;
    outcome.method = method.name;
    outcome.seed = seed;
    outcome.history = train(model, data.train, data.test, tc);
    if (!outcome.history.epochs.empty()) {
        outcome.final_test_loss = outcome.history.epochs.back().test_loss;
        outcome.final_test_error = outcome.history.epochs.back().test_error;
    }
    if (write_csvs) {
        KeyValueConfig echo = cfg;
        echo.set("run.method", method.name);
        echo.set("run.seed", std::to_string(seed));
        detail::write_history_csv(out_dir, method.name + "_seed" + std::to_string(seed),
                                  echo, outcome.history);
    }
    return outcome;
}

// One run per (method, seed); per-run histories plus per-run and per-method
// summaries. Aborted runs are recorded and excluded from the means.
inline std::vector<RunOutcome> run_compare(const KeyValueConfig& cfg,
                                           const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto method_names = cfg.get_list("experiment.methods");
    require(!method_names.empty(), "config: experiment.methods is empty");
    auto seeds = cfg.get_u64_list("experiment.seeds");
    if (seeds.empty()) seeds.push_back(cfg.get_u64("train.seed", 1));
    const double threshold = cfg.get_double(
        "experiment.error_threshold", std::numeric_limits<double>::quiet_NaN());
    const DatasetPair data = load_datasets(cfg);

    std::vector<RunOutcome> outcomes;
    CsvWriter summary(out_dir + "/summary.csv", cfg,
                      "method,seed,final_test_loss,final_test_error,time_to_threshold,"
                      "aborted");
    for (const auto& mname : method_names) {
        const MethodSpec method = method_from_name(mname);
        for (std::uint64_t seed : seeds) {
            RunOutcome oc = run_single(cfg, method, seed, data, out_dir, true);
            std::ostringstream row;
            row << oc.method << "," << oc.seed << "," << format_f64(oc.final_test_loss)
                << "," << format_f64(oc.final_test_error) << ","
                << format_f64(detail::time_to_threshold(oc.history, threshold)) << ","
                << (oc.history.aborted ? "true" : "false");
            summary.row(row.str());
            if (oc.history.aborted)
                std::cerr << "run " << oc.method << " seed " << oc.seed
                          << " aborted: " << oc.history.abort_reason << "\n";
            outcomes.push_back(std::move(oc));
        }
    }
    summary.close();

    CsvWriter agg(out_dir + "/summary_methods.csv", cfg,
                  "method,runs,mean_final_test_loss,mean_final_test_error,"
                  "mean_time_to_threshold");
    for (const auto& mname : method_names) {
        std::vector<double> losses, errors, ttts;
        for (const auto& oc : outcomes) {
            if (oc.method != mname || oc.history.aborted) continue;
            losses.push_back(oc.final_test_loss);
            errors.push_back(oc.final_test_error);
            ttts.push_back(detail::time_to_threshold(oc.history, threshold));
        }
        std::ostringstream row;
        row << mname << "," << losses.size() << ","
            << format_f64(losses.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : mean(losses))
            << ","
            << format_f64(errors.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : mean(errors))
            << ","
            << format_f64(ttts.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : mean(ttts));
        agg.row(row.str());
    }
    agg.close();
    return outcomes;
}

struct CorrelationRow {
    std::uint64_t seed = 0;
    std::string kind;
    Correlation pearson;
    Correlation spearman;
    std::size_t samples = 0;
};

// Trains briefly, then compares each importance kind against the true
// per-sample parameter-gradient norm on a sampled set of points.
inline std::vector<CorrelationRow> run_correlate(const KeyValueConfig& cfg,
                                                 const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const DatasetPair data = load_datasets(cfg);
    require(data.train.is_classification(),
            "correlate: needs a classification dataset");
    auto seeds = cfg.get_u64_list("experiment.seeds");
    if (seeds.empty()) seeds.push_back(cfg.get_u64("train.seed", 1));
    std::size_t samples = cfg.get_u64("correlate.samples", 512);
    if (samples > data.train.n) {
        std::cerr << "correlate: clamping samples from " << samples << " to "
                  << data.train.n << "\n";
        samples = data.train.n;
    }

    std::vector<CorrelationRow> rows;
    CsvWriter out(out_dir + "/correlation.csv", cfg,
                  "seed,kind,pearson,pearson_degenerate,spearman,spearman_degenerate,"
                  "samples");
    for (std::uint64_t seed : seeds) {
        TrainConfig tc = train_config_from(cfg);
        tc.epochs = cfg.get_u64("correlate.epochs", 1);
        tc.seed = seed;
        MlpModel model = model_from(cfg);
        Rng init_rng(seed, 0);
        init_params(model, init_rng);
        Dataset empty_test;
        train(model, data.train, empty_test, tc);

        Rng pick_rng(seed, 2);
        std::vector<std::size_t> order(data.train.n);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        pick_rng.shuffle(order);
        order.resize(samples);

        std::vector<double> true_norm(samples);
        std::map<std::string, std::vector<double>> imp;
        imp["loss_gradient"].resize(samples);
        imp["loss_gradient_numeric"].resize(samples);
        imp["loss_value"].resize(samples);
        std::vector<double> scratch;
        for (std::size_t k = 0; k < samples; ++k) {
            const std::size_t i = order[k];
            const auto x = data.train.feature(i);
            const Target& t = data.train.targets[i];
            true_norm[k] = per_sample_gradient_norm(model, x, t, scratch);
            const ForwardTrace trace = forward(model, x);
            imp["loss_gradient"][k] =
                compute_importance(ImportanceKind::loss_gradient_analytic, model,
                                   trace.output(), t);
            imp["loss_gradient_numeric"][k] =
                compute_importance(ImportanceKind::loss_gradient_numeric, model,
                                   trace.output(), t);
            imp["loss_value"][k] = compute_importance(ImportanceKind::loss_value, model,
                                                      trace.output(), t);
        }
        for (const auto& [kind, values] : imp) {
            CorrelationRow row;
            row.seed = seed;
            row.kind = kind;
            row.pearson = pearson(values, true_norm);
            row.spearman = spearman(values, true_norm);
            row.samples = samples;
            std::ostringstream line;
            line << seed << "," << kind << "," << format_f64(row.pearson.value) << ","
                 << (row.pearson.degenerate ? "true" : "false") << ","
                 << format_f64(row.spearman.value) << ","
                 << (row.spearman.degenerate ? "true" : "false") << "," << samples;
            out.row(line.str());
            rows.push_back(std::move(row));
        }
    }
    out.close();
    return rows;
}

struct OverheadRow {
    std::string method;
    double median_step_seconds = 0.0;
    double ratio_vs_uniform = 1.0;
    std::size_t measured_steps = 0;
};

// Median steady-state step time per method, measured on the second epoch
// (the first is the sequential initialization pass).
inline std::vector<OverheadRow> run_overhead(const KeyValueConfig& cfg,
                                             const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const DatasetPair data = load_datasets(cfg);
    auto method_names = cfg.get_list("experiment.methods");
    if (method_names.empty()) method_names = {"uniform", "is", "as"};
    const std::size_t want = cfg.get_u64("overhead.steps", 500);
    const std::size_t warmup = cfg.get_u64("overhead.warmup", 50);
    const std::uint64_t seed = cfg.get_u64("train.seed", 1);

    std::vector<OverheadRow> rows;
    double uniform_median = 0.0;
    for (const auto& mname : method_names) {
        const MethodSpec method = method_from_name(mname);
        TrainConfig tc = train_config_from(cfg);
        tc.mode = method.mode;
        tc.importance_kind = method.kind;
        tc.seed = seed;
        tc.epochs = 2;
        tc.eval_every = std::numeric_limits<std::size_t>::max();
        MlpModel model = model_from(cfg);
        Rng init_rng(seed, 0);
        init_params(model, init_rng);
        Dataset empty_test;
        const RunHistory history = train(model, data.train, empty_test, tc);

        std::vector<double> durations;
        double prev = -1.0;
        for (const auto& s : history.steps) {
            if (s.epoch != 2) continue;
            if (prev >= 0.0) durations.push_back(s.cum_seconds - prev);
            prev = s.cum_seconds;
        }
        require(durations.size() > warmup,
                "overhead: epoch too short for the requested warmup");
        std::vector<double> window(
            durations.begin() + static_cast<std::ptrdiff_t>(warmup),
            durations.begin() +
                static_cast<std::ptrdiff_t>(std::min(durations.size(), warmup + want)));
        OverheadRow row;
        row.method = mname;
        row.median_step_seconds = median(window);
        row.measured_steps = window.size();
        if (mname == "uniform") uniform_median = row.median_step_seconds;
        row.ratio_vs_uniform =
            uniform_median > 0.0 ? row.median_step_seconds / uniform_median : 1.0;
        rows.push_back(row);
    }
    CsvWriter out(out_dir + "/overhead.csv", cfg,
                  "method,median_step_seconds,ratio_vs_uniform,measured_steps");
    for (const auto& r : rows) {
        std::ostringstream line;
        line << r.method << "," << format_f64(r.median_step_seconds) << ","
             << format_f64(r.ratio_vs_uniform) << "," << r.measured_steps;
        out.row(line.str());
    }
    out.close();
    return rows;
}

// Per-epoch (index, x, y, q) snapshots for 2D datasets.
inline void run_snapshots(const KeyValueConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const DatasetPair data = load_datasets(cfg);
    require(data.train.dim == 2, "snapshots: needs a 2D feature dataset");
    TrainConfig tc = train_config_from(cfg);
    auto seeds = cfg.get_u64_list("experiment.seeds");
    if (seeds.empty()) seeds.push_back(tc.seed);

    std::vector<std::uint64_t> at = cfg.get_u64_list("snapshots.epochs");
    if (at.empty()) {
        at = {1, 10, 100};
    }
    std::vector<std::size_t> epochs_at;
    for (std::uint64_t e : at)
        epochs_at.push_back(std::min<std::size_t>(e, tc.epochs));

    for (std::uint64_t seed : seeds) {
        TrainConfig run_tc = tc;
        run_tc.seed = seed;
        MlpModel model = model_from(cfg);
        Rng init_rng(seed, 0);
        init_params(model, init_rng);
        TrainCallbacks callbacks;
        callbacks.on_epoch_end = [&](std::size_t epoch, const ImportanceMemory& memory) {
            if (std::find(epochs_at.begin(), epochs_at.end(), epoch) == epochs_at.end())
                return;
            CsvWriter snap(out_dir + "/snapshot_seed" + std::to_string(seed) + "_epoch" +
                               std::to_string(epoch) + ".csv",
                           cfg, "index,x,y,q");
            for (std::size_t i = 0; i < data.train.n; ++i) {
                const auto f = data.train.feature(i);
                std::ostringstream line;
                line << i << "," << format_f64(f[0]) << "," << format_f64(f[1]) << ","
                     << format_f64(memory.q_at(i));
                snap.row(line.str());
            }
            snap.close();
        };
        train(model, data.train, data.test, run_tc, callbacks);
    }
}

// Single training run: histories plus a final checkpoint.
inline RunHistory run_train(const KeyValueConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const DatasetPair data = load_datasets(cfg);
    TrainConfig tc = train_config_from(cfg);
    MlpModel model = model_from(cfg);
    Rng init_rng(tc.seed, 0);
    init_params(model, init_rng);
    RunHistory history = train(model, data.train, data.test, tc);
    detail::write_history_csv(out_dir, "train", cfg, history);
    save_checkpoint(model, out_dir + "/model.ckpt");
    if (history.aborted)
        std::cerr << "train aborted: " << history.abort_reason << "\n";
    return history;
}

} // namespace gradsample
