#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gradsample/batch.hpp"
#include "gradsample/dataset.hpp"
#include "gradsample/error.hpp"
#include "gradsample/importance.hpp"
#include "gradsample/mlp.hpp"
#include "gradsample/numerics.hpp"
#include "gradsample/optimizer.hpp"
#include "gradsample/rng.hpp"

namespace gradsample {

struct TrainConfig {
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    std::vector<std::size_t> lr_decay_epochs;
    double lr_decay_divisor = 10.0;
    std::size_t epochs = 1;
    SamplingMode mode = SamplingMode::uniform;
    double alpha = 0.1;
    double epsilon_scale = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    double momentum = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    ImportanceKind importance_kind = ImportanceKind::loss_gradient_analytic;
    std::size_t eval_every = 1;  // epochs between held-out evaluations

    void check() const {
        require(batch_size >= 1, "TrainConfig: batch_size must be positive");
        require(learning_rate > 0.0, "TrainConfig: learning_rate must be positive");
        require(epochs >= 1, "TrainConfig: epochs must be positive");
        require(alpha >= 0.0 && alpha <= 1.0, "TrainConfig: alpha outside [0,1]");
        require(epsilon_scale >= 0.0, "TrainConfig: negative epsilon_scale");
        require(lr_decay_divisor > 0.0, "TrainConfig: lr_decay_divisor must be positive");
        require(eval_every >= 1, "TrainConfig: eval_every must be positive");
    }

    OptimizerConfig optimizer_config() const {
        OptimizerConfig oc;
        oc.kind = optimizer;
        oc.momentum = momentum;
        oc.beta1 = adam_beta1;
        oc.beta2 = adam_beta2;
        oc.eps = adam_eps;
        return oc;
    }
};

struct StepRecord {
    std::size_t epoch = 0;
    std::size_t step = 0;  // global, 1-based
    double train_loss = 0.0;
    double cum_seconds = 0.0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double test_loss = 0.0;
    double test_error = 0.0;
    double cum_seconds = 0.0;
};

struct RunHistory {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    bool aborted = false;
    std::string abort_reason;
    std::size_t degenerate_events = 0;
};

// (1 / (N * B)) * sum_i w_i * g_i
inline std::vector<double> estimate_gradient(const MiniBatch& batch,
                                             const std::vector<std::vector<double>>& grads,
                                             std::size_t dataset_size) {
    require(batch.indices.size() == grads.size(),
            "estimate_gradient: batch and gradient lists misaligned");
    require(!grads.empty(), "estimate_gradient: empty batch");
    const std::size_t dim = grads.front().size();
    std::vector<double> estimate(dim, 0.0);
    const double scale = 1.0 / (static_cast<double>(dataset_size) *
                                static_cast<double>(batch.indices.size()));
    for (std::size_t b = 0; b < grads.size(); ++b) {
        require(grads[b].size() == dim, "estimate_gradient: gradient length mismatch");
        const double wscale = batch.weights[b] * scale;
        for (std::size_t j = 0; j < dim; ++j) estimate[j] += wscale * grads[b][j];
    }
    return estimate;
}

namespace detail {

// Fills loss, importance, and the scaled output delta for each row.
// delta row b = output_layer_loss_gradient * weight_b * scale.
inline void finish_rows(const MlpModel& model, BatchWorkspace& ws,
                        const Dataset& ds, std::span<const std::size_t> indices,
                        std::span<const double> weights, double scale,
                        ImportanceKind kind, bool want_importance) {
    const std::size_t n_out = model.output_dim();
    std::vector<double> s(n_out);
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto z = batch_logits(model, ws, b);
        auto delta = batch_output_delta(model, ws, b);
        const Target& t = ds.targets[indices[b]];
        const double wscale = weights.empty() ? scale : weights[b] * scale;
        if (model.loss_kind == LossKind::softmax_cross_entropy) {
            double zmax = z[0];
            for (double v : z) zmax = std::max(zmax, v);
            double sum = 0.0;
            for (std::size_t j = 0; j < n_out; ++j) {
                s[j] = std::exp(z[j] - zmax);
                sum += s[j];
            }
            for (std::size_t j = 0; j < n_out; ++j) s[j] /= sum;
            ws.loss[b] = (zmax + std::log(sum)) - z[t.label];
            s[t.label] -= 1.0;
            for (std::size_t j = 0; j < n_out; ++j) delta[j] = s[j] * wscale;
            if (want_importance) {
                if (kind == ImportanceKind::loss_value)
                    ws.importance[b] = std::max(0.0, ws.loss[b]);
                else
                    ws.importance[b] = l2_norm(s);
            }
        } else {
            double loss = 0.0;
            double norm2 = 0.0;
            for (std::size_t j = 0; j < n_out; ++j) {
                const double d = z[j] - t.values[j];
                loss += d * d;
                delta[j] = 2.0 * d * wscale;
                norm2 += 4.0 * d * d;
            }
            ws.loss[b] = loss;
            if (want_importance)
                ws.importance[b] = kind == ImportanceKind::loss_value
                                       ? std::max(0.0, loss)
                                       : std::sqrt(norm2);
        }
    }
}

} // namespace detail

// Sequential first pass: plain mean-gradient steps over non-shuffled
// batches, importance written straight into q for every sample. Consumes
// no randomness, so runs differing only in mode share the resulting model.
inline void initialization_epoch(MlpModel& model, const Dataset& train,
                                 const TrainConfig& cfg, ImportanceMemory& memory,
                                 BatchWorkspace& ws, OptimizerState& opt,
                                 double learning_rate, RunHistory* history,
                                 std::size_t& global_step,
                                 const std::chrono::steady_clock::time_point& t0) {
    const std::size_t n = train.n;
    const std::size_t B = cfg.batch_size;
    std::vector<std::size_t> idx(std::min(B, n));
    const OptimizerConfig oc = cfg.optimizer_config();
    for (std::size_t start = 0; start < n; start += B) {
        const std::size_t count = std::min(B, n - start);
        for (std::size_t b = 0; b < count; ++b) idx[b] = start + b;
        gather_rows(train, {idx.data(), count}, ws);
        batch_forward(model, ws, count);
        detail::finish_rows(model, ws, train, {idx.data(), count}, {},
                            1.0 / static_cast<double>(count), cfg.importance_kind, true);
        double batch_loss = 0.0;
        for (std::size_t b = 0; b < count; ++b) batch_loss += ws.loss[b];
        batch_loss /= static_cast<double>(count);
        std::fill(ws.grad.begin(), ws.grad.end(), 0.0);
        batch_backward(model, ws, count);
        // Losses are nonnegative, so a finite mean implies every per-row
        // loss and importance is finite; q is only touched on clean batches.
        if (!all_finite(ws.grad) || !std::isfinite(batch_loss)) {
            if (history) {
                history->aborted = true;
                history->abort_reason = "non-finite loss or gradient during initialization";
            }
            return;
        }
        for (std::size_t b = 0; b < count; ++b)
            memory.assign(idx[b], ws.importance[b]);
        optimizer_step(model.theta, ws.grad, learning_rate, opt, oc);
        refresh_transposed(model, ws);
        ++global_step;
        if (history) {
            const double cum =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
            history->steps.push_back({1, global_step, batch_loss, cum});
        }
    }
}

// Standalone initialization pass for a fresh model and memory.
inline void initialization_epoch(MlpModel& model, const Dataset& train,
                                 const TrainConfig& cfg, ImportanceMemory& memory) {
    cfg.check();
    train.check();
    BatchWorkspace ws = make_workspace(model, std::min(cfg.batch_size, train.n));
    OptimizerState opt;
    opt.init(cfg.optimizer, model.param_count());
    std::size_t step = 0;
    initialization_epoch(model, train, cfg, memory, ws, opt, cfg.learning_rate, nullptr,
                         step, std::chrono::steady_clock::now());
}

struct TrainCallbacks {
    // Called after the floor at the end of each epoch (1-based).
    std::function<void(std::size_t epoch, const ImportanceMemory&)> on_epoch_end;
};

// Full run: initialization epoch, then (epochs - 1) epochs of floor(N/B)
// steps each. Uniform mode walks a fresh permutation per epoch and never
// consults q; the other modes draw with replacement proportional to q.
inline RunHistory train(MlpModel& model, const Dataset& train_ds, const Dataset& test_ds,
                        const TrainConfig& cfg,
                        const TrainCallbacks& callbacks = {}) {
    cfg.check();
    train_ds.check();
    require(train_ds.dim == model.input_dim(), "train: feature dimension mismatch");
    require(cfg.batch_size <= train_ds.n, "train: batch larger than dataset");

    const auto t0 = std::chrono::steady_clock::now();
    const auto now_seconds = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    RunHistory history;
    Rng rng(cfg.seed, 1);
    ImportanceMemory memory(train_ds.n, cfg.alpha, cfg.epsilon_scale);
    BatchWorkspace ws = make_workspace(model, std::max(cfg.batch_size, std::size_t{256}));
    OptimizerState opt;
    opt.init(cfg.optimizer, model.param_count());
    double lr = cfg.learning_rate;
    std::size_t global_step = 0;

    const std::size_t n = train_ds.n;
    const std::size_t B = cfg.batch_size;
    const std::size_t steps_per_epoch = n / B;
    const double n_f = static_cast<double>(n);
    const OptimizerConfig oc = cfg.optimizer_config();
    std::vector<std::size_t> permutation(n);
    for (std::size_t i = 0; i < n; ++i) permutation[i] = i;

    const auto run_eval = [&](std::size_t epoch) {
        if (test_ds.n == 0) return;
        if (epoch % cfg.eval_every != 0 && epoch != cfg.epochs && !history.aborted)
            return;
        const EvalResult r = evaluate(model, test_ds, ws);
        history.epochs.push_back({epoch, r.mean_loss, r.error, now_seconds()});
    };

    for (std::size_t epoch = 1; epoch <= cfg.epochs && !history.aborted; ++epoch) {
        if (std::find(cfg.lr_decay_epochs.begin(), cfg.lr_decay_epochs.end(), epoch) !=
            cfg.lr_decay_epochs.end())
            lr /= cfg.lr_decay_divisor;

        if (epoch == 1) {
            initialization_epoch(model, train_ds, cfg, memory, ws, opt, lr, &history,
                                 global_step, t0);
        } else {
            if (cfg.mode == SamplingMode::uniform) rng.shuffle(permutation);
            for (std::size_t s = 0; s < steps_per_epoch && !history.aborted; ++s) {
                MiniBatch batch;
                if (cfg.mode == SamplingMode::uniform) {
                    batch.indices.assign(permutation.begin() + s * B,
                                         permutation.begin() + (s + 1) * B);
                    batch.probs.assign(B, 1.0 / n_f);
                    batch.weights.assign(B, n_f);
                } else {
                    batch = memory.sample_batch(B, rng, cfg.mode);
                }
                gather_rows(train_ds, batch.indices, ws);
                batch_forward(model, ws, B);
                const double scale = 1.0 / (n_f * static_cast<double>(B));
                const bool want_importance = cfg.mode != SamplingMode::uniform;
                detail::finish_rows(model, ws, train_ds, batch.indices, batch.weights,
                                    scale, cfg.importance_kind, want_importance);
                double batch_loss = 0.0;
                for (std::size_t b = 0; b < B; ++b) batch_loss += ws.loss[b];
                batch_loss /= static_cast<double>(B);
                std::fill(ws.grad.begin(), ws.grad.end(), 0.0);
                batch_backward(model, ws, B);
                if (!std::isfinite(batch_loss) || !all_finite(ws.grad)) {
                    history.aborted = true;
                    history.abort_reason =
                        "non-finite loss or gradient at step " +
                        std::to_string(global_step + 1);
                    break;
                }
                optimizer_step(model.theta, ws.grad, lr, opt, oc);
                refresh_transposed(model, ws);
                if (want_importance)
                    for (std::size_t b = 0; b < B; ++b)
                        memory.ema_update(batch.indices[b], ws.importance[b]);
                ++global_step;
                history.steps.push_back({epoch, global_step, batch_loss, now_seconds()});
            }
        }
        if (cfg.mode != SamplingMode::uniform && !history.aborted) memory.epoch_floor();
        run_eval(epoch);
        if (callbacks.on_epoch_end) callbacks.on_epoch_end(epoch, memory);
    }
    history.degenerate_events = memory.degenerate_events();
    return history;
}

} // namespace gradsample
