#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <span>
#include <vector>

#include "gradsample/dataset.hpp"
#include "gradsample/error.hpp"
#include "gradsample/matrix.hpp"
#include "gradsample/mlp.hpp"

namespace gradsample {

// Scratch for matrix-batched passes. Per-sample quantities (loss, logits,
// importance, deltas) stay exposed row by row; the batching only changes
// evaluation order within a layer, never the math.
struct BatchWorkspace {
    std::size_t capacity = 0;
    std::vector<std::vector<double>> wt;     // transposed weights, n_in x n_out
    std::vector<std::vector<double>> a;      // a[0] input gather, a[l+1] hidden act
    std::vector<std::vector<double>> z;      // pre-activations per layer
    std::vector<std::vector<double>> dphi;   // sine derivative cache per hidden layer
    std::vector<std::vector<double>> delta;  // backward deltas per layer
    std::vector<double> loss;                // per sample
    std::vector<double> importance;          // per sample
    std::vector<double> grad;                // parameter gradient accumulator
};

inline void refresh_transposed(const MlpModel& model, BatchWorkspace& ws) {
    const std::size_t layers = model.layer_count();
    ws.wt.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t n_out = model.dims[l + 1];
        const std::size_t n_in = model.dims[l];
        auto& t = ws.wt[l];
        t.resize(n_in * n_out);
        const double* w = model.theta.data() + model.weight_offset(l);
        for (std::size_t r = 0; r < n_out; ++r)
            for (std::size_t c = 0; c < n_in; ++c) t[c * n_out + r] = w[r * n_in + c];
    }
}

inline BatchWorkspace make_workspace(const MlpModel& model, std::size_t capacity) {
    require(capacity >= 1, "make_workspace: capacity must be positive");
    BatchWorkspace ws;
    ws.capacity = capacity;
    const std::size_t layers = model.layer_count();
    ws.a.resize(layers);
    ws.z.resize(layers);
    ws.dphi.resize(layers > 0 ? layers - 1 : 0);
    ws.delta.resize(layers);
    ws.a[0].resize(capacity * model.dims[0]);
    for (std::size_t l = 0; l < layers; ++l) {
        ws.z[l].resize(capacity * model.dims[l + 1]);
        ws.delta[l].resize(capacity * model.dims[l + 1]);
        if (l + 1 < layers) {
            ws.a[l + 1].resize(capacity * model.dims[l + 1]);
            if (model.hidden_activations[l] == Activation::sine)
                ws.dphi[l].resize(capacity * model.dims[l + 1]);
        }
    }
    ws.loss.resize(capacity);
    ws.importance.resize(capacity);
    ws.grad.resize(model.param_count());
    refresh_transposed(model, ws);
    return ws;
}

inline void gather_rows(const Dataset& ds, std::span<const std::size_t> indices,
                        BatchWorkspace& ws) {
    require(indices.size() <= ws.capacity, "gather_rows: batch exceeds capacity");
    for (std::size_t b = 0; b < indices.size(); ++b)
        std::memcpy(ws.a[0].data() + b * ds.dim, ds.features.data() + indices[b] * ds.dim,
                    ds.dim * sizeof(double));
}

// Forward for the first `count` gathered rows. Fills z per layer, hidden
// activations, and the sine derivative cache.
inline void batch_forward(const MlpModel& model, BatchWorkspace& ws, std::size_t count) {
    require(count >= 1 && count <= ws.capacity, "batch_forward: bad row count");
    const std::size_t layers = model.layer_count();
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t n_out = model.dims[l + 1];
        const std::size_t n_in = model.dims[l];
        const double* bias = model.theta.data() + model.bias_offset(l);
        double* z = ws.z[l].data();
        for (std::size_t b = 0; b < count; ++b)
            std::memcpy(z + b * n_out, bias, n_out * sizeof(double));
        gemm_nn_accum(ws.a[l].data(), ws.wt[l].data(), z, count, n_out, n_in);
        if (l + 1 == layers) break;
        const Activation kind = model.hidden_activations[l];
        double* h = ws.a[l + 1].data();
        if (kind == Activation::relu) {
            for (std::size_t i = 0; i < count * n_out; ++i)
                h[i] = z[i] > 0.0 ? z[i] : 0.0;
        } else {
            const double w0 = model.omega0;
            double* dp = ws.dphi[l].data();
            for (std::size_t i = 0; i < count * n_out; ++i) {
                const double arg = w0 * z[i];
                h[i] = std::sin(arg);
                dp[i] = w0 * std::cos(arg);
            }
        }
    }
}

inline std::span<const double> batch_logits(const MlpModel& model,
                                            const BatchWorkspace& ws, std::size_t row) {
    const std::size_t n_out = model.output_dim();
    return {ws.z.back().data() + row * n_out, n_out};
}

inline std::span<double> batch_output_delta(const MlpModel& model, BatchWorkspace& ws,
                                            std::size_t row) {
    const std::size_t n_out = model.output_dim();
    return {ws.delta.back().data() + row * n_out, n_out};
}

// Backward from the already filled output deltas; adds into ws.grad.
inline void batch_backward(const MlpModel& model, BatchWorkspace& ws, std::size_t count) {
    const std::size_t layers = model.layer_count();
    for (std::size_t li = layers; li-- > 0;) {
        const std::size_t n_out = model.dims[li + 1];
        const std::size_t n_in = model.dims[li];
        double* gw = ws.grad.data() + model.weight_offset(li);
        double* gb = ws.grad.data() + model.bias_offset(li);
        const double* delta = ws.delta[li].data();
        gemm_tn_accum(delta, ws.a[li].data(), gw, count, n_in, n_out);
        for (std::size_t b = 0; b < count; ++b) {
            const double* dr = delta + b * n_out;
            for (std::size_t r = 0; r < n_out; ++r) gb[r] += dr[r];
        }
        if (li == 0) break;
        double* prev = ws.delta[li - 1].data();
        std::memset(prev, 0, count * n_in * sizeof(double));
        gemm_nn_accum(delta, model.theta.data() + model.weight_offset(li), prev, count,
                      n_in, n_out);
        if (model.hidden_activations[li - 1] == Activation::relu) {
            const double* zp = ws.z[li - 1].data();
            for (std::size_t i = 0; i < count * n_in; ++i)
                if (!(zp[i] > 0.0)) prev[i] = 0.0;
        } else {
            const double* dp = ws.dphi[li - 1].data();
            for (std::size_t i = 0; i < count * n_in; ++i) prev[i] *= dp[i];
        }
    }
}

struct EvalResult {
    double mean_loss = 0.0;
    double error = 0.0;  // misclassification rate, or mean_loss / output_dim
};

// Deterministic full pass in fixed-size chunks. Classification error uses
// argmax with lowest index winning ties.
inline EvalResult evaluate(const MlpModel& model, const Dataset& ds, BatchWorkspace& ws) {
    require(ds.dim == model.input_dim(), "evaluate: feature dimension mismatch");
    const std::size_t chunk = ws.capacity;
    const std::size_t n_out = model.output_dim();
    double loss_sum = 0.0;
    std::size_t wrong = 0;
    std::vector<std::size_t> idx(chunk);
    for (std::size_t start = 0; start < ds.n; start += chunk) {
        const std::size_t count = std::min(chunk, ds.n - start);
        for (std::size_t b = 0; b < count; ++b) idx[b] = start + b;
        gather_rows(ds, {idx.data(), count}, ws);
        batch_forward(model, ws, count);
        for (std::size_t b = 0; b < count; ++b) {
            const auto z = batch_logits(model, ws, b);
            const Target& t = ds.targets[start + b];
            loss_sum += loss_value(model, z, t);
            if (t.is_class) {
                std::size_t best = 0;
                for (std::size_t j = 1; j < n_out; ++j)
                    if (z[j] > z[best]) best = j;
                if (best != t.label) ++wrong;
            }
        }
    }
    EvalResult r;
    r.mean_loss = loss_sum / static_cast<double>(ds.n);
    if (ds.is_classification())
        r.error = static_cast<double>(wrong) / static_cast<double>(ds.n);
    else
        r.error = r.mean_loss / static_cast<double>(n_out);
    return r;
}

inline EvalResult evaluate(const MlpModel& model, const Dataset& ds,
                           std::size_t chunk = 256) {
    BatchWorkspace ws = make_workspace(model, std::min(chunk, ds.n));
    return evaluate(model, ds, ws);
}

} // namespace gradsample
