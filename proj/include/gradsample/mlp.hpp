#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gradsample/error.hpp"
#include "gradsample/matrix.hpp"
#include "gradsample/numerics.hpp"
#include "gradsample/rng.hpp"
#include "gradsample/target.hpp"

namespace gradsample {

enum class Activation { relu, sine };
enum class LossKind { softmax_cross_entropy, squared_error };

// Fully connected network with a linear output layer.
// theta layout: per layer l, W_l row-major (dims[l+1] x dims[l]) then b_l.
// Sine layers compute sin(omega0 * pre_activation).
struct MlpModel {
    std::vector<std::size_t> dims;
    std::vector<Activation> hidden_activations;
    double omega0 = 30.0;
    LossKind loss_kind = LossKind::softmax_cross_entropy;
    std::vector<double> theta;

    std::size_t layer_count() const { return dims.size() - 1; }
    std::size_t input_dim() const { return dims.front(); }
    std::size_t output_dim() const { return dims.back(); }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l)
            n += dims[l + 1] * (dims[l] + 1);
        return n;
    }

    std::size_t weight_offset(std::size_t layer) const {
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer; ++l)
            off += dims[l + 1] * (dims[l] + 1);
        return off;
    }

    std::size_t bias_offset(std::size_t layer) const {
        return weight_offset(layer) + dims[layer + 1] * dims[layer];
    }

    std::span<const double> weights(std::size_t layer) const {
        return {theta.data() + weight_offset(layer), dims[layer + 1] * dims[layer]};
    }
    std::span<const double> biases(std::size_t layer) const {
        return {theta.data() + bias_offset(layer), dims[layer + 1]};
    }
};

inline MlpModel make_mlp(std::vector<std::size_t> dims, Activation act, LossKind loss,
                         double omega0 = 30.0) {
    require(dims.size() >= 2, "make_mlp: need at least input and output dims");
    for (std::size_t d : dims) require(d > 0, "make_mlp: zero layer width");
    MlpModel m;
    m.dims = std::move(dims);
    m.hidden_activations.assign(m.dims.size() - 2, act);
    m.omega0 = omega0;
    m.loss_kind = loss;
    m.theta.assign(m.param_count(), 0.0);
    return m;
}

// He-uniform for relu layers; SIREN scheme for sine layers
// (first layer 1/n, deeper layers sqrt(6/n)/omega0, bias 1/sqrt(n)).
// Draw order is layer by layer, weights row-major, then bias.
inline void init_params(MlpModel& model, Rng& rng) {
    const std::size_t layers = model.layer_count();
    std::size_t pos = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t fan_in = model.dims[l];
        const std::size_t fan_out = model.dims[l + 1];
        const bool sine = l < model.hidden_activations.size() &&
                          model.hidden_activations[l] == Activation::sine;
        const bool sine_net = !model.hidden_activations.empty() &&
                              model.hidden_activations.front() == Activation::sine;
        double wb;
        if (sine_net) {
            wb = (l == 0) ? 1.0 / static_cast<double>(fan_in)
                          : std::sqrt(6.0 / static_cast<double>(fan_in)) / model.omega0;
        } else {
            wb = std::sqrt(6.0 / static_cast<double>(fan_in));
        }
        for (std::size_t i = 0; i < fan_out * fan_in; ++i)
            model.theta[pos++] = rng.uniform_in(-wb, wb);
        if (sine || (sine_net && l + 1 == layers)) {
            const double bb = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (std::size_t i = 0; i < fan_out; ++i)
                model.theta[pos++] = rng.uniform_in(-bb, bb);
        } else {
            for (std::size_t i = 0; i < fan_out; ++i) model.theta[pos++] = 0.0;
        }
    }
    require(pos == model.theta.size(), "init_params: layout mismatch");
}

struct ForwardTrace {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;  // one per layer
    std::vector<std::vector<double>> act;  // hidden layers only
    double loss = 0.0;

    std::span<const double> output() const { return pre.back(); }
};

inline double apply_activation(Activation a, double omega0, double z) {
    if (a == Activation::relu) return z > 0.0 ? z : 0.0;
    return std::sin(omega0 * z);
}

inline double activation_derivative(Activation a, double omega0, double z) {
    if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
    return omega0 * std::cos(omega0 * z);
}

inline ForwardTrace forward(const MlpModel& model, std::span<const double> x) {
    require(x.size() == model.input_dim(), "forward: input dimension mismatch");
    const std::size_t layers = model.layer_count();
    ForwardTrace trace;
    trace.input.assign(x.begin(), x.end());
    trace.pre.resize(layers);
    trace.act.resize(layers - 1);
    std::span<const double> a = trace.input;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t n_out = model.dims[l + 1];
        const std::size_t n_in = model.dims[l];
        const double* w = model.theta.data() + model.weight_offset(l);
        const double* b = model.theta.data() + model.bias_offset(l);
        auto& z = trace.pre[l];
        z.resize(n_out);
        for (std::size_t r = 0; r < n_out; ++r) {
            double acc = b[r];
            const double* wr = w + r * n_in;
            for (std::size_t c = 0; c < n_in; ++c) acc += wr[c] * a[c];
            z[r] = acc;
        }
        if (l + 1 < layers) {
            const Activation kind = model.hidden_activations[l];
            auto& h = trace.act[l];
            h.resize(n_out);
            for (std::size_t r = 0; r < n_out; ++r)
                h[r] = apply_activation(kind, model.omega0, z[r]);
            a = h;
        }
    }
    return trace;
}

inline double loss_value(const MlpModel& model, std::span<const double> z,
                         const Target& target) {
    if (model.loss_kind == LossKind::softmax_cross_entropy) {
        require(target.is_class, "loss_value: expected class target");
        require(target.label < z.size(), "loss_value: class index out of range");
        return log_sum_exp(z) - z[target.label];
    }
    require(!target.is_class, "loss_value: expected regression target");
    require(target.values.size() == z.size(), "loss_value: target length mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
        const double d = z[j] - target.values[j];
        acc += d * d;
    }
    return acc;
}

// Cross entropy: softmax(z) - onehot(y). Squared error: 2 (z - y).
inline std::vector<double> output_layer_loss_gradient(const MlpModel& model,
                                                      std::span<const double> z,
                                                      const Target& target) {
    if (model.loss_kind == LossKind::softmax_cross_entropy) {
        require(target.is_class, "output_layer_loss_gradient: expected class target");
        require(target.label < z.size(),
                "output_layer_loss_gradient: class index out of range");
        std::vector<double> g = stable_softmax(z);
        g[target.label] -= 1.0;
        return g;
    }
    require(!target.is_class, "output_layer_loss_gradient: expected regression target");
    require(target.values.size() == z.size(),
            "output_layer_loss_gradient: target length mismatch");
    std::vector<double> g(z.size());
    for (std::size_t j = 0; j < z.size(); ++j)
        g[j] = 2.0 * (z[j] - target.values[j]);
    return g;
}

// Adds the per-sample loss gradient wrt theta into grad_accum; returns the loss.
inline double backward_from_trace(const MlpModel& model, const ForwardTrace& trace,
                                  const Target& target, std::span<double> grad_accum) {
    require(grad_accum.size() == model.theta.size(),
            "backward_from_trace: gradient buffer size mismatch");
    const std::size_t layers = model.layer_count();
    const double loss = loss_value(model, trace.output(), target);
    std::vector<double> delta = output_layer_loss_gradient(model, trace.output(), target);
    for (std::size_t li = layers; li-- > 0;) {
        const std::size_t n_out = model.dims[li + 1];
        const std::size_t n_in = model.dims[li];
        std::span<const double> a_prev =
            li == 0 ? std::span<const double>(trace.input) : trace.act[li - 1];
        double* gw = grad_accum.data() + model.weight_offset(li);
        double* gb = grad_accum.data() + model.bias_offset(li);
        for (std::size_t r = 0; r < n_out; ++r) {
            const double d = delta[r];
            if (d != 0.0) {
                double* gwr = gw + r * n_in;
                for (std::size_t c = 0; c < n_in; ++c) gwr[c] += d * a_prev[c];
            }
            gb[r] += d;
        }
        if (li == 0) break;
        const double* w = model.theta.data() + model.weight_offset(li);
        std::vector<double> prev(n_in, 0.0);
        for (std::size_t r = 0; r < n_out; ++r) {
            const double d = delta[r];
            if (d == 0.0) continue;
            const double* wr = w + r * n_in;
            for (std::size_t c = 0; c < n_in; ++c) prev[c] += d * wr[c];
        }
        const Activation kind = model.hidden_activations[li - 1];
        const auto& z_prev = trace.pre[li - 1];
        for (std::size_t c = 0; c < n_in; ++c)
            prev[c] *= activation_derivative(kind, model.omega0, z_prev[c]);
        delta = std::move(prev);
    }
    return loss;
}

inline double backward_per_sample(const MlpModel& model, std::span<const double> x,
                                  const Target& target, std::span<double> grad_accum) {
    const ForwardTrace trace = forward(model, x);
    return backward_from_trace(model, trace, target, grad_accum);
}

inline double per_sample_gradient_norm(const MlpModel& model, std::span<const double> x,
                                       const Target& target, std::vector<double>& scratch) {
    scratch.assign(model.theta.size(), 0.0);
    backward_per_sample(model, x, target, scratch);
    return l2_norm(scratch);
}

inline double per_sample_gradient_norm(const MlpModel& model, std::span<const double> x,
                                       const Target& target) {
    std::vector<double> scratch;
    return per_sample_gradient_norm(model, x, target, scratch);
}

// Finite-difference Jacobian of the network output wrt theta. Oracle for
// bound checks on small models only.
inline DenseMatrix jacobian_output_wrt_params(const MlpModel& model,
                                              std::span<const double> x,
                                              double h = 1e-5) {
    require(model.theta.size() <= 10000,
            "jacobian_output_wrt_params: model too large for the finite-difference oracle");
    require(h > 0.0, "jacobian_output_wrt_params: step must be positive");
    const std::size_t J = model.output_dim();
    const std::size_t P = model.theta.size();
    DenseMatrix jac(J, P);
    MlpModel probe = model;
    for (std::size_t i = 0; i < P; ++i) {
        const double saved = probe.theta[i];
        probe.theta[i] = saved + h;
        const ForwardTrace fp = forward(probe, x);
        probe.theta[i] = saved - h;
        const ForwardTrace fm = forward(probe, x);
        probe.theta[i] = saved;
        const auto zp = fp.output();
        const auto zm = fm.output();
        for (std::size_t j = 0; j < J; ++j)
            jac.at(j, i) = (zp[j] - zm[j]) / (2.0 * h);
    }
    return jac;
}

} // namespace gradsample
