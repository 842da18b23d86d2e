#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gradsample/error.hpp"
#include "gradsample/numerics.hpp"

namespace gradsample {

enum class OptimizerKind { sgd, sgd_momentum, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::sgd;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::sgd;
    std::vector<double> m;  // momentum buffer / first moment
    std::vector<double> v;  // second moment
    std::uint64_t t = 0;

    void init(OptimizerKind k, std::size_t param_count) {
        kind = k;
        t = 0;
        m.assign(kind == OptimizerKind::sgd ? 0 : param_count, 0.0);
        v.assign(kind == OptimizerKind::adam ? param_count : 0, 0.0);
    }
};

inline void optimizer_step(std::span<double> theta, std::span<const double> grad,
                           double learning_rate, OptimizerState& state,
                           const OptimizerConfig& cfg) {
    require(theta.size() == grad.size(), "optimizer_step: shape mismatch");
    require(all_finite(grad), "optimizer_step: non-finite gradient");
    switch (state.kind) {
    case OptimizerKind::sgd:
        for (std::size_t i = 0; i < theta.size(); ++i)
            theta[i] -= learning_rate * grad[i];
        break;
    case OptimizerKind::sgd_momentum:
        require(state.m.size() == theta.size(), "optimizer_step: state size mismatch");
        for (std::size_t i = 0; i < theta.size(); ++i) {
            state.m[i] = cfg.momentum * state.m[i] + grad[i];
            theta[i] -= learning_rate * state.m[i];
        }
        break;
    case OptimizerKind::adam: {
        require(state.m.size() == theta.size(), "optimizer_step: state size mismatch");
        state.t += 1;
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double g = grad[i];
            state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
            state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = state.m[i] / c1;
            const double vhat = state.v[i] / c2;
            theta[i] -= learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        break;
    }
    }
}

} // namespace gradsample
