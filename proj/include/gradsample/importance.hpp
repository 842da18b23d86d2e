#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <span>
#include <vector>

#include "gradsample/error.hpp"
#include "gradsample/fenwick.hpp"
#include "gradsample/mlp.hpp"
#include "gradsample/numerics.hpp"
#include "gradsample/rng.hpp"

namespace gradsample {

enum class SamplingMode { uniform, importance_sampling, adaptive_sampling };
enum class ImportanceKind { loss_gradient_analytic, loss_gradient_numeric, loss_value };

// L2 norm of softmax(z) minus the one-hot target.
inline double importance_cross_entropy(std::span<const double> z, const Target& target) {
    require(target.is_class, "importance_cross_entropy: expected class target");
    require(target.label < z.size(), "importance_cross_entropy: class index out of range");
    std::vector<double> s = stable_softmax(z);
    s[target.label] -= 1.0;
    return l2_norm(s);
}

inline double importance_loss_gradient_numeric(const MlpModel& model,
                                               std::span<const double> z,
                                               const Target& target) {
    return l2_norm(output_layer_loss_gradient(model, z, target));
}

inline double importance_loss_value(const MlpModel& model, std::span<const double> z,
                                    const Target& target) {
    return std::max(0.0, loss_value(model, z, target));
}

inline double compute_importance(ImportanceKind kind, const MlpModel& model,
                                 std::span<const double> z, const Target& target) {
    switch (kind) {
    case ImportanceKind::loss_gradient_analytic:
        if (model.loss_kind == LossKind::softmax_cross_entropy)
            return importance_cross_entropy(z, target);
        return importance_loss_gradient_numeric(model, z, target);
    case ImportanceKind::loss_gradient_numeric:
        return importance_loss_gradient_numeric(model, z, target);
    case ImportanceKind::loss_value:
        return importance_loss_value(model, z, target);
    }
    throw ContractViolation("compute_importance: unknown kind");
}

struct Pdf {
    std::vector<double> p;
    bool uniform_fallback = false;
};

struct MiniBatch {
    std::vector<std::size_t> indices;
    std::vector<double> probs;
    std::vector<double> weights;
    bool degenerate = false;
};

// Persistent per-sample importance with EMA updates, a relative epsilon
// floor, and O(log N) weighted draws. q starts at all ones.
class ImportanceMemory {
public:
    explicit ImportanceMemory(std::size_t n, double alpha = 0.1,
                              double epsilon_scale = 1e-3)
        : q_(n, 1.0), alpha_(alpha), epsilon_scale_(epsilon_scale) {
        require(n >= 1, "ImportanceMemory: empty dataset");
        require(alpha >= 0.0 && alpha <= 1.0, "ImportanceMemory: alpha outside [0,1]");
        require(epsilon_scale >= 0.0, "ImportanceMemory: negative epsilon_scale");
        fenwick_.rebuild(q_);
    }

    std::size_t size() const { return q_.size(); }
    double alpha() const { return alpha_; }
    double epsilon_scale() const { return epsilon_scale_; }
    std::span<const double> q() const { return q_; }
    double q_at(std::size_t i) const { return q_[i]; }
    double total() const { return fenwick_.total(); }
    std::size_t degenerate_events() const { return degenerate_events_; }

    // Direct overwrite, used by the initialization pass.
    void assign(std::size_t index, double value) {
        require(index < q_.size(), "ImportanceMemory::assign: index out of range");
        require(std::isfinite(value) && value >= 0.0,
                "ImportanceMemory::assign: importance must be finite and nonnegative");
        fenwick_.add(index, value - q_[index]);
        q_[index] = value;
    }

    // q_i <- alpha * q_i + (1 - alpha) * new_importance.
    // Repeats of one index within a batch apply sequentially in batch order.
    void ema_update(std::size_t index, double new_importance) {
        require(index < q_.size(), "ImportanceMemory::ema_update: index out of range");
        require(std::isfinite(new_importance) && new_importance >= 0.0,
                "ImportanceMemory::ema_update: importance must be finite and nonnegative");
        const double updated = alpha_ * q_[index] + (1.0 - alpha_) * new_importance;
        fenwick_.add(index, updated - q_[index]);
        q_[index] = updated;
    }

    // q_i += epsilon with epsilon = epsilon_scale * mean(q).
    void epoch_floor() {
        double sum = 0.0;
        for (double v : q_) sum += v;
        const double eps = epsilon_scale_ * (sum / static_cast<double>(q_.size()));
        for (double& v : q_) v += eps;
        fenwick_.rebuild(q_);
    }

    Pdf to_pdf() const {
        Pdf pdf;
        pdf.p.resize(q_.size());
        double sum = 0.0;
        for (double v : q_) sum += v;
        if (sum > 0.0) {
            for (std::size_t i = 0; i < q_.size(); ++i) pdf.p[i] = q_[i] / sum;
        } else {
            pdf.uniform_fallback = true;
            const double u = 1.0 / static_cast<double>(q_.size());
            std::fill(pdf.p.begin(), pdf.p.end(), u);
        }
        return pdf;
    }

    // One weighted draw via Fenwick inverse-CDF search.
    std::size_t sample_index(Rng& rng) {
        const double u = rng.uniform_f64();
        const double total = fenwick_.total();
        if (!(total > 0.0)) return degenerate_draw(u);
        return resolve_index(fenwick_.lower_bound(u * total));
    }

    // Linear-scan oracle consuming one uniform exactly like sample_index.
    std::size_t sample_index_linear(Rng& rng) const {
        const double u = rng.uniform_f64();
        double total = 0.0;
        for (double v : q_) total += v;
        if (!(total > 0.0)) return degenerate_draw_const(u);
        const double target = u * total;
        double running = 0.0;
        for (std::size_t i = 0; i < q_.size(); ++i) {
            running += q_[i];
            if (running > target) return i;
        }
        return last_positive_index();
    }

    MiniBatch sample_batch(std::size_t batch_size, Rng& rng, SamplingMode mode) {
        require(batch_size >= 1, "sample_batch: batch size must be positive");
        const std::size_t n = q_.size();
        const double total = fenwick_.total();
        MiniBatch batch;
        batch.degenerate = !(total > 0.0);
        batch.indices.resize(batch_size);
        batch.probs.resize(batch_size);
        batch.weights.resize(batch_size);
        const double n_f = static_cast<double>(n);
        for (std::size_t b = 0; b < batch_size; ++b) {
            std::size_t idx;
            double p;
            if (batch.degenerate) {
                idx = degenerate_draw(rng.uniform_f64());
                p = 1.0 / n_f;
            } else {
                idx = sample_index(rng);
                p = q_[idx] / total;
            }
            batch.indices[b] = idx;
            switch (mode) {
            case SamplingMode::uniform:
                batch.probs[b] = 1.0 / n_f;
                batch.weights[b] = n_f;
                break;
            case SamplingMode::importance_sampling:
                batch.probs[b] = p;
                batch.weights[b] = 1.0 / p;
                break;
            case SamplingMode::adaptive_sampling:
                batch.probs[b] = p;
                batch.weights[b] = n_f;
                break;
            }
        }
        return batch;
    }

    void export_csv(std::ostream& out) const;

private:
    std::size_t degenerate_draw(double u) {
        ++degenerate_events_;
        return degenerate_draw_const(u);
    }

    std::size_t degenerate_draw_const(double u) const {
        const std::size_t n = q_.size();
        const auto idx = static_cast<std::size_t>(u * static_cast<double>(n));
        return std::min(idx, n - 1);
    }

    std::size_t last_positive_index() const {
        for (std::size_t i = q_.size(); i-- > 0;)
            if (q_[i] > 0.0) return i;
        throw ContractViolation("ImportanceMemory: no positive weight to sample");
    }

    // Rounding can leave lower_bound on a zero weight or one past the end;
    // shift to the nearest index a sequential scan could have produced.
    std::size_t resolve_index(std::size_t idx) const {
        while (idx < q_.size() && q_[idx] == 0.0) ++idx;
        if (idx >= q_.size()) return last_positive_index();
        return idx;
    }

    std::vector<double> q_;
    FenwickTree fenwick_;
    double alpha_;
    double epsilon_scale_;
    std::size_t degenerate_events_ = 0;
};

inline void ImportanceMemory::export_csv(std::ostream& out) const {
    out << "index,q\n";
    char buf[64];
    for (std::size_t i = 0; i < q_.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, q_[i]);
        out << buf;
    }
}

} // namespace gradsample
