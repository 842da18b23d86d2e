#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gradsample/error.hpp"

namespace gradsample {

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double l2_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

// Max-subtracted softmax; safe for arbitrarily large logits.
inline std::vector<double> stable_softmax(std::span<const double> z) {
    require(!z.empty(), "stable_softmax: empty input");
    require(all_finite(z), "stable_softmax: non-finite input");
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);
    std::vector<double> s(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        s[i] = std::exp(z[i] - zmax);
        sum += s[i];
    }
    for (double& v : s) v /= sum;
    return s;
}

// log(sum exp(z_j)) with the same max subtraction
inline double log_sum_exp(std::span<const double> z) {
    require(!z.empty(), "log_sum_exp: empty input");
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    return zmax + std::log(sum);
}

// Central differences, one coordinate at a time.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double h) {
    require(h > 0.0, "finite_difference_gradient: step must be positive");
    std::vector<double> point(theta.begin(), theta.end());
    std::vector<double> grad(theta.size(), 0.0);
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double saved = point[i];
        point[i] = saved + h;
        const double fp = f(point);
        point[i] = saved - h;
        const double fm = f(point);
        point[i] = saved;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

} // namespace gradsample
