#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gradsample/error.hpp"

namespace gradsample {

// Binary indexed tree over nonnegative weights, 1-based internally.
// Node i stores the sum of the weight range (i - lowbit(i), i], accumulated
// left to right so freshly built prefix sums reproduce a sequential scan.
class FenwickTree {
public:
    FenwickTree() = default;

    explicit FenwickTree(std::span<const double> weights) { rebuild(weights); }

    void rebuild(std::span<const double> weights) {
        n_ = weights.size();
        tree_.assign(n_ + 1, 0.0);
        for (std::size_t i = 1; i <= n_; ++i) {
            const std::size_t lo = i - lowbit(i);
            double sum = 0.0;
            for (std::size_t j = lo; j < i; ++j) sum += weights[j];
            tree_[i] = sum;
        }
    }

    std::size_t size() const { return n_; }

    void add(std::size_t index, double delta) {
        require(index < n_, "FenwickTree::add: index out of range");
        for (std::size_t i = index + 1; i <= n_; i += lowbit(i)) tree_[i] += delta;
    }

    // Sum of weights [0, count)
    double prefix_sum(std::size_t count) const {
        require(count <= n_, "FenwickTree::prefix_sum: count out of range");
        double sum = 0.0;
        for (std::size_t i = count; i > 0; i -= lowbit(i)) sum += tree_[i];
        return sum;
    }

    double total() const { return prefix_sum(n_); }

    // Smallest 0-based index whose inclusive prefix sum exceeds target.
    // The accumulator mirrors the comparisons a sequential scan would make,
    // so on a freshly built tree the result matches the linear oracle.
    // Targets at or past the total clamp to n_ here; callers resolve that.
    std::size_t lower_bound(double target) const {
        std::size_t pos = 0;
        double acc = 0.0;
        std::size_t step = 1;
        while (step * 2 <= n_) step *= 2;
        for (; step > 0; step /= 2) {
            const std::size_t next = pos + step;
            if (next <= n_ && acc + tree_[next] <= target) {
                pos = next;
                acc += tree_[next];
            }
        }
        return pos;
    }

private:
    static std::size_t lowbit(std::size_t i) { return i & (~i + 1); }

    std::size_t n_ = 0;
    std::vector<double> tree_;
};

} // namespace gradsample
