#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gradsample/error.hpp"
#include "gradsample/rng.hpp"
#include "gradsample/target.hpp"

namespace gradsample {

struct Dataset {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<double> features;  // n x dim, row-major
    std::vector<Target> targets;
    std::size_t class_count = 0;  // 0 for regression targets
    std::string split = "train";

    std::span<const double> feature(std::size_t i) const {
        return {features.data() + i * dim, dim};
    }

    bool is_classification() const { return class_count > 0; }

    void check() const {
        require(n >= 1, "Dataset: empty");
        require(features.size() == n * dim, "Dataset: feature table shape mismatch");
        require(targets.size() == n, "Dataset: target count mismatch");
        for (double v : features)
            require(std::isfinite(v), "Dataset: non-finite feature");
        for (const Target& t : targets) {
            if (class_count > 0)
                require(t.is_class && t.label < class_count,
                        "Dataset: class label out of range");
            else
                require(!t.is_class, "Dataset: expected regression target");
        }
    }
};

namespace detail {

inline Dataset gather(const Dataset& src, const std::vector<std::size_t>& picks) {
    Dataset out;
    out.n = picks.size();
    out.dim = src.dim;
    out.class_count = src.class_count;
    out.split = src.split;
    out.features.reserve(out.n * out.dim);
    out.targets.reserve(out.n);
    for (std::size_t i : picks) {
        const auto row = src.feature(i);
        out.features.insert(out.features.end(), row.begin(), row.end());
        out.targets.push_back(src.targets[i]);
    }
    return out;
}

} // namespace detail

// Seeded sample of n rows without replacement, stratified by class for
// classification (largest-remainder quotas). Output keeps source order.
inline Dataset subset(const Dataset& src, std::size_t n, std::uint64_t seed) {
    require(n >= 1, "subset: requested size must be positive");
    require(n <= src.n, "subset: requested more rows than the dataset holds");
    Rng rng(seed);
    std::vector<std::size_t> picks;
    picks.reserve(n);
    if (src.class_count == 0) {
        std::vector<std::size_t> order(src.n);
        for (std::size_t i = 0; i < src.n; ++i) order[i] = i;
        rng.shuffle(order);
        picks.assign(order.begin(), order.begin() + n);
    } else {
        std::vector<std::vector<std::size_t>> by_class(src.class_count);
        for (std::size_t i = 0; i < src.n; ++i)
            by_class[src.targets[i].label].push_back(i);
        const double ratio = static_cast<double>(n) / static_cast<double>(src.n);
        std::vector<std::size_t> quota(src.class_count);
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < src.class_count; ++c) {
            const double exact = ratio * static_cast<double>(by_class[c].size());
            quota[c] = static_cast<std::size_t>(exact);
            assigned += quota[c];
            remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
        }
        // Distribute the leftover to the largest fractional parts, lowest
        // class index breaking ties.
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t k = 0; assigned < n; ++k) {
            const std::size_t c = remainders[k % remainders.size()].second;
            if (quota[c] < by_class[c].size()) {
                ++quota[c];
                ++assigned;
            }
        }
        for (std::size_t c = 0; c < src.class_count; ++c) {
            auto& pool = by_class[c];
            rng.shuffle(pool);
            picks.insert(picks.end(), pool.begin(), pool.begin() + quota[c]);
        }
    }
    std::sort(picks.begin(), picks.end());
    return detail::gather(src, picks);
}

} // namespace gradsample
