#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "gradsample/dataset.hpp"
#include "gradsample/error.hpp"
#include "gradsample/rng.hpp"

namespace gradsample {

struct BlobSpec {
    std::size_t class_count = 3;
    std::size_t points_per_class = 0;
    std::vector<std::array<double, 2>> means;  // one per class
    double sigma = 1.0;
    std::uint64_t seed = 0;
};

// Class means evenly spaced on a circle, class 0 at angle 0.
inline std::vector<std::array<double, 2>> ring_means(std::size_t k, double radius) {
    std::vector<std::array<double, 2>> means(k);
    for (std::size_t c = 0; c < k; ++c) {
        const double angle =
            2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
        means[c] = {radius * std::cos(angle), radius * std::sin(angle)};
    }
    return means;
}

// Isotropic Gaussian clusters; draw order is class by class, point by
// point, x then y, off one seeded stream.
inline Dataset make_blobs(const BlobSpec& spec) {
    require(spec.class_count >= 2, "make_blobs: need at least two classes");
    require(spec.points_per_class >= 1, "make_blobs: need points per class");
    require(spec.sigma > 0.0, "make_blobs: sigma must be positive");
    require(spec.means.size() == spec.class_count,
            "make_blobs: one mean per class required");
    Dataset ds;
    ds.n = spec.class_count * spec.points_per_class;
    ds.dim = 2;
    ds.class_count = spec.class_count;
    ds.features.reserve(ds.n * 2);
    ds.targets.reserve(ds.n);
    Rng rng(spec.seed);
    for (std::size_t c = 0; c < spec.class_count; ++c) {
        for (std::size_t i = 0; i < spec.points_per_class; ++i) {
            ds.features.push_back(spec.means[c][0] + spec.sigma * rng.normal());
            ds.features.push_back(spec.means[c][1] + spec.sigma * rng.normal());
            ds.targets.push_back(Target::cls(c));
        }
    }
    ds.check();
    return ds;
}

} // namespace gradsample
