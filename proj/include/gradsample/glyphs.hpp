#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gradsample/dataset.hpp"
#include "gradsample/error.hpp"
#include "gradsample/rng.hpp"

namespace gradsample {

// Synthetic 28x28 digit corpus in the MNIST byte layout: ten segment-glyph
// classes with per-sample affine jitter (shift, rotation, scale, aspect,
// shear), stroke-width and intensity variation, occasional segment
// trimming, and background speckle. A minority of samples draw one style
// axis from a severe range, which makes difficulty heavy-tailed while
// keeping labels unambiguous.
struct GlyphData {
    std::size_t n = 0;
    std::vector<std::uint8_t> pixels;  // n * 28 * 28
    std::vector<std::uint8_t> labels;  // n
};

namespace detail {

struct Seg {
    double x0, y0, x1, y1;
};

// Segment layout on a unit box, y down: top, top-right, bottom-right,
// bottom, bottom-left, top-left, middle.
inline const std::array<Seg, 7>& glyph_segments() {
    static const std::array<Seg, 7> segs = {{
        {0.0, 0.0, 1.0, 0.0},
        {1.0, 0.0, 1.0, 0.5},
        {1.0, 0.5, 1.0, 1.0},
        {0.0, 1.0, 1.0, 1.0},
        {0.0, 0.5, 0.0, 1.0},
        {0.0, 0.0, 0.0, 0.5},
        {0.0, 0.5, 1.0, 0.5},
    }};
    return segs;
}

inline const std::array<std::uint8_t, 10>& glyph_masks() {
    // Bit k = segment k active, ordered as in glyph_segments.
    static const std::array<std::uint8_t, 10> masks = {{
        0b0111111,  // 0
        0b0000110,  // 1
        0b1011011,  // 2
        0b1001111,  // 3
        0b1100110,  // 4
        0b1101101,  // 5
        0b1111101,  // 6
        0b0000111,  // 7
        0b1111111,  // 8
        0b1101111,  // 9
    }};
    return masks;
}

inline double point_segment_distance(double px, double py, const Seg& s) {
    const double vx = s.x1 - s.x0;
    const double vy = s.y1 - s.y0;
    const double wx = px - s.x0;
    const double wy = py - s.y0;
    const double vv = vx * vx + vy * vy;
    double t = vv > 0.0 ? (wx * vx + wy * vy) / vv : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (s.x0 + t * vx);
    const double dy = py - (s.y0 + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

} // namespace detail

inline void render_glyph(std::uint8_t digit, Rng& rng, std::uint8_t* out28x28) {
    // A fifth of the samples push exactly one style axis into a severe
    // range. One severe axis at a time keeps every glyph legible while the
    // tail stays persistently harder than the mild mass.
    const double tail = rng.uniform_f64();
    const int severe = tail < 0.75 ? -1 : static_cast<int>((tail - 0.75) * 20.0);
    const double dx = rng.uniform_in(-3.2, 3.2);
    const double dy = rng.uniform_in(-3.2, 3.2);
    const double rot = severe == 0 ? rng.uniform_in(-0.55, 0.55)
                                   : rng.uniform_in(-0.28, 0.28);
    const double scale = severe == 1 ? rng.uniform_in(0.48, 0.66)
                                     : rng.uniform_in(0.62, 1.15);
    const double aspect = rng.uniform_in(0.85, 1.2);
    const double shear = severe == 2 ? rng.uniform_in(-0.55, 0.55)
                                     : rng.uniform_in(-0.22, 0.22);
    const double thickness = severe == 3 ? rng.uniform_in(0.72, 0.98)
                                         : rng.uniform_in(1.05, 2.4);
    const double intensity = severe == 4 ? rng.uniform_in(0.36, 0.52)
                                         : rng.uniform_in(0.52, 1.0);

    const double box_w = 10.0 * scale * aspect;
    const double box_h = 16.0 * scale;
    const double cx = 14.0 + dx;
    const double cy = 14.0 + dy;
    const double cr = std::cos(rot);
    const double sr = std::sin(rot);

    std::vector<detail::Seg> active;
    const std::uint8_t mask = detail::glyph_masks()[digit];
    for (std::size_t k = 0; k < 7; ++k) {
        if (!(mask & (1u << k))) continue;
        detail::Seg s = detail::glyph_segments()[k];
        if (rng.uniform_f64() < 0.08) {
            // Degrade: trim a short fraction off one end.
            const double cut = rng.uniform_in(0.2, 0.45);
            if (rng.uniform_f64() < 0.5) {
                s.x1 = s.x0 + (s.x1 - s.x0) * (1.0 - cut);
                s.y1 = s.y0 + (s.y1 - s.y0) * (1.0 - cut);
            } else {
                s.x0 = s.x1 - (s.x1 - s.x0) * (1.0 - cut);
                s.y0 = s.y1 - (s.y1 - s.y0) * (1.0 - cut);
            }
        }
        // Unit box to image coordinates: center, scale, shear, rotate,
        // translate.
        const auto map_x = [&](double ux, double uy) {
            const double ly = (uy - 0.5) * box_h;
            const double lx = (ux - 0.5) * box_w + shear * ly;
            return cx + cr * lx - sr * ly;
        };
        const auto map_y = [&](double ux, double uy) {
            const double ly = (uy - 0.5) * box_h;
            const double lx = (ux - 0.5) * box_w + shear * ly;
            return cy + sr * lx + cr * ly;
        };
        active.push_back({map_x(s.x0, s.y0), map_y(s.x0, s.y0), map_x(s.x1, s.y1),
                          map_y(s.x1, s.y1)});
    }

    for (std::size_t r = 0; r < 28; ++r) {
        for (std::size_t c = 0; c < 28; ++c) {
            const double px = static_cast<double>(c) + 0.5;
            const double py = static_cast<double>(r) + 0.5;
            double d = 1e9;
            for (const auto& s : active)
                d = std::min(d, detail::point_segment_distance(px, py, s));
            double v = std::clamp(thickness * 0.5 + 0.5 - d, 0.0, 1.0) * intensity;
            if (rng.uniform_f64() < 0.02) v += rng.uniform_in(0.0, 0.3);
            v = std::clamp(v, 0.0, 1.0);
            out28x28[r * 28 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    }
}

inline Dataset glyphs_to_dataset(const GlyphData& data, const std::string& split) {
    Dataset ds;
    ds.n = data.n;
    ds.dim = 28 * 28;
    ds.class_count = 10;
    ds.split = split;
    ds.features.resize(ds.n * ds.dim);
    for (std::size_t i = 0; i < data.pixels.size(); ++i)
        ds.features[i] = static_cast<double>(data.pixels[i]) / 255.0;
    ds.targets.reserve(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) ds.targets.push_back(Target::cls(data.labels[i]));
    ds.check();
    return ds;
}

// Classes are laid out in blocks, per_class each, in label order.
inline GlyphData make_glyphs(std::size_t per_class, std::uint64_t seed) {
    require(per_class >= 1, "make_glyphs: per_class must be positive");
    GlyphData data;
    data.n = per_class * 10;
    data.pixels.resize(data.n * 28 * 28);
    data.labels.resize(data.n);
    Rng rng(seed);
    std::size_t i = 0;
    for (std::uint8_t digit = 0; digit < 10; ++digit) {
        for (std::size_t k = 0; k < per_class; ++k, ++i) {
            data.labels[i] = digit;
            render_glyph(digit, rng, data.pixels.data() + i * 28 * 28);
        }
    }
    return data;
}

} // namespace gradsample
