#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "gradsample/dataset.hpp"
#include "gradsample/error.hpp"

namespace gradsample {

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in, const std::string& path,
                                 std::size_t offset) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw ParseError("idx: " + path + ": truncated at byte offset " +
                         std::to_string(offset));
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

inline void write_u32_be(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace detail

// Big-endian IDX image file: magic 0x803, dims (N, rows, cols), raw bytes.
inline std::vector<std::uint8_t> load_idx_images(const std::string& path,
                                                 std::size_t& n, std::size_t& rows,
                                                 std::size_t& cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("idx: cannot open " + path);
    const std::uint32_t magic = detail::read_u32_be(in, path, 0);
    if (magic != 0x00000803u)
        throw ParseError("idx: " + path + ": bad image magic 0x" +
                         [&] {
                             char buf[16];
                             std::snprintf(buf, sizeof(buf), "%08x", magic);
                             return std::string(buf);
                         }() +
                         " at byte offset 0");
    n = detail::read_u32_be(in, path, 4);
    rows = detail::read_u32_be(in, path, 8);
    cols = detail::read_u32_be(in, path, 12);
    std::vector<std::uint8_t> pixels(n * rows * cols);
    in.read(reinterpret_cast<char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
    if (!in)
        throw ParseError("idx: " + path + ": truncated pixel block at byte offset " +
                         std::to_string(16 + static_cast<std::size_t>(in.gcount())));
    return pixels;
}

// Big-endian IDX label file: magic 0x801, dim (N), raw bytes.
inline std::vector<std::uint8_t> load_idx_labels(const std::string& path,
                                                 std::size_t& n) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("idx: cannot open " + path);
    const std::uint32_t magic = detail::read_u32_be(in, path, 0);
    if (magic != 0x00000801u)
        throw ParseError("idx: " + path + ": bad label magic at byte offset 0");
    n = detail::read_u32_be(in, path, 4);
    std::vector<std::uint8_t> labels(n);
    in.read(reinterpret_cast<char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
    if (!in)
        throw ParseError("idx: " + path + ": truncated label block at byte offset " +
                         std::to_string(8 + static_cast<std::size_t>(in.gcount())));
    return labels;
}

// Pixels scale to [0,1] by /255; labels become class targets.
inline Dataset load_mnist_idx(const std::string& images_path,
                              const std::string& labels_path) {
    std::size_t n_img = 0, rows = 0, cols = 0, n_lbl = 0;
    const auto pixels = load_idx_images(images_path, n_img, rows, cols);
    const auto labels = load_idx_labels(labels_path, n_lbl);
    if (n_img != n_lbl)
        throw ParseError("idx: image count " + std::to_string(n_img) +
                         " does not match label count " + std::to_string(n_lbl));
    Dataset ds;
    ds.n = n_img;
    ds.dim = rows * cols;
    ds.features.resize(ds.n * ds.dim);
    for (std::size_t i = 0; i < pixels.size(); ++i)
        ds.features[i] = static_cast<double>(pixels[i]) / 255.0;
    ds.targets.reserve(ds.n);
    std::size_t max_label = 0;
    for (std::size_t i = 0; i < ds.n; ++i) {
        ds.targets.push_back(Target::cls(labels[i]));
        max_label = std::max<std::size_t>(max_label, labels[i]);
    }
    ds.class_count = max_label + 1;
    ds.check();
    return ds;
}

inline void write_idx_images(const std::string& path,
                             const std::vector<std::uint8_t>& pixels, std::size_t n,
                             std::size_t rows, std::size_t cols) {
    require(pixels.size() == n * rows * cols, "write_idx_images: size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("idx: cannot open for writing: " + path);
    detail::write_u32_be(out, 0x00000803u);
    detail::write_u32_be(out, static_cast<std::uint32_t>(n));
    detail::write_u32_be(out, static_cast<std::uint32_t>(rows));
    detail::write_u32_be(out, static_cast<std::uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out) throw ParseError("idx: write failed: " + path);
}

inline void write_idx_labels(const std::string& path,
                             const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("idx: cannot open for writing: " + path);
    detail::write_u32_be(out, 0x00000801u);
    detail::write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
    if (!out) throw ParseError("idx: write failed: " + path);
}

} // namespace gradsample
