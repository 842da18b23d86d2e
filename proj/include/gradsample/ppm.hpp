#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "gradsample/dataset.hpp"
#include "gradsample/error.hpp"

namespace gradsample {

struct PpmImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;  // 3 bytes per pixel, row-major
};

namespace detail {

// PPM header tokens may be separated by whitespace and # comments.
inline std::size_t read_ppm_number(std::istream& in, const std::string& path) {
    int c = in.get();
    while (in && (std::isspace(c) || c == '#')) {
        if (c == '#')
            while (in && c != '\n') c = in.get();
        c = in.get();
    }
    if (!in || !std::isdigit(c)) throw ParseError("ppm: " + path + ": malformed header");
    std::size_t value = 0;
    while (in && std::isdigit(c)) {
        value = value * 10 + static_cast<std::size_t>(c - '0');
        c = in.get();
    }
    if (in) in.unget();
    return value;
}

} // namespace detail

// Binary PPM, maxval 255 only.
inline PpmImage read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("ppm: cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (!in || m0 != 'P' || m1 != '6')
        throw ParseError("ppm: " + path + ": not a P6 file");
    PpmImage img;
    img.width = detail::read_ppm_number(in, path);
    img.height = detail::read_ppm_number(in, path);
    const std::size_t maxval = detail::read_ppm_number(in, path);
    if (maxval != 255)
        throw ParseError("ppm: " + path + ": unsupported maxval " +
                         std::to_string(maxval));
    in.get();  // single whitespace byte before the raster
    if (!in) throw ParseError("ppm: " + path + ": truncated header");
    if (img.width == 0 || img.height == 0)
        throw ParseError("ppm: " + path + ": zero dimension");
    img.rgb.resize(img.width * img.height * 3);
    in.read(reinterpret_cast<char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
    if (!in) throw ParseError("ppm: " + path + ": truncated raster");
    return img;
}

inline void write_ppm(const std::string& path, const PpmImage& img) {
    require(img.rgb.size() == img.width * img.height * 3, "write_ppm: size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("ppm: cannot open for writing: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()),
              static_cast<std::streamsize>(img.rgb.size()));
    if (!out) throw ParseError("ppm: write failed: " + path);
}

// Pixel-center coordinate convention: x = 2*(i + 0.5)/W - 1, same for y.
inline double pixel_center_coord(std::size_t i, std::size_t extent) {
    return 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(extent) - 1.0;
}

// One sample per pixel in row-major order: features (x, y) in [-1, 1]^2,
// targets RGB in [0, 1]^3.
inline Dataset image_regression_dataset(const PpmImage& img,
                                        const std::string& split = "train") {
    Dataset ds;
    ds.n = img.width * img.height;
    ds.dim = 2;
    ds.split = split;
    ds.features.reserve(ds.n * 2);
    ds.targets.reserve(ds.n);
    double rgb[3];
    for (std::size_t r = 0; r < img.height; ++r) {
        for (std::size_t c = 0; c < img.width; ++c) {
            ds.features.push_back(pixel_center_coord(c, img.width));
            ds.features.push_back(pixel_center_coord(r, img.height));
            const std::uint8_t* px = img.rgb.data() + (r * img.width + c) * 3;
            for (int k = 0; k < 3; ++k) rgb[k] = static_cast<double>(px[k]) / 255.0;
            ds.targets.push_back(Target::reg(std::span<const double>(rgb, 3)));
        }
    }
    ds.check();
    return ds;
}

inline Dataset image_regression_dataset(const std::string& path,
                                        const std::string& split = "train") {
    return image_regression_dataset(read_ppm(path), split);
}

} // namespace gradsample
