#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gradsample/error.hpp"

namespace gradsample {

// Row-major, 64-bit floats throughout.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    DenseMatrix(std::size_t r, std::size_t c, std::vector<double> d)
        : rows(r), cols(c), data(std::move(d)) {
        require(data.size() == r * c, "DenseMatrix: data length does not match shape");
    }

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

inline std::vector<double> matvec(const DenseMatrix& m, std::span<const double> v) {
    require(v.size() == m.cols, "matvec: vector length does not match matrix columns");
    std::vector<double> out(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* mrow = m.data.data() + r * m.cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += mrow[c] * v[c];
        out[r] = acc;
    }
    return out;
}

// Batched kernels for the training hot path. All three are written
// axpy-style over the contiguous last index so they vectorize without
// reassociation; accumulation order is fixed, so results are
// reproducible run to run.

// c (m x n) += a (m x k) * b (k x n)
inline void gemm_nn_accum(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c (k x n) += a^T (k x m) * b (m x n), with a stored (m x k)
inline void gemm_tn_accum(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace gradsample
