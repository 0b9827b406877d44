#ifndef NSC_MATRIX_HPP
#define NSC_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nsc/errors.hpp"

namespace nsc {

/// Dense row-major float matrix. Plain value type used for weights,
/// activations and gradients alike.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0f) {}
    Matrix(int r, int c, std::vector<float> d) : rows(r), cols(c), data(std::move(d)) {}

    float& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return data.size(); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (float v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(float v) { std::fill(data.begin(), data.end(), v); }
};

inline void require_shape(const Matrix& m, int rows, int cols, const std::string& who) {
    if (m.rows != rows || m.cols != cols)
        throw DimensionError(who + ": expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", got " + std::to_string(m.rows) +
                             "x" + std::to_string(m.cols));
}

/// C = A * B, the naive reference product.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw DimensionError("matmul: inner dims " + std::to_string(a.cols) + " vs " +
                             std::to_string(b.rows));
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const float* arow = &a.data[static_cast<size_t>(i) * a.cols];
        float* crow = &c.data[static_cast<size_t>(i) * c.cols];
        for (int k = 0; k < a.cols; ++k) {
            const float av = arow[k];
            const float* brow = &b.data[static_cast<size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

/// C = A * B^T. Matches the FC weight layout (out x in).
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        throw DimensionError("matmul_nt: inner dims " + std::to_string(a.cols) + " vs " +
                             std::to_string(b.cols));
    Matrix c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const float* arow = &a.data[static_cast<size_t>(i) * a.cols];
        for (int j = 0; j < b.rows; ++j) {
            const float* brow = &b.data[static_cast<size_t>(j) * b.cols];
            float acc = 0.0f;
            for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            c.at(i, j) = acc;
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

}  // namespace nsc

#endif
