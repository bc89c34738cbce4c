#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tbp/errors.hpp"

namespace tbp {

// Dense row-major matrix of 64-bit reals.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    void fill(double v) { data.assign(data.size(), v); }
};

using Vector = std::vector<double>;

// y += A x
inline void matvec_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
    if (x.size() != a.cols || y.size() != a.rows) {
        throw ShapeMismatch("matvec: A is " + std::to_string(a.rows) + "x" +
                            std::to_string(a.cols) + ", x has " + std::to_string(x.size()) +
                            ", y has " + std::to_string(y.size()));
    }
    const double* row = a.data.data();
    for (std::size_t r = 0; r < a.rows; ++r, row += a.cols) {
        double acc = 0.0;
        for (std::size_t c = 0; c < a.cols; ++c) acc += row[c] * x[c];
        y[r] += acc;
    }
}

// y += A^T x
inline void matvec_transposed_add(const Matrix& a, std::span<const double> x,
                                  std::span<double> y) {
    if (x.size() != a.rows || y.size() != a.cols) {
        throw ShapeMismatch("matvec_t: A is " + std::to_string(a.rows) + "x" +
                            std::to_string(a.cols) + ", x has " + std::to_string(x.size()) +
                            ", y has " + std::to_string(y.size()));
    }
    const double* row = a.data.data();
    for (std::size_t r = 0; r < a.rows; ++r, row += a.cols) {
        const double xr = x[r];
        for (std::size_t c = 0; c < a.cols; ++c) y[c] += row[c] * xr;
    }
}

// A += u v^T
inline void outer_add(Matrix& a, std::span<const double> u, std::span<const double> v) {
    if (u.size() != a.rows || v.size() != a.cols) {
        throw ShapeMismatch("outer: A is " + std::to_string(a.rows) + "x" +
                            std::to_string(a.cols) + ", u has " + std::to_string(u.size()) +
                            ", v has " + std::to_string(v.size()));
    }
    double* row = a.data.data();
    for (std::size_t r = 0; r < a.rows; ++r, row += a.cols) {
        const double ur = u[r];
        for (std::size_t c = 0; c < a.cols; ++c) row[c] += ur * v[c];
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeMismatch("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace tbp
