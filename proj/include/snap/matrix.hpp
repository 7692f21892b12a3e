#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace snap {

/// Dense row-major matrix of doubles. Values are immutable by convention once
/// a computation has produced them; sharing across threads is safe as long as
/// nobody writes.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // rows*cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    // e.g. Matrix{{1,2},{3,4}}
    Matrix(std::initializer_list<std::initializer_list<double>> init);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    std::span<const double> row_span(std::size_t r) const { return {row(r), cols}; }

    std::size_t size() const { return data.size(); }

    static Matrix identity(std::size_t n);

    bool all_finite() const;
};

/// Standard product; throws ShapeError on inner-dimension mismatch and
/// NumericError if the result contains non-finite entries.
Matrix matmul(const Matrix& a, const Matrix& b);

/// y = A x
std::vector<double> matvec(const Matrix& a, std::span<const double> x);

/// y = A^T x
std::vector<double> matvec_t(const Matrix& a, std::span<const double> x);

double max_abs_diff(const Matrix& a, const Matrix& b);

} // namespace snap
