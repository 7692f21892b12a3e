#include "snap/matrix.hpp"

#include "snap/error.hpp"
#include "snap/kernels.hpp"

#include <cmath>
#include <cstring>

namespace snap {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows = init.size();
    cols = rows ? init.begin()->size() : 0;
    data.reserve(rows * cols);
    for (const auto& r : init) {
        if (r.size() != cols) throw ShapeError("Matrix init: ragged rows");
        data.insert(data.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols) +
                         " != " + std::to_string(b.rows));
    Matrix c(a.rows, b.cols);
    // Row-major ikj order: C.row(i) += a(i,k) * B.row(k), an axpy per term.
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik != 0.0) kernels::axpy(b.cols, aik, b.row(k), crow);
        }
    }
    if (!c.all_finite()) throw NumericError("matmul: non-finite result");
    return c;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.cols) throw ShapeError("matvec: length mismatch");
    std::vector<double> y(a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        y[i] = kernels::dot(a.row(i), x.data(), a.cols);
    return y;
}

std::vector<double> matvec_t(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.rows) throw ShapeError("matvec_t: length mismatch");
    std::vector<double> y(a.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i)
        kernels::axpy(a.cols, x[i], a.row(i), y.data());
    return y;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw ShapeError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

} // namespace snap
