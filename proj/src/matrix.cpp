#include "tsad/matrix.hpp"

#include <cmath>

#include "tsad/errors.hpp"

namespace tsad {

namespace {

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out,
                       std::size_t i) {
    const std::size_t k = a.cols();
    const std::size_t m = b.cols();
    double* dst = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
        const double aip = a(i, p);
        const double* brow = b.data() + p * m;
        for (std::size_t j = 0; j < m; ++j)
            dst[j] += aip * brow[j];
    }
}

inline void check_matmul_dims(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ArgumentError("matmul: inner dimensions disagree");
}

} // namespace

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v))
            return false;
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_matmul_dims(a, b);
    Matrix out(a.rows(), b.cols());
    const std::int64_t n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
        matmul_row(a, b, out, static_cast<std::size_t>(i));
    return out;
}

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
    check_matmul_dims(a, b);
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        matmul_row(a, b, out, i);
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            out(j, i) = a(i, j);
    return out;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            m = std::max(m, std::abs(a(i, j)));
    return m;
}

Matrix take_rows(const Matrix& a, std::size_t begin, std::size_t end) {
    if (begin > end || end > a.rows())
        throw ArgumentError("take_rows: range out of bounds");
    Matrix out(end - begin, a.cols());
    for (std::size_t i = begin; i < end; ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            out(i - begin, j) = a(i, j);
    return out;
}

Matrix select_columns(const Matrix& a, const std::vector<std::size_t>& columns) {
    for (std::size_t c : columns)
        if (c >= a.cols())
            throw ArgumentError("select_columns: column index out of range");
    Matrix out(a.rows(), columns.size());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < columns.size(); ++j)
            out(i, j) = a(i, columns[j]);
    return out;
}

} // namespace tsad
