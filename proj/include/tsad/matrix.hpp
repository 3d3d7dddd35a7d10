#ifndef TSAD_MATRIX_HPP
#define TSAD_MATRIX_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace tsad {

// Dense row-major matrix of doubles. Rows are observations throughout the
// pipeline; columns are features.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) {
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        return data_[i * cols_ + j];
    }

    std::span<double> row(std::size_t i) {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool all_finite() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// a (n×k) times b (k×m). The OpenMP variant splits over output rows; each
// entry is a single serial dot product, so the result is bit-identical to
// matmul_serial for any thread count.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_serial(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// Maximum absolute entry (0 for an empty matrix).
double max_abs(const Matrix& a);

// Contiguous row slice [begin, end).
Matrix take_rows(const Matrix& a, std::size_t begin, std::size_t end);

// New matrix whose column j is a's column columns[j].
Matrix select_columns(const Matrix& a, const std::vector<std::size_t>& columns);

} // namespace tsad

#endif
