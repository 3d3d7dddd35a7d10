#include "tsad/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsad/errors.hpp"

namespace tsad {

namespace {

double offdiag_frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j)
                s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

double frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

// One Jacobi rotation zeroing a(p,q), accumulating into v.
void jacobi_rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    if (apq == 0.0)
        return;
    const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                     (std::abs(tau) + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;

    const std::size_t n = a.rows();
    const double app = a(p, p);
    const double aqq = a(q, q);
    a(p, p) = c * c * app - 2.0 * s * c * apq + s * s * aqq;
    a(q, q) = s * s * app + 2.0 * s * c * apq + c * c * aqq;
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k == p || k == q)
            continue;
        const double akp = a(k, p);
        const double akq = a(k, q);
        a(k, p) = c * akp - s * akq;
        a(p, k) = a(k, p);
        a(k, q) = s * akp + c * akq;
        a(q, k) = a(k, q);
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double vkp = v(k, p);
        const double vkq = v(k, q);
        v(k, p) = c * vkp - s * vkq;
        v(k, q) = s * vkp + c * vkq;
    }
}

void fix_column_signs(Matrix& v) {
    for (std::size_t j = 0; j < v.cols(); ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < v.rows(); ++i) {
            const double m = std::abs(v(i, j));
            if (m > best) {
                best = m;
                arg = i;
            }
        }
        if (v(arg, j) < 0.0)
            for (std::size_t i = 0; i < v.rows(); ++i)
                v(i, j) = -v(i, j);
    }
}

} // namespace

Matrix covariance(const Matrix& data) {
    const std::size_t m = data.rows();
    const std::size_t p = data.cols();
    if (m < 2)
        throw ArgumentError("covariance: need at least 2 rows");

    std::vector<double> mean(p, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < p; ++j)
            mean[j] += data(i, j);
    for (double& v : mean)
        v /= static_cast<double>(m);

    Matrix cov(p, p);
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a; b < p; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                s += (data(i, a) - mean[a]) * (data(i, b) - mean[b]);
            const double v = s / static_cast<double>(m);
            cov(a, b) = v;
            cov(b, a) = v;
        }
    }
    return cov;
}

EigenResult eigh_symmetric(const Matrix& a, double tol) {
    const std::size_t n = a.rows();
    if (n == 0 || n != a.cols())
        throw ArgumentError("eigh_symmetric: matrix must be square");
    if (n > 64)
        throw ArgumentError("eigh_symmetric: supports at most 64x64");

    const double scale = std::max(1.0, max_abs(a));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol * scale)
                throw ArgumentError("eigh_symmetric: matrix is not symmetric");

    Matrix work = a;
    // Symmetrize exactly so rounding asymmetry within tolerance cannot leak.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (work(i, j) + work(j, i));
            work(i, j) = v;
            work(j, i) = v;
        }

    Matrix v = Matrix::identity(n);
    const double target = 1e-12 * std::max(1.0, frobenius(work));
    constexpr int kMaxSweeps = 100;
    bool converged = offdiag_frobenius(work) <= target;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                jacobi_rotate(work, v, p, q);
        converged = offdiag_frobenius(work) <= target;
    }
    if (!converged)
        throw NumericalError("eigh_symmetric: Jacobi did not converge in 100 sweeps");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return work(x, x) > work(y, y);
    });

    EigenResult result;
    result.eigenvalues.resize(n);
    result.eigenvectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        result.eigenvalues[j] = work(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i)
            result.eigenvectors(i, j) = v(i, order[j]);
    }
    fix_column_signs(result.eigenvectors);

    // Residual check promised to callers.
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            double av = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                av += a(i, k) * result.eigenvectors(k, j);
            const double r = av - result.eigenvalues[j] * result.eigenvectors(i, j);
            if (std::abs(r) > std::max(tol, 1e-10) * scale * 100.0)
                throw NumericalError("eigh_symmetric: residual check failed");
        }
    }
    return result;
}

EigenResult pca_rotation(const Matrix& data) {
    if (data.cols() < 1)
        throw ArgumentError("pca_rotation: need at least one column");
    return eigh_symmetric(covariance(data));
}

Matrix block_diag(const std::vector<Matrix>& blocks) {
    if (blocks.empty())
        throw ArgumentError("block_diag: empty block list");
    std::size_t total = 0;
    for (const Matrix& b : blocks) {
        if (b.rows() != b.cols() || b.rows() == 0)
            throw ArgumentError("block_diag: blocks must be square and non-empty");
        total += b.rows();
    }
    Matrix out(total, total);
    std::size_t offset = 0;
    for (const Matrix& b : blocks) {
        for (std::size_t i = 0; i < b.rows(); ++i)
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(offset + i, offset + j) = b(i, j);
        offset += b.rows();
    }
    return out;
}

Matrix apply_rotation(const Matrix& rotation, const Matrix& data) {
    if (rotation.rows() != rotation.cols())
        throw ArgumentError("apply_rotation: rotation must be square");
    if (data.cols() != rotation.rows())
        throw ArgumentError("apply_rotation: dimension mismatch");
    return matmul(data, rotation);
}

Matrix subsample_rows(const Matrix& data, double fraction, RngStream& rng) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ArgumentError("subsample_rows: fraction must be in (0,1]");
    const std::size_t n = data.rows();
    const std::size_t k = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(n)));
    if (k < 2)
        throw ArgumentError("subsample_rows: selection must keep at least 2 rows");

    // Partial Fisher-Yates, then restore original relative order.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.next_below(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());

    Matrix out(k, data.cols());
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < data.cols(); ++j)
            out(i, j) = data(idx[i], j);
    return out;
}

} // namespace tsad
