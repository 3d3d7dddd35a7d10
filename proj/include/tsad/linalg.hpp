#ifndef TSAD_LINALG_HPP
#define TSAD_LINALG_HPP

#include <vector>

#include "tsad/matrix.hpp"
#include "tsad/rng.hpp"

namespace tsad {

// Eigendecomposition of a symmetric matrix. Eigenvalues sorted descending
// (stable under ties), eigenvector i in column i. Sign convention: the
// largest-magnitude entry of each column is positive, which makes the
// decomposition bit-reproducible.
struct EigenResult {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;
};

// Population covariance (divide by the row count m): entry (i,j) =
// (1/m) * sum_t (x_ti - mu_i)(x_tj - mu_j). Requires at least 2 rows.
Matrix covariance(const Matrix& data);

// Cyclic Jacobi eigensolver for symmetric matrices up to 64x64. `tol`
// bounds both the symmetry check on input and the verified residual
// |A v - lambda v| <= tol * max(1, max|A|) on output. Sweeps run until the
// off-diagonal Frobenius norm falls below 1e-12 relative to |A|_F, capped
// at 100 sweeps (NumericalError beyond that).
EigenResult eigh_symmetric(const Matrix& a, double tol = 1e-10);

// PCA of `data`: eigendecomposition of its covariance with every component
// retained, so the eigenvector matrix is a square rotation.
EigenResult pca_rotation(const Matrix& data);

// Square blocks placed along the diagonal in order; all other entries are
// exactly zero.
Matrix block_diag(const std::vector<Matrix>& blocks);

// Maps each data row x to x * rotation. rotation must be square with side
// equal to data's column count.
Matrix apply_rotation(const Matrix& rotation, const Matrix& data);

// ceil(fraction * rows) distinct rows drawn uniformly without replacement,
// original relative order preserved. fraction in (0,1]; the selection must
// keep at least 2 rows.
Matrix subsample_rows(const Matrix& data, double fraction, RngStream& rng);

// Per-partition PCA rotations assembled into one block-diagonal transform.
// partition_layout holds the feature positions (local to the owning
// member's column order) covered by each block; the groups are contiguous
// runs so `assembled` is literally block diagonal.
struct NestedRotation {
    std::vector<std::vector<std::size_t>> partition_layout;
    std::vector<Matrix> blocks;
    Matrix assembled;

    bool is_identity() const { return blocks.empty(); }
};

} // namespace tsad

#endif
