#include <cmath>
#include <span>
#include <vector>

#include "detector_internal.hpp"
#include "tsad/errors.hpp"
#include "tsad/linalg.hpp"

namespace tsad::detail {

namespace {

// Every time step of every window, stacked as rows of a (m*W) x q matrix.
Matrix stack_window_rows(const WindowSet& windows) {
    const std::size_t q = windows.feature_dim;
    const std::size_t w = windows.window_length;
    Matrix rows(windows.count() * w, q);
    for (std::size_t i = 0; i < windows.count(); ++i) {
        const auto flat = windows.windows.row(i);
        for (std::size_t t = 0; t < w; ++t)
            for (std::size_t j = 0; j < q; ++j)
                rows(i * w + t, j) = flat[t * q + j];
    }
    return rows;
}

} // namespace

TrainedDetector fit_linear_pca(const DetectorSpec& spec, const WindowSet& windows) {
    const std::size_t q = windows.feature_dim;
    std::size_t r = spec.pca_components != 0 ? spec.pca_components : (q + 1) / 2;
    if (r > q)
        throw ArgumentError("cannot retain more components than features");

    const Matrix rows = stack_window_rows(windows);
    std::vector<double> mean(q, 0.0);
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        const auto row = rows.row(i);
        for (std::size_t j = 0; j < q; ++j) mean[j] += row[j];
    }
    for (double& v : mean) v /= static_cast<double>(rows.rows());

    const EigenResult eig = pca_rotation(rows);

    TrainedDetector model;
    model.spec = spec;
    model.input_dim = q;
    model.window_length = windows.window_length;
    model.dims = {q, r};
    model.weights = mean;
    model.weights.reserve(q + q * r);
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j < r; ++j)
            model.weights.push_back(eig.eigenvectors(i, j));
    return model;
}

std::vector<double> score_linear_pca(const TrainedDetector& model,
                                     const WindowSet& windows) {
    const std::size_t q = model.dims.at(0);
    const std::size_t r = model.dims.at(1);
    const std::size_t w = model.window_length;
    const std::span<const double> mean(model.weights.data(), q);
    const std::span<const double> comp(model.weights.data() + q, q * r); // q x r

    std::vector<double> scores(windows.count());
    std::vector<double> centered(q), proj(r);
    for (std::size_t i = 0; i < windows.count(); ++i) {
        const auto flat = windows.windows.row(i);
        double total = 0.0;
        for (std::size_t t = 0; t < w; ++t) {
            for (std::size_t j = 0; j < q; ++j)
                centered[j] = flat[t * q + j] - mean[j];
            for (std::size_t k = 0; k < r; ++k) {
                double s = 0.0;
                for (std::size_t j = 0; j < q; ++j)
                    s += centered[j] * comp[j * r + k];
                proj[k] = s;
            }
            for (std::size_t j = 0; j < q; ++j) {
                double rec = 0.0;
                for (std::size_t k = 0; k < r; ++k)
                    rec += proj[k] * comp[j * r + k];
                const double d = centered[j] - rec;
                total += d * d;
            }
        }
        scores[i] = total / static_cast<double>(w * q);
    }
    return scores;
}

} // namespace tsad::detail
