#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "detector_internal.hpp"
#include "tsad/errors.hpp"

namespace tsad::detail {

namespace {

// out (B x n) = a (B x m) * w (m x n, row major) + bias (n)
void affine(const Matrix& a, std::span<const double> w, std::span<const double> bias,
            Matrix& out) {
    const std::size_t b = a.rows(), m = a.cols(), n = bias.size();
    out = Matrix(b, n);
    for (std::size_t r = 0; r < b; ++r) {
        const auto ar = a.row(r);
        const auto orow = out.row(r);
        for (std::size_t j = 0; j < n; ++j) orow[j] = bias[j];
        for (std::size_t i = 0; i < m; ++i) {
            const double v = ar[i];
            const auto wrow = w.subspan(i * n, n);
            for (std::size_t j = 0; j < n; ++j) orow[j] += v * wrow[j];
        }
    }
}

void tanh_inplace(Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (double& v : m.row(r)) v = std::tanh(v);
}

} // namespace

DenseAeLoss::DenseAeLoss(std::vector<std::size_t> layers) : layers_(std::move(layers)) {
    if (layers_.size() < 3)
        throw ArgumentError("autoencoder needs at least one hidden layer");
    if (layers_.front() != layers_.back())
        throw ArgumentError("autoencoder output width must equal input width");
    for (std::size_t d : layers_)
        if (d == 0) throw ArgumentError("autoencoder layer width must be positive");
}

std::size_t DenseAeLoss::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 1; l < layers_.size(); ++l)
        n += layers_[l - 1] * layers_[l] + layers_[l];
    return n;
}

void DenseAeLoss::init_params(std::span<double> params, RngStream& rng) const {
    if (params.size() != param_count())
        throw ArgumentError("parameter buffer size mismatch");
    std::size_t off = 0;
    for (std::size_t l = 1; l < layers_.size(); ++l) {
        const std::size_t fan_in = layers_[l - 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < fan_in * layers_[l]; ++i)
            params[off++] = (2.0 * rng.next_double() - 1.0) * bound;
        for (std::size_t j = 0; j < layers_[l]; ++j) params[off++] = 0.0;
    }
}

namespace {

struct LayerView {
    std::span<const double> w;
    std::span<const double> b;
};

std::vector<LayerView> view_params(const std::vector<std::size_t>& layers,
                                   std::span<const double> params) {
    std::vector<LayerView> views;
    std::size_t off = 0;
    for (std::size_t l = 1; l < layers.size(); ++l) {
        const std::size_t wn = layers[l - 1] * layers[l];
        views.push_back({params.subspan(off, wn), params.subspan(off + wn, layers[l])});
        off += wn + layers[l];
    }
    return views;
}

// acts[0] = batch, acts[l] = activation after layer l (tanh except last).
void forward(const std::vector<std::size_t>& layers, std::span<const double> params,
             const Matrix& batch, std::vector<Matrix>& acts) {
    const auto views = view_params(layers, params);
    acts.assign(layers.size(), Matrix());
    acts[0] = batch;
    for (std::size_t l = 1; l < layers.size(); ++l) {
        affine(acts[l - 1], views[l - 1].w, views[l - 1].b, acts[l]);
        if (l + 1 < layers.size()) tanh_inplace(acts[l]);
    }
}

double mse_total(const Matrix& out, const Matrix& target) {
    double s = 0.0;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        const auto o = out.row(r);
        const auto t = target.row(r);
        for (std::size_t j = 0; j < out.cols(); ++j) {
            const double d = o[j] - t[j];
            s += d * d;
        }
    }
    return s;
}

} // namespace

double DenseAeLoss::loss(std::span<const double> params, const Matrix& batch) const {
    if (batch.cols() != layers_.front())
        throw ArgumentError("batch width does not match autoencoder input");
    std::vector<Matrix> acts;
    forward(layers_, params, batch, acts);
    const double denom = static_cast<double>(batch.rows() * batch.cols());
    return mse_total(acts.back(), batch) / denom;
}

double DenseAeLoss::loss_grad(std::span<const double> params, const Matrix& batch,
                              std::span<double> grad) const {
    if (batch.cols() != layers_.front())
        throw ArgumentError("batch width does not match autoencoder input");
    if (grad.size() != param_count())
        throw ArgumentError("gradient buffer size mismatch");

    std::vector<Matrix> acts;
    forward(layers_, params, batch, acts);
    const auto views = view_params(layers_, params);
    const std::size_t b = batch.rows();
    const double denom = static_cast<double>(b * batch.cols());
    const double value = mse_total(acts.back(), batch) / denom;

    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<std::size_t> offsets(layers_.size(), 0);
    {
        std::size_t off = 0;
        for (std::size_t l = 1; l < layers_.size(); ++l) {
            offsets[l] = off;
            off += layers_[l - 1] * layers_[l] + layers_[l];
        }
    }

    // delta = dLoss/dZ_l, starting at the linear output layer.
    Matrix delta(b, layers_.back());
    for (std::size_t r = 0; r < b; ++r)
        for (std::size_t j = 0; j < layers_.back(); ++j)
            delta(r, j) = 2.0 * (acts.back()(r, j) - batch(r, j)) / denom;

    for (std::size_t l = layers_.size() - 1; l >= 1; --l) {
        const std::size_t m = layers_[l - 1], n = layers_[l];
        auto dw = grad.subspan(offsets[l], m * n);
        auto db = grad.subspan(offsets[l] + m * n, n);
        const Matrix& prev = acts[l - 1];
        for (std::size_t r = 0; r < b; ++r) {
            const auto pr = prev.row(r);
            const auto dr = delta.row(r);
            for (std::size_t i = 0; i < m; ++i) {
                const double v = pr[i];
                auto dwr = dw.subspan(i * n, n);
                for (std::size_t j = 0; j < n; ++j) dwr[j] += v * dr[j];
            }
            for (std::size_t j = 0; j < n; ++j) db[j] += dr[j];
        }
        if (l == 1) break;
        Matrix next(b, m);
        const auto w = views[l - 1].w;
        for (std::size_t r = 0; r < b; ++r) {
            const auto dr = delta.row(r);
            const auto pr = prev.row(r);
            const auto nr = next.row(r);
            for (std::size_t i = 0; i < m; ++i) {
                double s = 0.0;
                const auto wrow = w.subspan(i * n, n);
                for (std::size_t j = 0; j < n; ++j) s += dr[j] * wrow[j];
                nr[i] = s * (1.0 - pr[i] * pr[i]); // through tanh
            }
        }
        delta = std::move(next);
    }
    return value;
}

void DenseAeLoss::score(std::span<const double> params, const Matrix& batch,
                        std::span<double> out) const {
    if (batch.cols() != layers_.front())
        throw ArgumentError("batch width does not match autoencoder input");
    if (out.size() != batch.rows())
        throw ArgumentError("score buffer size mismatch");
    std::vector<Matrix> acts;
    forward(layers_, params, batch, acts);
    const Matrix& rec = acts.back();
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < batch.cols(); ++j) {
            const double d = rec(r, j) - batch(r, j);
            s += d * d;
        }
        out[r] = s / static_cast<double>(batch.cols());
    }
}

std::vector<std::size_t> dense_ae_layers(const DetectorSpec& spec, std::size_t p) {
    if (p == 0) throw ArgumentError("autoencoder input width must be positive");
    std::vector<std::size_t> hidden = spec.ae_hidden;
    if (hidden.empty()) {
        hidden = {(p + 1) / 2, std::max<std::size_t>(2, (p + 3) / 4)};
    }
    std::vector<std::size_t> layers;
    layers.push_back(p);
    layers.insert(layers.end(), hidden.begin(), hidden.end());
    for (std::size_t i = hidden.size() - 1; i-- > 0;) layers.push_back(hidden[i]);
    layers.push_back(p);
    return layers;
}

} // namespace tsad::detail
