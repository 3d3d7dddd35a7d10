#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "detector_internal.hpp"
#include "tsad/errors.hpp"

namespace tsad {

std::string detector_kind_name(DetectorKind kind) {
    switch (kind) {
    case DetectorKind::DenseAutoencoder: return "dense_autoencoder";
    case DetectorKind::LinearPca: return "linear_pca";
    case DetectorKind::LstmForecaster: return "lstm_forecaster";
    }
    throw ArgumentError("unknown detector kind");
}

DetectorKind detector_kind_from_name(const std::string& name) {
    if (name == "dense_autoencoder") return DetectorKind::DenseAutoencoder;
    if (name == "linear_pca") return DetectorKind::LinearPca;
    if (name == "lstm_forecaster") return DetectorKind::LstmForecaster;
    throw ArgumentError("unknown detector kind: " + name);
}

void DetectorSpec::validate() const {
    switch (kind) {
    case DetectorKind::DenseAutoencoder:
    case DetectorKind::LinearPca:
    case DetectorKind::LstmForecaster:
        break;
    default:
        throw ArgumentError("unknown detector kind");
    }
    for (std::size_t h : ae_hidden)
        if (h == 0) throw ArgumentError("autoencoder hidden width must be positive");
    if (lstm_hidden == 0)
        throw ArgumentError("forecaster hidden width must be positive");
}

void TrainingConfig::validate() const {
    if (epochs == 0) throw ArgumentError("epochs must be positive");
    if (batch_size == 0) throw ArgumentError("batch size must be positive");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0))
        throw ArgumentError("adam beta1 must lie in [0,1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ArgumentError("adam beta2 must lie in [0,1)");
    if (!(adam_eps > 0.0)) throw ArgumentError("adam epsilon must be positive");
}

namespace detail {

std::unique_ptr<BatchLoss> make_loss(const DetectorSpec& spec, std::size_t feature_dim,
                                     std::size_t window_length) {
    switch (spec.kind) {
    case DetectorKind::DenseAutoencoder:
        return std::make_unique<DenseAeLoss>(
            dense_ae_layers(spec, feature_dim * window_length));
    case DetectorKind::LstmForecaster:
        return std::make_unique<LstmLoss>(feature_dim, spec.lstm_hidden, window_length);
    case DetectorKind::LinearPca:
        throw ArgumentError("linear_pca is closed form and has no training loss");
    }
    throw ArgumentError("unknown detector kind");
}

namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
}

} // namespace

std::vector<double> adam_train(const BatchLoss& loss, const Matrix& windows,
                               const TrainingConfig& cfg) {
    cfg.validate();
    const std::size_t n = windows.rows();
    if (n == 0) throw ArgumentError("no training windows");

    const std::size_t np = loss.param_count();
    std::vector<double> params(np);
    RngStream init_rng =
        RngStream(cfg.seed).child(stream_tag(StreamTag::DetectorInit));
    loss.init_params(params, init_rng);

    std::vector<double> m(np, 0.0), v(np, 0.0), grad(np);
    std::vector<std::size_t> order(n);
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        RngStream shuffle =
            RngStream(cfg.seed).child(stream_tag(StreamTag::BatchShuffle, epoch));
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(order[i], order[shuffle.next_below(i + 1)]);

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t bsize = std::min(cfg.batch_size, n - start);
            Matrix batch(bsize, windows.cols());
            for (std::size_t r = 0; r < bsize; ++r) {
                const auto src = windows.row(order[start + r]);
                std::copy(src.begin(), src.end(), batch.row(r).begin());
            }
            const double value = loss.loss_grad(params, batch, grad);
            if (!std::isfinite(value) || !all_finite(grad))
                throw NumericalError(
                    "non-finite loss at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(start / cfg.batch_size));
            ++step;
            const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < np; ++i) {
                m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
                v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
                params[i] -= cfg.learning_rate * (m[i] / bc1) /
                             (std::sqrt(v[i] / bc2) + cfg.adam_eps);
            }
        }
    }
    return params;
}

} // namespace detail

TrainedDetector fit_detector(const DetectorSpec& spec, const WindowSet& windows,
                             const TrainingConfig& cfg) {
    spec.validate();
    cfg.validate();
    if (windows.count() < 8)
        throw ArgumentError("need at least 8 training windows");
    if (windows.feature_dim == 0 || windows.window_length == 0)
        throw ArgumentError("windows have empty shape");
    if (!windows.windows.all_finite())
        throw ArgumentError("training windows contain non-finite values");

    if (spec.kind == DetectorKind::LinearPca)
        return detail::fit_linear_pca(spec, windows);

    const auto loss = detail::make_loss(spec, windows.feature_dim, windows.window_length);
    TrainedDetector model;
    model.spec = spec;
    model.input_dim = windows.feature_dim;
    model.window_length = windows.window_length;
    if (spec.kind == DetectorKind::DenseAutoencoder)
        model.dims = static_cast<const detail::DenseAeLoss&>(*loss).layers();
    else
        model.dims = {windows.feature_dim, spec.lstm_hidden};
    model.weights = detail::adam_train(*loss, windows.windows, cfg);
    return model;
}

std::vector<double> score_windows(const TrainedDetector& model,
                                  const WindowSet& windows) {
    if (model.window_length != windows.window_length ||
        model.input_dim != windows.feature_dim)
        throw ArgumentError("window shape does not match the trained detector");
    if (model.spec.kind == DetectorKind::LinearPca)
        return detail::score_linear_pca(model, windows);

    const auto loss =
        detail::make_loss(model.spec, model.input_dim, model.window_length);
    if (model.weights.size() != loss->param_count())
        throw ArgumentError("model weight layout mismatch");
    std::vector<double> scores(windows.count());
    loss->score(model.weights, windows.windows, scores);
    return scores;
}

double gradient_check(const DetectorSpec& spec, const WindowSet& fixture,
                      std::uint64_t seed) {
    spec.validate();
    if (spec.kind == DetectorKind::LinearPca)
        throw ArgumentError("gradient check applies to gradient-trained detectors");
    const auto loss =
        detail::make_loss(spec, fixture.feature_dim, fixture.window_length);
    if (loss->param_count() > 200)
        throw ArgumentError("gradient check fixture exceeds 200 parameters");

    std::vector<double> params(loss->param_count());
    RngStream init_rng = RngStream(seed).child(stream_tag(StreamTag::DetectorInit));
    loss->init_params(params, init_rng);

    std::vector<double> grad(params.size());
    loss->loss_grad(params, fixture.windows, grad);

    constexpr double kStep = 1e-5;
    double worst = 0.0;
    std::vector<double> probe = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        probe[i] = params[i] + kStep;
        const double up = loss->loss(probe, fixture.windows);
        probe[i] = params[i] - kStep;
        const double down = loss->loss(probe, fixture.windows);
        probe[i] = params[i];
        const double fd = (up - down) / (2.0 * kStep);
        const double rel = std::abs(grad[i] - fd) /
                           std::max(1e-8, std::abs(grad[i]) + std::abs(fd));
        worst = std::max(worst, rel);
    }
    return worst;
}

} // namespace tsad
