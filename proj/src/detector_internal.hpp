#ifndef TSAD_DETECTOR_INTERNAL_HPP
#define TSAD_DETECTOR_INTERNAL_HPP

#include <memory>
#include <span>
#include <vector>

#include "tsad/detectors.hpp"
#include "tsad/matrix.hpp"
#include "tsad/rng.hpp"

namespace tsad::detail {

// Differentiable training objective over a flat parameter vector. Batches
// are row-major matrices of flattened windows (one window per row).
class BatchLoss {
public:
    virtual ~BatchLoss() = default;

    virtual std::size_t param_count() const = 0;
    virtual void init_params(std::span<double> params, RngStream& rng) const = 0;
    virtual double loss(std::span<const double> params, const Matrix& batch) const = 0;
    // Fills grad (length param_count) and returns the batch loss.
    virtual double loss_grad(std::span<const double> params, const Matrix& batch,
                             std::span<double> grad) const = 0;
    // Per-row anomaly scores (mean squared error of the row's targets).
    virtual void score(std::span<const double> params, const Matrix& batch,
                       std::span<double> out) const = 0;
};

// Mirrored fully connected autoencoder on flattened windows: tanh hidden
// layers, linear output, loss = mean over batch entries of squared
// reconstruction error.
class DenseAeLoss final : public BatchLoss {
public:
    explicit DenseAeLoss(std::vector<std::size_t> layers);

    std::size_t param_count() const override;
    void init_params(std::span<double> params, RngStream& rng) const override;
    double loss(std::span<const double> params, const Matrix& batch) const override;
    double loss_grad(std::span<const double> params, const Matrix& batch,
                     std::span<double> grad) const override;
    void score(std::span<const double> params, const Matrix& batch,
               std::span<double> out) const override;

    const std::vector<std::size_t>& layers() const { return layers_; }

private:
    std::vector<std::size_t> layers_;
};

// Single-layer LSTM predicting each step from its predecessors; loss = mean
// squared one-step-ahead error over steps 2..W of every window.
class LstmLoss final : public BatchLoss {
public:
    LstmLoss(std::size_t input_dim, std::size_t hidden_dim, std::size_t window_length);

    std::size_t param_count() const override;
    void init_params(std::span<double> params, RngStream& rng) const override;
    double loss(std::span<const double> params, const Matrix& batch) const override;
    double loss_grad(std::span<const double> params, const Matrix& batch,
                     std::span<double> grad) const override;
    void score(std::span<const double> params, const Matrix& batch,
               std::span<double> out) const override;

private:
    std::size_t q_;
    std::size_t h_;
    std::size_t w_;
};

// Expands the spec into concrete mirrored layer sizes for input width p.
std::vector<std::size_t> dense_ae_layers(const DetectorSpec& spec, std::size_t p);

std::unique_ptr<BatchLoss> make_loss(const DetectorSpec& spec, std::size_t feature_dim,
                                     std::size_t window_length);

// Adam loop with per-epoch reshuffling; throws NumericalError naming the
// epoch and batch if the loss or a gradient turns non-finite.
std::vector<double> adam_train(const BatchLoss& loss, const Matrix& windows,
                               const TrainingConfig& cfg);

TrainedDetector fit_linear_pca(const DetectorSpec& spec, const WindowSet& windows);
std::vector<double> score_linear_pca(const TrainedDetector& model, const WindowSet& windows);

} // namespace tsad::detail

#endif
