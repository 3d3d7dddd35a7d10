#ifndef TSAD_DETECTORS_HPP
#define TSAD_DETECTORS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tsad/timeseries.hpp"

namespace tsad {

enum class DetectorKind : std::uint8_t {
    DenseAutoencoder = 0,
    LinearPca = 1,
    LstmForecaster = 2,
};

std::string detector_kind_name(DetectorKind kind);
DetectorKind detector_kind_from_name(const std::string& name);

// Hyperparameters for one base detector.
//   dense_autoencoder: ae_hidden lists the encoder's hidden sizes; the
//     decoder mirrors them. Empty means {ceil(p/2), max(2, ceil(p/4))} for
//     flattened window size p.
//   lstm_forecaster: lstm_hidden units, linear readout.
//   linear_pca: pca_components retained (0 means ceil(q/2) for feature
//     dimension q).
struct DetectorSpec {
    DetectorKind kind = DetectorKind::DenseAutoencoder;
    std::vector<std::size_t> ae_hidden;
    std::size_t lstm_hidden = 32;
    std::size_t pca_components = 0;

    void validate() const;
};

struct TrainingConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

// A fitted detector. `weights` is the flat parameter vector; `dims` pins its
// layout per kind:
//   dense_autoencoder: dims = layer sizes [d0..dL]; weights = for each layer
//     W_l (d_{l-1}×d_l row-major) then bias_l (d_l).
//   lstm_forecaster: dims = {q, h}; weights = Wx_i,Wx_f,Wx_g,Wx_o (h×q),
//     Wh_i,Wh_f,Wh_g,Wh_o (h×h), b_i,b_f,b_g,b_o (h), Wy (q×h), by (q).
//   linear_pca: dims = {q, r}; weights = mean (q), components (q×r, column
//     j is principal direction j).
struct TrainedDetector {
    static constexpr std::uint32_t kLayoutVersion = 1;

    DetectorSpec spec;
    std::size_t input_dim = 0;     // feature dimension q seen per time step
    std::size_t window_length = 0; // W
    std::vector<std::size_t> dims;
    std::vector<double> weights;
};

// Trains a detector on the given windows (at least 8). Reconstruction kinds
// minimize mean squared error of the flattened window; the forecaster
// minimizes mean squared one-step-ahead prediction error via
// backpropagation through time. Bit-reproducible for a fixed cfg.seed.
TrainedDetector fit_detector(const DetectorSpec& spec, const WindowSet& windows,
                             const TrainingConfig& cfg);

// One nonnegative score per window; higher is more anomalous.
std::vector<double> score_windows(const TrainedDetector& model,
                                  const WindowSet& windows);

// Compares the analytic training gradient against central finite
// differences (step 1e-5) on a tiny fixture (≤ 200 parameters); returns the
// max over parameters of |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|).
double gradient_check(const DetectorSpec& spec, const WindowSet& fixture,
                      std::uint64_t seed);

} // namespace tsad

#endif
