#ifndef TSAD_ENSEMBLE_HPP
#define TSAD_ENSEMBLE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsad/detectors.hpp"
#include "tsad/linalg.hpp"
#include "tsad/rng.hpp"
#include "tsad/timeseries.hpp"

namespace tsad {

// Ensemble construction methods. `plain` is the single-detector baseline on
// all features; `fb` trains each member on a random feature subset; `fbr`
// additionally rotates each member's subset by per-partition PCA bases;
// `stacked` replaces majority voting over fbr members with a logistic
// regressor fitted on labeled scores.
enum class Method : std::uint8_t {
    Plain = 0,
    FeatureBagging = 1,
    NestedRotations = 2,
    Stacked = 3,
};

std::string method_name(Method method);
Method method_from_name(const std::string& name);

enum class ThresholdMode : std::uint8_t {
    // The literal spread rule delta = 1.5*(Q3-Q1); falls back to Q3 when the
    // IQR is zero. Mis-fires when scores have a large median, hence the
    // alternative below.
    PaperIqr = 0,
    // Tukey fence delta = Q3 + 1.5*(Q3-Q1).
    Tukey = 1,
};

std::string threshold_mode_name(ThresholdMode mode);
ThresholdMode threshold_mode_from_name(const std::string& name);

struct EnsembleConfig {
    std::size_t members = 17;
    std::size_t partitions = 2;
    double subsample_fraction = 0.75;
    Method method = Method::NestedRotations;
    std::vector<DetectorSpec> detector_specs{DetectorSpec{}};
    ThresholdMode threshold_mode = ThresholdMode::PaperIqr;
    std::size_t window_length = 32;
    TrainingConfig training; // training.seed is overridden per member
    std::uint64_t seed = 0;

    // Throws ArgumentError; method must be plain/fb/fbr here (stacking is
    // layered on top of fitted members).
    void validate() const;
};

struct EnsembleMember {
    std::vector<std::size_t> feature_subset; // global ids, partition-contiguous
    NestedRotation rotation;                 // identity (no blocks) for plain/fb
    Standardizer standardizer;
    TrainedDetector detector;
    double threshold = 0.0;
};

// Per-point member outputs on an evaluation slice.
struct ScoreMatrix {
    Matrix scores;                    // n_eval x M continuous scores
    std::vector<std::uint8_t> binary; // row-major n_eval x M, score > delta

    std::size_t points() const { return scores.rows(); }
    std::size_t members() const { return scores.cols(); }
    std::uint8_t binary_at(std::size_t t, std::size_t i) const {
        return binary[t * members() + i];
    }
};

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
};

struct StackedModel {
    std::vector<EnsembleMember> members;
    LogisticModel logistic;
    Standardizer score_stats; // per-member score standardization from part B
};

struct StackingDataset {
    Matrix features; // |B| x M standardized member scores
    std::vector<std::uint8_t> targets;
    Standardizer score_stats;
};

struct StackedPrediction {
    std::vector<double> probabilities;
    std::vector<std::uint8_t> binary; // probability > 0.5
};

// Subset size drawn uniformly from {floor(d/2), ..., d-1}; that many
// distinct feature indices drawn without repetition; returned sorted.
std::vector<std::size_t> sample_feature_subset(std::size_t d, RngStream& rng);

// Randomly permutes `subset` and cuts it into k groups whose sizes differ by
// at most one (the first |subset| mod k groups take the extra element).
std::vector<std::vector<std::size_t>> partition_features(
    const std::vector<std::size_t>& subset, std::size_t k, RngStream& rng);

// Linear-interpolation quantile threshold over training scores (>= 4).
double fit_threshold(const std::vector<double>& train_scores, ThresholdMode mode);

// 1 iff score > delta (strict).
std::vector<std::uint8_t> binarize(const std::vector<double>& scores, double delta);

// 1 iff strictly more than half the votes are 1; ties count as normal.
std::uint8_t majority_vote(std::span<const std::uint8_t> votes);

// Builds member `member_index`: standardize-fit on the training rows, draw
// the feature subset (fb/fbr), for fbr fit one PCA rotation per partition on
// an independent 75%-style row subsample and apply the assembled
// block-diagonal rotation to all rows, then window, fit the detector, and
// fit the threshold on the training-window scores. All randomness comes
// from streams derived from (cfg.seed, member_index).
EnsembleMember build_member(const Matrix& train, const EnsembleConfig& cfg,
                            std::size_t member_index);

// cfg.members members built round-robin over cfg.detector_specs. The
// parallel variant distributes members across threads and is bit-identical
// to fit_ensemble_serial for any thread count.
std::vector<EnsembleMember> fit_ensemble(const Matrix& train,
                                         const EnsembleConfig& cfg);
std::vector<EnsembleMember> fit_ensemble_serial(const Matrix& train,
                                                const EnsembleConfig& cfg);

// Per-member continuous scores and binary verdicts on evaluation rows. A
// point's score is the score of the window ending at it; points before the
// first full window inherit window 0's score.
ScoreMatrix score_points(const std::vector<EnsembleMember>& members,
                         const Matrix& eval_data);

// Contiguous halves of a training range: A for member fitting, B for the
// regressor, so the regressor never sees data the members trained on.
// Requires at least 2*(window_length+8) points.
std::pair<IndexRange, IndexRange> split_ab(const IndexRange& train,
                                           std::size_t window_length);

// Continuous member scores on part B, standardized per member (stats kept
// for inference), paired with B's labels.
StackingDataset build_stacking_dataset(const std::vector<EnsembleMember>& members,
                                       const Matrix& b_data,
                                       const std::vector<std::uint8_t>& b_labels);

// L2-regularized logistic regression by gradient descent with backtracking
// line search, zero-initialized; stops when the gradient norm reaches `tol`
// or after max_iter steps. The bias is not regularized.
LogisticModel fit_logistic(const Matrix& features,
                           const std::vector<std::uint8_t>& targets, double l2,
                           std::size_t max_iter, double tol);

StackedPrediction predict_stacked(const StackedModel& model,
                                  const Matrix& eval_data);

} // namespace tsad

#endif
