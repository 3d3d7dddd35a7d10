#ifndef TSAD_TIMESERIES_HPP
#define TSAD_TIMESERIES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tsad/matrix.hpp"

namespace tsad {

// A multivariate time series: n time points of d features, optionally
// labeled (1 = anomaly). Timestamps are kept verbatim for output; ordering
// is checked numerically when every timestamp parses as a number and
// lexicographically otherwise (ISO datetimes sort correctly either way).
struct TimeSeries {
    std::string id;
    std::vector<std::string> timestamps;
    Matrix values; // n × d
    std::vector<std::uint8_t> labels;
    std::vector<std::string> feature_names;

    std::size_t n() const { return values.rows(); }
    std::size_t dim() const { return values.cols(); }
    bool has_labels() const { return !labels.empty(); }

    // Throws DataError on any invariant violation: n >= 1, d >= 2,
    // strictly increasing timestamps, labels (if present) binary of length n.
    void validate() const;
};

// Per-feature mean/std fitted on training rows only. Constant features get
// std 1 so they standardize to all zeros instead of dividing by zero.
struct Standardizer {
    std::vector<double> means;
    std::vector<double> stds;

    std::size_t dim() const { return means.size(); }
};

Standardizer standardize_fit(const Matrix& train_rows);
Matrix standardize_apply(const Standardizer& s, const Matrix& data);

// Sliding windows over a series' rows. Window i covers source rows
// [i*stride, i*stride + W); its flattened form is time-major (the W rows
// concatenated), and end_indices[i] is the time index of its last row.
struct WindowSet {
    std::size_t window_length = 0;
    std::size_t stride = 0;
    std::size_t feature_dim = 0;
    Matrix windows; // m × (W·d)
    std::vector<std::size_t> end_indices;

    std::size_t count() const { return windows.rows(); }
};

WindowSet make_windows(const Matrix& values, std::size_t window_length,
                       std::size_t stride);

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

// Ordered, contiguous, disjoint parts covering [0, n).
struct DatasetSplit {
    std::vector<IndexRange> parts;
};

// Parts of size floor(fraction_i * n) in order, remainder absorbed by the
// last part. Fractions must be positive and sum to 1 within 1e-9; every
// part must reach min_part_size (pass the window length here).
DatasetSplit split_series(std::size_t n, const std::vector<double>& fractions,
                          std::size_t min_part_size);

// Loads a labeled CSV in the water-circuit benchmark layout: header row,
// timestamp column named `datetime` (falling back to the first column),
// label column `label_col`, optional `changepoint` column (dropped), all
// remaining columns numeric features.
TimeSeries load_skab_csv(const std::string& path, char delimiter = ';',
                         const std::string& label_col = "anomaly");

// Synthetic labeled series: per-feature AR(1) noise with random offset and
// scale, plus ceil(anomaly_fraction*n) anomalous points placed as bursts
// (one per equal stratum of the series, jittered) where `affected_features`
// randomly chosen features are shifted by shift_sigmas times that feature's
// base standard deviation. Deterministic in `seed`.
TimeSeries generate_synthetic(std::size_t n, std::size_t d,
                              double anomaly_fraction,
                              std::size_t affected_features,
                              double shift_sigmas, std::uint64_t seed);

} // namespace tsad

#endif
