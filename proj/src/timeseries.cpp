#include "tsad/timeseries.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "tsad/errors.hpp"

namespace tsad {

namespace {

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

} // namespace

void TimeSeries::validate() const {
    const std::size_t count = n();
    if (count < 1)
        throw DataError("time series is empty");
    if (dim() < 2)
        throw DataError("time series needs at least 2 features");
    if (timestamps.size() != count)
        throw DataError("timestamp count does not match row count");
    if (!labels.empty()) {
        if (labels.size() != count)
            throw DataError("label count does not match row count");
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] > 1)
                throw DataError("label at row " + std::to_string(i) +
                                " is not 0/1");
    }
    if (!values.all_finite())
        throw DataError("time series contains non-finite values");
    if (!feature_names.empty() && feature_names.size() != dim())
        throw DataError("feature name count does not match dimension");

    // Numeric comparison when every timestamp is a number, lexicographic
    // otherwise.
    std::vector<double> numeric(count);
    bool all_numeric = true;
    for (std::size_t i = 0; i < count && all_numeric; ++i)
        all_numeric = parse_double(timestamps[i], numeric[i]);
    for (std::size_t i = 1; i < count; ++i) {
        const bool increasing = all_numeric ? numeric[i - 1] < numeric[i]
                                            : timestamps[i - 1] < timestamps[i];
        if (!increasing)
            throw DataError("timestamps not strictly increasing at row " +
                            std::to_string(i));
    }
}

Standardizer standardize_fit(const Matrix& train_rows) {
    const std::size_t m = train_rows.rows();
    const std::size_t d = train_rows.cols();
    if (m < 2)
        throw ArgumentError("standardize_fit: need at least 2 rows");

    Standardizer s;
    s.means.assign(d, 0.0);
    s.stds.assign(d, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j)
            s.means[j] += train_rows(i, j);
    for (double& v : s.means)
        v /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = train_rows(i, j) - s.means[j];
            s.stds[j] += c * c;
        }
    for (double& v : s.stds) {
        v = std::sqrt(v / static_cast<double>(m));
        if (v == 0.0)
            v = 1.0; // constant feature: center only
    }
    return s;
}

Matrix standardize_apply(const Standardizer& s, const Matrix& data) {
    if (data.cols() != s.dim())
        throw ArgumentError("standardize_apply: dimension mismatch");
    Matrix out(data.rows(), data.cols());
    for (std::size_t i = 0; i < data.rows(); ++i)
        for (std::size_t j = 0; j < data.cols(); ++j)
            out(i, j) = (data(i, j) - s.means[j]) / s.stds[j];
    return out;
}

WindowSet make_windows(const Matrix& values, std::size_t window_length,
                       std::size_t stride) {
    const std::size_t n = values.rows();
    const std::size_t d = values.cols();
    if (window_length == 0 || stride == 0)
        throw ArgumentError("make_windows: window length and stride must be positive");
    if (n < window_length)
        throw ArgumentError("make_windows: series shorter than window");

    const std::size_t m = (n - window_length) / stride + 1;
    WindowSet ws;
    ws.window_length = window_length;
    ws.stride = stride;
    ws.feature_dim = d;
    ws.windows = Matrix(m, window_length * d);
    ws.end_indices.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t start = i * stride;
        for (std::size_t t = 0; t < window_length; ++t)
            for (std::size_t j = 0; j < d; ++j)
                ws.windows(i, t * d + j) = values(start + t, j);
        ws.end_indices[i] = start + window_length - 1;
    }
    return ws;
}

DatasetSplit split_series(std::size_t n, const std::vector<double>& fractions,
                          std::size_t min_part_size) {
    if (fractions.empty())
        throw ArgumentError("split_series: no fractions given");
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0))
            throw ArgumentError("split_series: fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ArgumentError("split_series: fractions must sum to 1");

    DatasetSplit split;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        std::size_t size;
        if (i + 1 == fractions.size()) {
            size = n - begin; // last part absorbs the remainder
        } else {
            // +1e-9 guards against fraction*n landing just below an integer.
            size = static_cast<std::size_t>(
                std::floor(fractions[i] * static_cast<double>(n) + 1e-9));
            size = std::min(size, n - begin);
        }
        if (size < min_part_size)
            throw ArgumentError("split_series: part " + std::to_string(i) +
                                " has " + std::to_string(size) +
                                " points, need at least " +
                                std::to_string(min_part_size));
        split.parts.push_back({begin, begin + size});
        begin += size;
    }
    return split;
}

} // namespace tsad
