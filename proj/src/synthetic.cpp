#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "tsad/errors.hpp"
#include "tsad/rng.hpp"
#include "tsad/timeseries.hpp"

namespace tsad {

namespace {

constexpr double kAr1Phi = 0.9;
// Exactly three bursts, one per third of the series: every contiguous half or
// third then contains a whole burst, so evaluation splits always see both
// label classes. Few long bursts (collective anomalies) rather than many short
// ones keeps segments comparable to typical window lengths; windows trailing a
// segment shorter than themselves outscore the segment's own early points and
// cap the achievable ranking quality.
constexpr std::size_t kBurstCount = 3;

// Burst layout: lengths summing to exactly `total`, one burst per stratum.
// Falls back to fewer bursts when a burst would not fit its stratum.
struct BurstPlan {
    std::vector<std::size_t> starts;
    std::vector<std::size_t> lengths;
};

BurstPlan plan_bursts(std::size_t n, std::size_t total, RngStream& rng) {
    std::size_t bursts = std::max<std::size_t>(1, std::min(total, kBurstCount));
    for (;; --bursts) {
        bool fits = true;
        for (std::size_t b = 0; b < bursts; ++b) {
            const std::size_t len = total / bursts + (b < total % bursts ? 1 : 0);
            const std::size_t begin = b * n / bursts;
            const std::size_t end = (b + 1) * n / bursts;
            if (len > end - begin) {
                fits = false;
                break;
            }
        }
        if (fits || bursts == 1)
            break;
    }

    BurstPlan plan;
    for (std::size_t b = 0; b < bursts; ++b) {
        const std::size_t len = total / bursts + (b < total % bursts ? 1 : 0);
        const std::size_t begin = b * n / bursts;
        const std::size_t end = (b + 1) * n / bursts;
        const std::size_t slack = end - begin - len;
        plan.starts.push_back(begin + rng.next_below(slack + 1));
        plan.lengths.push_back(len);
    }
    return plan;
}

} // namespace

TimeSeries generate_synthetic(std::size_t n, std::size_t d,
                              double anomaly_fraction,
                              std::size_t affected_features,
                              double shift_sigmas, std::uint64_t seed) {
    if (!(anomaly_fraction > 0.0) || !(anomaly_fraction < 1.0))
        throw ArgumentError("generate_synthetic: anomaly_fraction must be in (0,1)");
    if (d < 2)
        throw ArgumentError("generate_synthetic: need at least 2 features");
    if (n < 10 * d)
        throw ArgumentError("generate_synthetic: need n >= 10*d");
    if (affected_features < 1 || affected_features > d)
        throw ArgumentError("generate_synthetic: affected_features must be in [1, d]");

    RngStream root = RngStream(seed).child(stream_tag(StreamTag::Synthetic));

    TimeSeries ts;
    ts.id = "synthetic-" + std::to_string(seed);
    ts.values = Matrix(n, d);
    ts.labels.assign(n, 0);
    ts.timestamps.resize(n);
    for (std::size_t t = 0; t < n; ++t)
        ts.timestamps[t] = std::to_string(t);
    ts.feature_names.resize(d);

    // Base signal, one stream per feature so the layout is independent of
    // iteration order.
    std::vector<double> base_std(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        ts.feature_names[j] = "f" + std::to_string(j);
        RngStream fs = root.child(100 + j);
        const double offset = -5.0 + 10.0 * fs.next_double();
        const double scale = 0.5 + 1.5 * fs.next_double();
        double z = fs.next_normal();
        for (std::size_t t = 0; t < n; ++t) {
            ts.values(t, j) = offset + scale * z;
            z = kAr1Phi * z + fs.next_normal();
        }
        double mean = 0.0;
        for (std::size_t t = 0; t < n; ++t)
            mean += ts.values(t, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double c = ts.values(t, j) - mean;
            var += c * c;
        }
        base_std[j] = std::sqrt(var / static_cast<double>(n));
    }

    // Exact anomaly count; the small slack absorbs representation error in
    // fraction * n.
    const std::size_t anomaly_count = static_cast<std::size_t>(
        std::ceil(anomaly_fraction * static_cast<double>(n) - 1e-9));

    RngStream placement = root.child(1);
    const BurstPlan plan = plan_bursts(n, anomaly_count, placement);

    RngStream feature_pick = root.child(2);
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    for (std::size_t i = 0; i < affected_features; ++i) {
        const std::size_t j = i + feature_pick.next_below(d - i);
        std::swap(features[i], features[j]);
    }
    features.resize(affected_features);
    std::sort(features.begin(), features.end());

    for (std::size_t b = 0; b < plan.starts.size(); ++b) {
        for (std::size_t t = plan.starts[b]; t < plan.starts[b] + plan.lengths[b]; ++t) {
            ts.labels[t] = 1;
            for (std::size_t j : features)
                ts.values(t, j) += shift_sigmas * base_std[j];
        }
    }

    ts.validate();
    return ts;
}

} // namespace tsad
