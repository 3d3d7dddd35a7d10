#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "tsad/ensemble.hpp"
#include "tsad/errors.hpp"
#include "tsad/rng.hpp"

using namespace tsad;

namespace {

Matrix correlated_series(std::size_t n, std::size_t d, std::uint64_t seed) {
    RngStream rng(seed);
    Matrix m(n, d);
    std::vector<double> state(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double common = rng.next_normal();
        for (std::size_t j = 0; j < d; ++j) {
            state[j] = 0.8 * state[j] + rng.next_normal() + 0.5 * common;
            m(i, j) = state[j] + static_cast<double>(j);
        }
    }
    return m;
}

EnsembleConfig fast_config(Method method, std::uint64_t seed) {
    EnsembleConfig cfg;
    cfg.method = method;
    cfg.members = 4;
    cfg.window_length = 8;
    cfg.seed = seed;
    cfg.training.epochs = 2;
    DetectorSpec pca;
    pca.kind = DetectorKind::LinearPca;
    cfg.detector_specs = {pca};
    return cfg;
}

bool members_equal(const EnsembleMember& a, const EnsembleMember& b) {
    return a.feature_subset == b.feature_subset &&
           a.threshold == b.threshold &&
           a.detector.weights == b.detector.weights &&
           a.detector.dims == b.detector.dims &&
           a.standardizer.means == b.standardizer.means &&
           a.standardizer.stds == b.standardizer.stds &&
           a.rotation.assembled == b.rotation.assembled;
}

} // namespace

TEST_CASE("method and threshold-mode names round-trip") {
    for (auto m : {Method::Plain, Method::FeatureBagging, Method::NestedRotations,
                   Method::Stacked})
        CHECK(method_from_name(method_name(m)) == m);
    CHECK_THROWS_AS(method_from_name("boosted"), ArgumentError);

    for (auto t : {ThresholdMode::PaperIqr, ThresholdMode::Tukey})
        CHECK(threshold_mode_from_name(threshold_mode_name(t)) == t);
    CHECK_THROWS_AS(threshold_mode_from_name("zscore"), ArgumentError);
}

TEST_CASE("ensemble config validation") {
    EnsembleConfig cfg = fast_config(Method::NestedRotations, 1);
    CHECK_NOTHROW(cfg.validate());

    EnsembleConfig bad = cfg;
    bad.members = 0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.partitions = 0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.subsample_fraction = 0.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.subsample_fraction = 1.5;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.method = Method::Stacked; // members are built plain/fb/fbr only
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.detector_specs.clear();
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.window_length = 0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("feature subsets have size in [d/2, d-1] and distinct sorted ids") {
    RngStream rng(3);
    std::set<std::size_t> sizes;
    for (int i = 0; i < 2000; ++i) {
        const auto subset = sample_feature_subset(8, rng);
        CHECK(subset.size() >= 4);
        CHECK(subset.size() <= 7);
        sizes.insert(subset.size());
        CHECK(std::is_sorted(subset.begin(), subset.end()));
        CHECK(std::adjacent_find(subset.begin(), subset.end()) == subset.end());
        CHECK(subset.back() < 8);
    }
    CHECK(sizes == std::set<std::size_t>{4, 5, 6, 7});

    RngStream rng2(4);
    for (int i = 0; i < 20; ++i)
        CHECK(sample_feature_subset(2, rng2).size() == 1);
    CHECK_THROWS_AS(sample_feature_subset(1, rng2), ArgumentError);
}

TEST_CASE("partitions cut the subset into near-equal groups covering it") {
    const std::vector<std::size_t> six{0, 2, 3, 5, 6, 7};
    RngStream rng(5);
    auto groups = partition_features(six, 2, rng);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].size() == 3);
    CHECK(groups[1].size() == 3);

    const std::vector<std::size_t> seven{0, 1, 2, 3, 4, 5, 6};
    auto odd = partition_features(seven, 2, rng);
    CHECK(odd[0].size() == 4); // first groups take the extra element
    CHECK(odd[1].size() == 3);

    auto singletons = partition_features(six, 6, rng);
    CHECK(singletons.size() == 6);
    for (const auto& g : singletons)
        CHECK(g.size() == 1);

    // Union over any k equals the subset.
    for (std::size_t k : {1ul, 2ul, 3ul, 4ul}) {
        auto gs = partition_features(six, k, rng);
        std::vector<std::size_t> all;
        for (const auto& g : gs)
            all.insert(all.end(), g.begin(), g.end());
        std::sort(all.begin(), all.end());
        CHECK(all == six);
    }

    CHECK_THROWS_AS(partition_features(six, 7, rng), ArgumentError);
    CHECK_THROWS_AS(partition_features(six, 0, rng), ArgumentError);
}

TEST_CASE("threshold rules against hand-computed quantiles of 1..100") {
    // Interpolated quartiles of {1..100}: Q1 = 25.75, Q3 = 75.25, both exact
    // in binary, so the thresholds are exact too.
    std::vector<double> scores(100);
    for (std::size_t i = 0; i < 100; ++i)
        scores[i] = static_cast<double>(i + 1);
    // Shuffle to prove ordering does not matter.
    RngStream rng(6);
    for (std::size_t i = scores.size() - 1; i > 0; --i)
        std::swap(scores[i], scores[rng.next_below(i + 1)]);

    CHECK(fit_threshold(scores, ThresholdMode::PaperIqr) == 74.25);  // 1.5*49.5
    CHECK(fit_threshold(scores, ThresholdMode::Tukey) == 149.5);     // 75.25+74.25

    // Constant scores: zero spread falls back to Q3 itself.
    const std::vector<double> flat{3.5, 3.5, 3.5, 3.5, 3.5};
    CHECK(fit_threshold(flat, ThresholdMode::PaperIqr) == 3.5);
    CHECK(fit_threshold(flat, ThresholdMode::Tukey) == 3.5);

    CHECK_THROWS_AS(fit_threshold({1.0, 2.0, 3.0}, ThresholdMode::PaperIqr),
                    ArgumentError);
    CHECK_THROWS_AS(
        fit_threshold({1.0, 2.0, 3.0, std::nan("")}, ThresholdMode::PaperIqr),
        ArgumentError);
}

TEST_CASE("binarize is strict at the threshold") {
    const auto bits = binarize({0.9, 1.0, 1.0000001, 5.0, -2.0}, 1.0);
    CHECK(bits == std::vector<std::uint8_t>{0, 0, 1, 1, 0});
}

TEST_CASE("majority vote agrees with the strict popcount rule up to 15 voters") {
    for (std::size_t size = 1; size <= 15; ++size) {
        for (std::uint32_t mask = 0; mask < (1u << size); ++mask) {
            std::vector<std::uint8_t> votes(size);
            std::size_t ones = 0;
            for (std::size_t i = 0; i < size; ++i) {
                votes[i] = (mask >> i) & 1u;
                ones += votes[i];
            }
            const std::uint8_t want =
                static_cast<double>(ones) > static_cast<double>(size) / 2.0 ? 1 : 0;
            CHECK(majority_vote(votes) == want);
        }
    }
    CHECK_THROWS_AS(majority_vote(std::vector<std::uint8_t>{}), ArgumentError);
}

TEST_CASE("plain members use every feature with no rotation") {
    const Matrix train = correlated_series(120, 6, 7);
    EnsembleConfig cfg = fast_config(Method::Plain, 7);
    const EnsembleMember member = build_member(train, cfg, 0);
    CHECK(member.feature_subset == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
    CHECK(member.rotation.is_identity());
    CHECK(std::isfinite(member.threshold));
    CHECK(member.detector.input_dim == 6);
}

TEST_CASE("feature-bagging members keep a proper subset, still unrotated") {
    const Matrix train = correlated_series(120, 8, 8);
    EnsembleConfig cfg = fast_config(Method::FeatureBagging, 8);
    const EnsembleMember member = build_member(train, cfg, 1);
    CHECK(member.feature_subset.size() >= 4);
    CHECK(member.feature_subset.size() <= 7);
    CHECK(std::is_sorted(member.feature_subset.begin(), member.feature_subset.end()));
    CHECK(member.rotation.is_identity());
    CHECK(member.detector.input_dim == member.feature_subset.size());
}

TEST_CASE("nested-rotation members carry an orthogonal block-diagonal map") {
    const Matrix train = correlated_series(160, 8, 9);
    EnsembleConfig cfg = fast_config(Method::NestedRotations, 9);
    cfg.partitions = 2;

    for (std::size_t index : {0ul, 1ul, 2ul}) {
        const EnsembleMember member = build_member(train, cfg, index);
        const std::size_t q = member.feature_subset.size();
        REQUIRE_FALSE(member.rotation.is_identity());
        REQUIRE(member.rotation.blocks.size() == 2);
        REQUIRE(member.rotation.assembled.rows() == q);

        // Orthogonality R^T R = I.
        const Matrix rtr = matmul(transpose(member.rotation.assembled),
                                  member.rotation.assembled);
        for (std::size_t i = 0; i < q; ++i)
            for (std::size_t j = 0; j < q; ++j)
                CHECK(std::abs(rtr(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-8);

        // The layout is contiguous runs covering local indices 0..q-1, and
        // everything outside the blocks is exactly zero.
        std::size_t expect = 0;
        for (std::size_t g = 0; g < member.rotation.partition_layout.size(); ++g) {
            const auto& local = member.rotation.partition_layout[g];
            for (std::size_t pos : local)
                CHECK(pos == expect++);
        }
        CHECK(expect == q);
        const std::size_t first_block = member.rotation.partition_layout[0].size();
        for (std::size_t i = 0; i < first_block; ++i)
            for (std::size_t j = first_block; j < q; ++j) {
                CHECK(member.rotation.assembled(i, j) == 0.0);
                CHECK(member.rotation.assembled(j, i) == 0.0);
            }

        // Feature ids ascend inside each partition's run.
        std::size_t off = 0;
        for (const auto& local : member.rotation.partition_layout) {
            for (std::size_t i = 1; i < local.size(); ++i)
                CHECK(member.feature_subset[off + i - 1] <
                      member.feature_subset[off + i]);
            off += local.size();
        }
    }
}

TEST_CASE("members are addressed by index, not by fitting order") {
    const Matrix train = correlated_series(140, 6, 10);
    EnsembleConfig three = fast_config(Method::NestedRotations, 10);
    three.members = 3;
    EnsembleConfig five = three;
    five.members = 5;

    const auto m3 = fit_ensemble_serial(train, three);
    const auto m5 = fit_ensemble_serial(train, five);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(members_equal(m3[i], m5[i]));
}

TEST_CASE("parallel ensemble fitting is bit-identical to serial") {
    const Matrix train = correlated_series(140, 6, 11);
    for (Method method : {Method::FeatureBagging, Method::NestedRotations}) {
        EnsembleConfig cfg = fast_config(method, 11);
        cfg.members = 6;
        const auto serial = fit_ensemble_serial(train, cfg);
        for (int threads : {1, 3, 8}) {
            omp_set_num_threads(threads);
            const auto parallel = fit_ensemble(train, cfg);
            REQUIRE(parallel.size() == serial.size());
            for (std::size_t i = 0; i < serial.size(); ++i)
                CHECK(members_equal(serial[i], parallel[i]));
        }
    }
    omp_set_num_threads(omp_get_num_procs());
}

TEST_CASE("ensemble fitting propagates member failures") {
    Matrix train = correlated_series(140, 6, 12);
    train(3, 2) = std::nan("");
    EnsembleConfig cfg = fast_config(Method::FeatureBagging, 12);
    cfg.members = 4;
    CHECK_THROWS_AS(fit_ensemble(train, cfg), ArgumentError);
}

TEST_CASE("different members see different projections") {
    const Matrix train = correlated_series(140, 8, 13);
    EnsembleConfig cfg = fast_config(Method::NestedRotations, 13);
    cfg.members = 6;
    const auto members = fit_ensemble_serial(train, cfg);
    bool any_subset_diff = false;
    for (std::size_t i = 1; i < members.size(); ++i)
        any_subset_diff |= members[i].feature_subset != members[0].feature_subset;
    CHECK(any_subset_diff);
}

TEST_CASE("point scores map each point to the window ending at it") {
    const Matrix train = correlated_series(150, 5, 14);
    EnsembleConfig cfg = fast_config(Method::Plain, 14);
    cfg.members = 1;
    const auto members = fit_ensemble_serial(train, cfg);
    const EnsembleMember& member = members[0];

    const Matrix eval = correlated_series(60, 5, 15);
    const ScoreMatrix sm = score_points(members, eval);
    REQUIRE(sm.points() == 60);
    REQUIRE(sm.members() == 1);

    // Recompute the member's window scores directly.
    const Matrix z = standardize_apply(member.standardizer, eval);
    const Matrix sel = select_columns(z, member.feature_subset);
    const WindowSet ws = make_windows(sel, cfg.window_length, 1);
    const std::vector<double> wscores = score_windows(member.detector, ws);

    const std::size_t w = cfg.window_length;
    for (std::size_t t = 0; t < 60; ++t) {
        const double want = wscores[t >= w - 1 ? t - (w - 1) : 0];
        CHECK(sm.scores(t, 0) == want);
        CHECK(sm.binary_at(t, 0) == (want > member.threshold ? 1 : 0));
    }
    // Points before the first complete window inherit window 0's score.
    for (std::size_t t = 0; t + 1 < w; ++t)
        CHECK(sm.scores(t, 0) == sm.scores(w - 1, 0));
}

TEST_CASE("score_points validates the evaluation slice") {
    const Matrix train = correlated_series(120, 5, 16);
    EnsembleConfig cfg = fast_config(Method::Plain, 16);
    cfg.members = 2;
    const auto members = fit_ensemble(train, cfg);
    CHECK_THROWS_AS(score_points(members, correlated_series(4, 5, 1)),
                    ArgumentError); // shorter than a window
    CHECK_THROWS_AS(score_points(members, correlated_series(60, 4, 1)),
                    ArgumentError); // wrong width
    CHECK_THROWS_AS(score_points({}, correlated_series(60, 5, 1)), ArgumentError);
}

TEST_CASE("split_ab halves the training range, remainder to part B") {
    const auto [a, b] = split_ab(IndexRange{0, 400}, 32);
    CHECK(a == IndexRange{0, 200});
    CHECK(b == IndexRange{200, 400});

    const auto [a2, b2] = split_ab(IndexRange{100, 501}, 32);
    CHECK(a2 == IndexRange{100, 300});
    CHECK(b2 == IndexRange{300, 501});

    CHECK_NOTHROW(split_ab(IndexRange{0, 80}, 32));
    CHECK_THROWS_AS(split_ab(IndexRange{0, 79}, 32), ArgumentError);
}

TEST_CASE("stacking dataset standardizes member scores per column") {
    const Matrix train = correlated_series(160, 6, 17);
    EnsembleConfig cfg = fast_config(Method::NestedRotations, 17);
    cfg.members = 3;
    const auto members = fit_ensemble(train, cfg);

    const Matrix b_data = correlated_series(80, 6, 18);
    std::vector<std::uint8_t> labels(80, 0);
    for (std::size_t i = 40; i < 50; ++i)
        labels[i] = 1;

    const StackingDataset ds = build_stacking_dataset(members, b_data, labels);
    REQUIRE(ds.features.rows() == 80);
    REQUIRE(ds.features.cols() == 3);
    CHECK(ds.targets == labels);
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 80; ++i)
            mean += ds.features(i, j);
        mean /= 80.0;
        CHECK(std::abs(mean) < 1e-9);
        double var = 0.0;
        for (std::size_t i = 0; i < 80; ++i)
            var += ds.features(i, j) * ds.features(i, j);
        var /= 80.0;
        CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
    }

    CHECK_THROWS_AS(build_stacking_dataset(members, b_data,
                                           std::vector<std::uint8_t>(79, 0)),
                    ArgumentError);
    std::vector<std::uint8_t> bad = labels;
    bad[0] = 2;
    CHECK_THROWS_AS(build_stacking_dataset(members, b_data, bad), ArgumentError);
}

TEST_CASE("logistic regression separates a 1-d separable problem") {
    Matrix x(40, 1);
    std::vector<std::uint8_t> y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        x(i, 0) = (i < 20) ? -1.0 - 0.05 * static_cast<double>(i)
                           : 1.0 + 0.05 * static_cast<double>(i - 20);
        y[i] = i < 20 ? 0 : 1;
    }
    const LogisticModel model = fit_logistic(x, y, 1e-4, 500, 1e-6);
    CHECK(model.weights[0] > 0.0);
    for (std::size_t i = 0; i < 40; ++i) {
        const double p =
            1.0 / (1.0 + std::exp(-(model.bias + model.weights[0] * x(i, 0))));
        CHECK((p > 0.5 ? 1 : 0) == y[i]);
    }
}

TEST_CASE("stronger l2 shrinks the logistic weight monotonically") {
    Matrix x(60, 1);
    std::vector<std::uint8_t> y(60);
    RngStream rng(19);
    for (std::size_t i = 0; i < 60; ++i) {
        y[i] = i % 2;
        x(i, 0) = (y[i] ? 1.0 : -1.0) + 0.3 * rng.next_normal();
    }
    double prev = 1e300;
    for (double l2 : {1e-4, 1e-2, 1.0}) {
        const LogisticModel m = fit_logistic(x, y, l2, 500, 1e-8);
        CHECK(m.weights[0] > 0.0);
        CHECK(m.weights[0] < prev);
        prev = m.weights[0];
    }
}

TEST_CASE("logistic fit reaches a stationary point of its objective") {
    Matrix x(50, 2);
    std::vector<std::uint8_t> y(50);
    RngStream rng(20);
    for (std::size_t i = 0; i < 50; ++i) {
        y[i] = i % 2;
        x(i, 0) = (y[i] ? 0.8 : -0.8) + rng.next_normal();
        x(i, 1) = rng.next_normal();
    }
    const double l2 = 1e-2;
    const LogisticModel m = fit_logistic(x, y, l2, 2000, 1e-8);

    // Finite-difference gradient of the objective at the returned point.
    std::vector<double> theta{m.weights[0], m.weights[1], m.bias};
    auto objective = [&](const std::vector<double>& th) {
        double total = 0.0;
        for (std::size_t i = 0; i < 50; ++i) {
            const double z = th[2] + th[0] * x(i, 0) + th[1] * x(i, 1);
            total += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) -
                     (y[i] ? z : 0.0);
        }
        return total / 50.0 + l2 * (th[0] * th[0] + th[1] * th[1]);
    };
    for (std::size_t j = 0; j < 3; ++j) {
        std::vector<double> up = theta, down = theta;
        up[j] += 1e-6;
        down[j] -= 1e-6;
        const double fd = (objective(up) - objective(down)) / 2e-6;
        CHECK(std::abs(fd) < 1e-5);
    }
}

TEST_CASE("logistic regression validates inputs") {
    Matrix x(10, 1);
    std::vector<std::uint8_t> ones(10, 1);
    CHECK_THROWS_AS(fit_logistic(x, ones, 1e-4, 100, 1e-6), ArgumentError);
    std::vector<std::uint8_t> zeros(10, 0);
    CHECK_THROWS_AS(fit_logistic(x, zeros, 1e-4, 100, 1e-6), ArgumentError);
    std::vector<std::uint8_t> short_y(9, 0);
    CHECK_THROWS_AS(fit_logistic(x, short_y, 1e-4, 100, 1e-6), ArgumentError);
    std::vector<std::uint8_t> mixed(10, 0);
    mixed[0] = 1;
    CHECK_THROWS_AS(fit_logistic(x, mixed, -1.0, 100, 1e-6), ArgumentError);
    CHECK_THROWS_AS(fit_logistic(x, mixed, 1e-4, 0, 1e-6), ArgumentError);
}

TEST_CASE("stacked prediction is the calibrated sigmoid of member scores") {
    const Matrix train = correlated_series(160, 5, 21);
    EnsembleConfig cfg = fast_config(Method::NestedRotations, 21);
    cfg.members = 2;

    StackedModel model;
    model.members = fit_ensemble(train, cfg);
    const Matrix eval = correlated_series(50, 5, 22);
    const ScoreMatrix raw = score_points(model.members, eval);
    model.score_stats = standardize_fit(raw.scores);

    // Zero weights: probability is exactly sigmoid(bias) everywhere, and the
    // 0.5 cut is strict.
    model.logistic.weights = {0.0, 0.0};
    model.logistic.bias = 0.0;
    const StackedPrediction flat = predict_stacked(model, eval);
    for (std::size_t t = 0; t < flat.probabilities.size(); ++t) {
        CHECK(flat.probabilities[t] == 0.5);
        CHECK(flat.binary[t] == 0);
    }

    model.logistic.bias = 2.0;
    const StackedPrediction high = predict_stacked(model, eval);
    for (std::size_t t = 0; t < high.probabilities.size(); ++t) {
        CHECK(high.probabilities[t] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
        CHECK(high.binary[t] == 1);
    }

    model.logistic.weights = {0.0};
    CHECK_THROWS_AS(predict_stacked(model, eval), ArgumentError);
}
