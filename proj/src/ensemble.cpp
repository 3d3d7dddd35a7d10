#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <utility>
#include <vector>

#include "tsad/ensemble.hpp"
#include "tsad/errors.hpp"

namespace tsad {

std::string method_name(Method method) {
    switch (method) {
    case Method::Plain: return "plain";
    case Method::FeatureBagging: return "fb";
    case Method::NestedRotations: return "fbr";
    case Method::Stacked: return "stacked";
    }
    throw ArgumentError("unknown method");
}

Method method_from_name(const std::string& name) {
    if (name == "plain") return Method::Plain;
    if (name == "fb") return Method::FeatureBagging;
    if (name == "fbr") return Method::NestedRotations;
    if (name == "stacked") return Method::Stacked;
    throw ArgumentError("unknown method: " + name);
}

std::string threshold_mode_name(ThresholdMode mode) {
    switch (mode) {
    case ThresholdMode::PaperIqr: return "paper_iqr";
    case ThresholdMode::Tukey: return "tukey";
    }
    throw ArgumentError("unknown threshold mode");
}

ThresholdMode threshold_mode_from_name(const std::string& name) {
    if (name == "paper_iqr") return ThresholdMode::PaperIqr;
    if (name == "tukey") return ThresholdMode::Tukey;
    throw ArgumentError("unknown threshold mode: " + name);
}

void EnsembleConfig::validate() const {
    if (members == 0) throw ArgumentError("member count must be positive");
    if (partitions == 0) throw ArgumentError("partition count must be positive");
    if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
        throw ArgumentError("subsample fraction must lie in (0,1]");
    if (method == Method::Stacked)
        throw ArgumentError("stacking is layered on fitted members; build members "
                            "with plain/fb/fbr");
    if (method != Method::Plain && method != Method::FeatureBagging &&
        method != Method::NestedRotations)
        throw ArgumentError("unknown method");
    if (detector_specs.empty())
        throw ArgumentError("at least one detector spec required");
    for (const DetectorSpec& spec : detector_specs) spec.validate();
    if (window_length == 0) throw ArgumentError("window length must be positive");
    training.validate();
}

std::vector<std::size_t> sample_feature_subset(std::size_t d, RngStream& rng) {
    if (d < 2) throw ArgumentError("feature bagging needs at least 2 features");
    const auto size = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(d / 2),
                        static_cast<std::int64_t>(d - 1)));
    std::vector<std::size_t> pool(d);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < size; ++i)
        std::swap(pool[i], pool[i + rng.next_below(d - i)]);
    pool.resize(size);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<std::vector<std::size_t>> partition_features(
    const std::vector<std::size_t>& subset, std::size_t k, RngStream& rng) {
    if (k == 0) throw ArgumentError("partition count must be positive");
    if (k > subset.size())
        throw ArgumentError("more partitions than features in the subset");
    std::vector<std::size_t> perm = subset;
    for (std::size_t i = perm.size() - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.next_below(i + 1)]);

    const std::size_t base = perm.size() / k;
    const std::size_t extra = perm.size() % k;
    std::vector<std::vector<std::size_t>> groups(k);
    std::size_t off = 0;
    for (std::size_t g = 0; g < k; ++g) {
        const std::size_t len = base + (g < extra ? 1 : 0);
        groups[g].assign(perm.begin() + static_cast<std::ptrdiff_t>(off),
                         perm.begin() + static_cast<std::ptrdiff_t>(off + len));
        off += len;
    }
    return groups;
}

namespace {

// Linear interpolation between order statistics of an ascending sample.
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

} // namespace

double fit_threshold(const std::vector<double>& train_scores, ThresholdMode mode) {
    if (train_scores.size() < 4)
        throw ArgumentError("need at least 4 scores to fit a threshold");
    for (double s : train_scores)
        if (!std::isfinite(s)) throw ArgumentError("non-finite training score");
    std::vector<double> sorted = train_scores;
    std::sort(sorted.begin(), sorted.end());
    const double q1 = quantile_sorted(sorted, 0.25);
    const double q3 = quantile_sorted(sorted, 0.75);
    const double iqr = q3 - q1;
    switch (mode) {
    case ThresholdMode::PaperIqr:
        return iqr == 0.0 ? q3 : 1.5 * iqr;
    case ThresholdMode::Tukey:
        return q3 + 1.5 * iqr;
    }
    throw ArgumentError("unknown threshold mode");
}

std::vector<std::uint8_t> binarize(const std::vector<double>& scores, double delta) {
    std::vector<std::uint8_t> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        out[i] = scores[i] > delta ? 1 : 0;
    return out;
}

std::uint8_t majority_vote(std::span<const std::uint8_t> votes) {
    if (votes.empty()) throw ArgumentError("majority vote over zero members");
    std::size_t ones = 0;
    for (std::uint8_t v : votes) ones += v;
    return 2 * ones > votes.size() ? 1 : 0;
}

EnsembleMember build_member(const Matrix& train, const EnsembleConfig& cfg,
                            std::size_t member_index) {
    cfg.validate();
    const std::size_t d = train.cols();
    if (train.rows() < cfg.window_length + 8)
        throw ArgumentError("training slice too short: need at least window "
                            "length + 8 rows");

    const RngStream member_rng =
        RngStream(cfg.seed).child(stream_tag(StreamTag::Member, member_index));

    EnsembleMember member;
    member.standardizer = standardize_fit(train);
    const Matrix standardized = standardize_apply(member.standardizer, train);

    if (cfg.method == Method::Plain) {
        member.feature_subset.resize(d);
        std::iota(member.feature_subset.begin(), member.feature_subset.end(),
                  std::size_t{0});
    } else {
        RngStream subset_rng =
            member_rng.child(stream_tag(StreamTag::FeatureSubset));
        member.feature_subset = sample_feature_subset(d, subset_rng);
    }

    if (cfg.method == Method::NestedRotations) {
        RngStream part_rng = member_rng.child(stream_tag(StreamTag::Partition));
        auto groups =
            partition_features(member.feature_subset, cfg.partitions, part_rng);
        // Keep each group's features in ascending order and lay the groups
        // out contiguously, so the assembled rotation is literally block
        // diagonal in the member's own column order.
        std::vector<std::size_t> ordered;
        ordered.reserve(member.feature_subset.size());
        std::size_t off = 0;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            std::sort(groups[g].begin(), groups[g].end());
            std::vector<std::size_t> local(groups[g].size());
            std::iota(local.begin(), local.end(), off);
            member.rotation.partition_layout.push_back(std::move(local));
            ordered.insert(ordered.end(), groups[g].begin(), groups[g].end());

            const Matrix group_cols = select_columns(standardized, groups[g]);
            RngStream sub_rng =
                member_rng.child(stream_tag(StreamTag::Subsample, g));
            const Matrix sampled =
                subsample_rows(group_cols, cfg.subsample_fraction, sub_rng);
            member.rotation.blocks.push_back(pca_rotation(sampled).eigenvectors);
            off += groups[g].size();
        }
        member.feature_subset = std::move(ordered);
        member.rotation.assembled = block_diag(member.rotation.blocks);
    }

    Matrix working = select_columns(standardized, member.feature_subset);
    if (!member.rotation.is_identity())
        working = apply_rotation(member.rotation.assembled, working);

    const WindowSet windows = make_windows(working, cfg.window_length, 1);
    TrainingConfig training = cfg.training;
    training.seed = member_rng.seed();
    const DetectorSpec& spec =
        cfg.detector_specs[member_index % cfg.detector_specs.size()];
    member.detector = fit_detector(spec, windows, training);

    const std::vector<double> train_scores = score_windows(member.detector, windows);
    member.threshold = fit_threshold(train_scores, cfg.threshold_mode);
    return member;
}

std::vector<EnsembleMember> fit_ensemble_serial(const Matrix& train,
                                                const EnsembleConfig& cfg) {
    cfg.validate();
    std::vector<EnsembleMember> members(cfg.members);
    for (std::size_t m = 0; m < cfg.members; ++m)
        members[m] = build_member(train, cfg, m);
    return members;
}

std::vector<EnsembleMember> fit_ensemble(const Matrix& train,
                                         const EnsembleConfig& cfg) {
    cfg.validate();
    if (cfg.members == 1) return fit_ensemble_serial(train, cfg);

    std::vector<EnsembleMember> members(cfg.members);
    std::vector<std::exception_ptr> failures(cfg.members);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t m = 0; m < cfg.members; ++m) {
        try {
            members[m] = build_member(train, cfg, m);
        } catch (...) {
            failures[m] = std::current_exception();
        }
    }
    for (const std::exception_ptr& failure : failures)
        if (failure) std::rethrow_exception(failure);
    return members;
}

ScoreMatrix score_points(const std::vector<EnsembleMember>& members,
                         const Matrix& eval_data) {
    if (members.empty())
        throw ArgumentError("scoring requires at least one member");
    const std::size_t n = eval_data.rows();
    const std::size_t m_count = members.size();

    ScoreMatrix out;
    out.scores = Matrix(n, m_count);
    out.binary.assign(n * m_count, 0);

    std::vector<std::exception_ptr> failures(m_count);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < m_count; ++i) {
        try {
            const EnsembleMember& member = members[i];
            const std::size_t w = member.detector.window_length;
            if (n < w)
                throw ArgumentError(
                    "evaluation slice shorter than one window");
            if (member.standardizer.dim() != eval_data.cols())
                throw ArgumentError(
                    "evaluation data width does not match the member");
            Matrix working = standardize_apply(member.standardizer, eval_data);
            working = select_columns(working, member.feature_subset);
            if (!member.rotation.is_identity())
                working = apply_rotation(member.rotation.assembled, working);
            const WindowSet windows = make_windows(working, w, 1);
            const std::vector<double> wscores =
                score_windows(member.detector, windows);
            for (std::size_t t = 0; t < n; ++t) {
                const double s = wscores[t >= w - 1 ? t - (w - 1) : 0];
                out.scores(t, i) = s;
                out.binary[t * m_count + i] = s > member.threshold ? 1 : 0;
            }
        } catch (...) {
            failures[i] = std::current_exception();
        }
    }
    for (const std::exception_ptr& failure : failures)
        if (failure) std::rethrow_exception(failure);
    return out;
}

std::pair<IndexRange, IndexRange> split_ab(const IndexRange& train,
                                           std::size_t window_length) {
    const std::size_t n = train.size();
    if (n < 2 * (window_length + 8))
        throw ArgumentError("training part too small to split for stacking");
    const std::size_t half = n / 2;
    return {IndexRange{train.begin, train.begin + half},
            IndexRange{train.begin + half, train.end}};
}

StackingDataset build_stacking_dataset(const std::vector<EnsembleMember>& members,
                                       const Matrix& b_data,
                                       const std::vector<std::uint8_t>& b_labels) {
    if (b_labels.size() != b_data.rows() || b_data.rows() == 0)
        throw ArgumentError("stacking requires one label per part-B point");
    for (std::uint8_t y : b_labels)
        if (y > 1) throw ArgumentError("labels must be 0 or 1");

    const ScoreMatrix raw = score_points(members, b_data);
    StackingDataset ds;
    ds.score_stats = standardize_fit(raw.scores);
    ds.features = standardize_apply(ds.score_stats, raw.scores);
    ds.targets = b_labels;
    return ds;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + e^z), overflow safe.
double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double logistic_loss(const Matrix& x, const std::vector<std::uint8_t>& y,
                     std::span<const double> theta, double l2) {
    const std::size_t n = x.rows(), m = x.cols();
    const double bias = theta[m];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        double z = bias;
        for (std::size_t j = 0; j < m; ++j) z += theta[j] * row[j];
        total += softplus(z) - (y[i] ? z : 0.0);
    }
    double reg = 0.0;
    for (std::size_t j = 0; j < m; ++j) reg += theta[j] * theta[j];
    return total / static_cast<double>(n) + l2 * reg;
}

void logistic_grad(const Matrix& x, const std::vector<std::uint8_t>& y,
                   std::span<const double> theta, double l2,
                   std::span<double> grad) {
    const std::size_t n = x.rows(), m = x.cols();
    std::fill(grad.begin(), grad.end(), 0.0);
    const double bias = theta[m];
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        double z = bias;
        for (std::size_t j = 0; j < m; ++j) z += theta[j] * row[j];
        const double resid =
            (sigmoid(z) - (y[i] ? 1.0 : 0.0)) / static_cast<double>(n);
        for (std::size_t j = 0; j < m; ++j) grad[j] += resid * row[j];
        grad[m] += resid;
    }
    for (std::size_t j = 0; j < m; ++j) grad[j] += 2.0 * l2 * theta[j];
}

} // namespace

LogisticModel fit_logistic(const Matrix& features,
                           const std::vector<std::uint8_t>& targets, double l2,
                           std::size_t max_iter, double tol) {
    const std::size_t n = features.rows(), m = features.cols();
    if (n < 2) throw ArgumentError("logistic regression needs at least 2 rows");
    if (targets.size() != n)
        throw ArgumentError("one target per feature row required");
    if (l2 < 0.0) throw ArgumentError("l2 strength must be nonnegative");
    if (max_iter == 0) throw ArgumentError("max_iter must be positive");
    if (!(tol > 0.0)) throw ArgumentError("tolerance must be positive");
    std::size_t positives = 0;
    for (std::uint8_t y : targets) {
        if (y > 1) throw ArgumentError("labels must be 0 or 1");
        positives += y;
    }
    if (positives == 0 || positives == n)
        throw ArgumentError("logistic regression requires both classes");

    std::vector<double> theta(m + 1, 0.0), grad(m + 1), candidate(m + 1);
    double value = logistic_loss(features, targets, theta, l2);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        logistic_grad(features, targets, theta, l2, grad);
        double gnorm2 = 0.0;
        for (double g : grad) gnorm2 += g * g;
        if (std::sqrt(gnorm2) <= tol) break;

        // Backtracking line search along the negative gradient.
        double step = 1.0;
        bool accepted = false;
        while (step > 1e-14) {
            for (std::size_t j = 0; j <= m; ++j)
                candidate[j] = theta[j] - step * grad[j];
            const double cand_value =
                logistic_loss(features, targets, candidate, l2);
            if (cand_value <= value - 1e-4 * step * gnorm2) {
                theta = candidate;
                value = cand_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break; // at numerical precision floor
    }

    LogisticModel model;
    model.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(m));
    model.bias = theta[m];
    return model;
}

StackedPrediction predict_stacked(const StackedModel& model,
                                  const Matrix& eval_data) {
    if (model.logistic.weights.size() != model.members.size())
        throw ArgumentError("stacked model has mismatched weight count");
    const ScoreMatrix raw = score_points(model.members, eval_data);
    const Matrix z = standardize_apply(model.score_stats, raw.scores);

    StackedPrediction pred;
    pred.probabilities.resize(z.rows());
    pred.binary.resize(z.rows());
    for (std::size_t t = 0; t < z.rows(); ++t) {
        const auto row = z.row(t);
        double activation = model.logistic.bias;
        for (std::size_t j = 0; j < z.cols(); ++j)
            activation += model.logistic.weights[j] * row[j];
        pred.probabilities[t] = sigmoid(activation);
        pred.binary[t] = pred.probabilities[t] > 0.5 ? 1 : 0;
    }
    return pred;
}

} // namespace tsad
