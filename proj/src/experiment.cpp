#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "tsad/errors.hpp"
#include "tsad/eval.hpp"
#include "tsad/rng.hpp"

namespace tsad {

void ExperimentConfig::validate() const {
    ensemble.validate();
    if (split_unsupervised.size() != 2)
        throw ArgumentError("unsupervised split needs exactly 2 fractions");
    if (split_stacked.size() != 3)
        throw ArgumentError("stacked split needs exactly 3 fractions");
    if (!(logistic_l2 >= 0.0))
        throw ArgumentError("stacking l2 must be nonnegative");
    if (logistic_max_iter == 0)
        throw ArgumentError("stacking max_iter must be positive");
    if (!(logistic_tol > 0.0))
        throw ArgumentError("stacking tolerance must be positive");
}

namespace {

template <typename Fn>
auto with_series_context(const std::string& id, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const UsageError& e) {
        throw UsageError("series " + id + ": " + e.what());
    } catch (const ArgumentError& e) {
        throw ArgumentError("series " + id + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError("series " + id + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError("series " + id + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError("series " + id + ": " + e.what());
    }
}

std::vector<std::uint8_t> label_slice(const TimeSeries& series, IndexRange part) {
    return {series.labels.begin() + static_cast<std::ptrdiff_t>(part.begin),
            series.labels.begin() + static_cast<std::ptrdiff_t>(part.end)};
}

struct ModeOutcome {
    double f1 = 0.0;
    double auc = 0.0;
};

ModeOutcome evaluate_unsupervised(const TimeSeries& series,
                                  const ExperimentConfig& cfg, Method mode,
                                  std::uint64_t series_seed) {
    EnsembleConfig ecfg = cfg.ensemble;
    ecfg.method = mode;
    ecfg.seed = series_seed;
    if (mode == Method::Plain) ecfg.members = 1; // the single-detector baseline

    const DatasetSplit split = split_series(series.n(), cfg.split_unsupervised,
                                            ecfg.window_length + 8);
    const IndexRange train_part = split.parts[0];
    const IndexRange eval_part = split.parts[1];

    const Matrix train = take_rows(series.values, train_part.begin, train_part.end);
    const std::vector<EnsembleMember> members = fit_ensemble(train, ecfg);

    const Matrix eval_rows = take_rows(series.values, eval_part.begin, eval_part.end);
    const ScoreMatrix scored = score_points(members, eval_rows);
    const std::vector<std::uint8_t> labels = label_slice(series, eval_part);

    const std::size_t n = eval_part.size();
    const std::size_t m = members.size();
    std::vector<std::uint8_t> voted(n);
    std::vector<double> continuous(n);
    for (std::size_t t = 0; t < n; ++t) {
        const std::span<const std::uint8_t> votes(scored.binary.data() + t * m, m);
        voted[t] = majority_vote(votes);
        if (mode == Method::Plain) {
            continuous[t] = scored.scores(t, 0);
        } else {
            std::size_t ones = 0;
            for (std::uint8_t v : votes) ones += v;
            continuous[t] = static_cast<double>(ones) / static_cast<double>(m);
        }
    }
    return {f1_score(confusion(voted, labels)), roc_auc(continuous, labels)};
}

ModeOutcome evaluate_stacked(const TimeSeries& series, const ExperimentConfig& cfg,
                             std::uint64_t series_seed) {
    EnsembleConfig ecfg = cfg.ensemble;
    ecfg.method = Method::NestedRotations; // stacking sits on fbr members
    ecfg.seed = series_seed;

    const DatasetSplit split =
        split_series(series.n(), cfg.split_stacked, ecfg.window_length + 8);
    const IndexRange member_part = split.parts[0];
    const IndexRange regressor_part = split.parts[1];
    const IndexRange eval_part = split.parts[2];

    const Matrix member_rows =
        take_rows(series.values, member_part.begin, member_part.end);
    std::vector<EnsembleMember> members = fit_ensemble(member_rows, ecfg);

    const Matrix regressor_rows =
        take_rows(series.values, regressor_part.begin, regressor_part.end);
    const StackingDataset dataset = build_stacking_dataset(
        members, regressor_rows, label_slice(series, regressor_part));
    const LogisticModel logistic =
        fit_logistic(dataset.features, dataset.targets, cfg.logistic_l2,
                     cfg.logistic_max_iter, cfg.logistic_tol);

    const StackedModel model{std::move(members), logistic, dataset.score_stats};
    const Matrix eval_rows = take_rows(series.values, eval_part.begin, eval_part.end);
    const StackedPrediction pred = predict_stacked(model, eval_rows);
    const std::vector<std::uint8_t> labels = label_slice(series, eval_part);
    return {f1_score(confusion(pred.binary, labels)),
            roc_auc(pred.probabilities, labels)};
}

} // namespace

Report run_experiment(const std::vector<TimeSeries>& corpus,
                      const ExperimentConfig& cfg,
                      const std::vector<Method>& modes) {
    cfg.validate();
    if (corpus.empty()) throw ArgumentError("empty corpus");
    if (modes.empty()) throw ArgumentError("no methods requested");

    Report report;
    report.seed = cfg.ensemble.seed;
    report.config_text = experiment_config_text(cfg, modes);

    for (Method mode : modes) {
        std::vector<double> f1s, aucs;
        for (std::size_t si = 0; si < corpus.size(); ++si) {
            const TimeSeries& series = corpus[si];
            const ModeOutcome outcome = with_series_context(series.id, [&] {
                series.validate();
                if (!series.has_labels())
                    throw DataError("labels required for evaluation");
                const std::uint64_t series_seed =
                    RngStream(cfg.ensemble.seed)
                        .child(stream_tag(StreamTag::Series, si))
                        .seed();
                return mode == Method::Stacked
                           ? evaluate_stacked(series, cfg, series_seed)
                           : evaluate_unsupervised(series, cfg, mode, series_seed);
            });
            report.per_series.push_back({series.id, mode, outcome.f1, outcome.auc});
            f1s.push_back(outcome.f1);
            aucs.push_back(outcome.auc);
        }
        report.macro.push_back({mode, macro_average(f1s), macro_average(aucs)});
    }
    return report;
}

namespace {

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string padded(std::string s, std::size_t width) {
    while (s.size() < width) s += ' ';
    return s;
}

} // namespace

std::string report_to_text(const Report& report) {
    std::size_t id_width = 6;
    for (const SeriesResult& row : report.per_series)
        id_width = std::max(id_width, row.series_id.size());

    std::string out;
    out += "anomaly detection report\n";
    out += "seed = " + std::to_string(report.seed) + "\n\n";
    out += "-- config --\n";
    out += report.config_text;
    out += "\n-- per series --\n";
    out += padded("series", id_width) + "  method   f1        auc\n";
    for (const SeriesResult& row : report.per_series) {
        out += padded(row.series_id, id_width) + "  " +
               padded(method_name(row.method), 7) + "  " + fixed6(row.f1) + "  " +
               fixed6(row.auc) + "\n";
    }
    out += "\n-- macro --\n";
    out += "method   f1        auc\n";
    for (const MacroResult& row : report.macro) {
        out += padded(method_name(row.method), 7) + "  " + fixed6(row.f1) + "  " +
               fixed6(row.auc) + "\n";
    }
    return out;
}

std::string report_to_csv(const Report& report) {
    std::string out = "series,method,f1,auc\n";
    for (const SeriesResult& row : report.per_series)
        out += row.series_id + "," + method_name(row.method) + "," + g17(row.f1) +
               "," + g17(row.auc) + "\n";
    for (const MacroResult& row : report.macro)
        out += "MACRO," + method_name(row.method) + "," + g17(row.f1) + "," +
               g17(row.auc) + "\n";
    return out;
}

} // namespace tsad
