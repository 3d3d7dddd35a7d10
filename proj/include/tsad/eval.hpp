#ifndef TSAD_EVAL_HPP
#define TSAD_EVAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tsad/ensemble.hpp"
#include "tsad/timeseries.hpp"

namespace tsad {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
};

ConfusionCounts confusion(const std::vector<std::uint8_t>& predictions,
                          const std::vector<std::uint8_t>& labels);

// Precision = TP/(TP+FP), Recall = TP/(TP+FN), F1 their harmonic mean; any
// 0/0 is defined as 0.
double f1_score(const ConfusionCounts& c);

// Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 * P(tie), computed by
// exact pair counting over score-tie groups. Complementary orderings sum to
// exactly 1. Requires both classes.
double roc_auc(const std::vector<double>& scores,
               const std::vector<std::uint8_t>& labels);

// Unweighted arithmetic mean; empty input is an argument error.
double macro_average(const std::vector<double>& values);

struct ExperimentConfig {
    EnsembleConfig ensemble; // ensemble.seed is the experiment root seed
    std::vector<double> split_unsupervised{0.5, 0.5};
    std::vector<double> split_stacked{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    double logistic_l2 = 1e-4;
    std::size_t logistic_max_iter = 500;
    double logistic_tol = 1e-6;

    void validate() const;
};

struct SeriesResult {
    std::string series_id;
    Method method = Method::Plain;
    double f1 = 0.0;
    double auc = 0.0;
};

struct MacroResult {
    Method method = Method::Plain;
    double f1 = 0.0;
    double auc = 0.0;
};

struct Report {
    std::vector<SeriesResult> per_series; // grouped by method, series order kept
    std::vector<MacroResult> macro;
    std::string config_text; // canonical config snapshot
    std::uint64_t seed = 0;
};

// Canonical flat key=value rendering of an experiment configuration. This is
// also the format config files use, so a report's snapshot can be replayed.
std::string experiment_config_text(const ExperimentConfig& cfg,
                                   const std::vector<Method>& modes);

// Runs every requested method over every series and macro-averages per
// method. Per series: unsupervised methods use a two-part split (fit on part
// 1, evaluate on part 2; majority vote for F1, vote fraction for AUC — raw
// detector score in plain mode, which also forces a single member); stacked
// uses a three-part split (members on part 1, regressor on part 2, metrics
// on part 3, logistic probability as the AUC score). Fails fast naming the
// offending series. Per-series randomness derives from (seed, series index),
// so results are independent of evaluation order and thread count.
Report run_experiment(const std::vector<TimeSeries>& corpus,
                      const ExperimentConfig& cfg,
                      const std::vector<Method>& modes);

std::string report_to_text(const Report& report);
std::string report_to_csv(const Report& report);

} // namespace tsad

#endif
