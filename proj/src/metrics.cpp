#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "tsad/errors.hpp"
#include "tsad/eval.hpp"

namespace tsad {

ConfusionCounts confusion(const std::vector<std::uint8_t>& predictions,
                          const std::vector<std::uint8_t>& labels) {
    if (predictions.size() != labels.size())
        throw ArgumentError("prediction and label lengths differ");
    ConfusionCounts c;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] > 1 || labels[i] > 1)
            throw ArgumentError("predictions and labels must be 0 or 1");
        if (predictions[i] == 1)
            labels[i] == 1 ? ++c.tp : ++c.fp;
        else
            labels[i] == 1 ? ++c.fn : ++c.tn;
    }
    return c;
}

double f1_score(const ConfusionCounts& c) {
    const double precision =
        c.tp + c.fp == 0
            ? 0.0
            : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    const double recall =
        c.tp + c.fn == 0
            ? 0.0
            : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double roc_auc(const std::vector<double>& scores,
               const std::vector<std::uint8_t>& labels) {
    const std::size_t n = scores.size();
    if (labels.size() != n)
        throw ArgumentError("score and label lengths differ");
    if (n == 0) throw ArgumentError("empty score vector");

    std::uint64_t positives = 0;
    for (std::uint8_t y : labels) {
        if (y > 1) throw ArgumentError("labels must be 0 or 1");
        positives += y;
    }
    const std::uint64_t negatives = n - positives;
    if (positives == 0 || negatives == 0)
        throw ArgumentError("AUC requires both classes");
    for (double s : scores)
        if (!std::isfinite(s)) throw ArgumentError("non-finite score");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // num2 = 2 * #(pos > neg) + #(pos == neg), walked over tie groups.
    std::uint64_t num2 = 0;
    std::uint64_t neg_below = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        std::uint64_t pos_group = 0, neg_group = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            labels[order[j]] == 1 ? ++pos_group : ++neg_group;
            ++j;
        }
        num2 += pos_group * (2 * neg_below + neg_group);
        neg_below += neg_group;
        i = j;
    }

    // Divide the smaller mass and derive the larger side by subtraction from
    // 1: rounding is then symmetric, so the two complementary orderings of
    // the same data always sum to exactly 1.
    const std::uint64_t denom2 = 2 * positives * negatives;
    if (num2 <= positives * negatives)
        return static_cast<double>(num2) / static_cast<double>(denom2);
    return 1.0 - static_cast<double>(denom2 - num2) / static_cast<double>(denom2);
}

double macro_average(const std::vector<double>& values) {
    if (values.empty())
        throw ArgumentError("macro average over an empty collection");
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(values.size());
}

} // namespace tsad
