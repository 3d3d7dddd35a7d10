// Timing comparison between the OpenMP kernels and their serial reference
// implementations, with a bit-identity check on every result pair.

#include <chrono>
#include <cstdio>
#include <omp.h>
#include <string>

#include "tsad/ensemble.hpp"
#include "tsad/matrix.hpp"
#include "tsad/rng.hpp"
#include "tsad/timeseries.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

tsad::Matrix random_matrix(std::size_t rows, std::size_t cols,
                           tsad::RngStream& rng) {
    tsad::Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.next_normal();
    return m;
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-24s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  %s\n",
                name, serial_s, parallel_s, serial_s / parallel_s,
                identical ? "bit-identical" : "RESULTS DIFFER");
}

} // namespace

int main() {
    std::printf("threads available: %d\n", omp_get_max_threads());
    tsad::RngStream rng(12345);

    {
        const tsad::Matrix a = random_matrix(600, 400, rng);
        const tsad::Matrix b = random_matrix(400, 500, rng);
        constexpr int kReps = 20;

        auto t0 = Clock::now();
        tsad::Matrix serial;
        for (int r = 0; r < kReps; ++r) serial = tsad::matmul_serial(a, b);
        const double serial_s = seconds_since(t0);

        t0 = Clock::now();
        tsad::Matrix parallel;
        for (int r = 0; r < kReps; ++r) parallel = tsad::matmul(a, b);
        const double parallel_s = seconds_since(t0);

        report("matmul 600x400x500", serial_s, parallel_s, serial == parallel);
    }

    {
        const tsad::TimeSeries series =
            tsad::generate_synthetic(1200, 8, 0.05, 2, 5.0, 99);
        const tsad::Matrix train = tsad::take_rows(series.values, 0, 600);

        tsad::EnsembleConfig cfg;
        cfg.method = tsad::Method::NestedRotations;
        cfg.members = 8;
        cfg.partitions = 2;
        cfg.window_length = 32;
        cfg.seed = 7;
        cfg.detector_specs[0].ae_hidden = {16, 8};
        cfg.training.epochs = 4;

        auto t0 = Clock::now();
        const auto serial_members = tsad::fit_ensemble_serial(train, cfg);
        const double serial_s = seconds_since(t0);

        t0 = Clock::now();
        const auto parallel_members = tsad::fit_ensemble(train, cfg);
        const double parallel_s = seconds_since(t0);

        bool identical = serial_members.size() == parallel_members.size();
        for (std::size_t m = 0; identical && m < serial_members.size(); ++m) {
            identical =
                serial_members[m].feature_subset ==
                    parallel_members[m].feature_subset &&
                serial_members[m].detector.weights ==
                    parallel_members[m].detector.weights &&
                serial_members[m].threshold == parallel_members[m].threshold;
        }
        report("fit_ensemble M=8", serial_s, parallel_s, identical);
    }

    return 0;
}
