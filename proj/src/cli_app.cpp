#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <omp.h>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cli_app.hpp"
#include "config.hpp"
#include "tsad/ensemble.hpp"
#include "tsad/errors.hpp"
#include "tsad/eval.hpp"
#include "tsad/model_io.hpp"
#include "tsad/rng.hpp"

namespace tsad {

namespace {

namespace fs = std::filesystem;

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("failed reading file: " + path);
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing file: " + path);
}

// Series CSV in the layout the loader reads back: datetime, features, label.
std::string series_to_csv(const TimeSeries& series, char delimiter) {
    std::string out = "datetime";
    for (const std::string& name : series.feature_names) {
        out += delimiter;
        out += name;
    }
    out += delimiter;
    out += "anomaly\n";
    for (std::size_t t = 0; t < series.n(); ++t) {
        out += series.timestamps[t];
        for (std::size_t j = 0; j < series.dim(); ++j) {
            out += delimiter;
            out += g17(series.values(t, j));
        }
        out += delimiter;
        out += series.has_labels() && series.labels[t] ? '1' : '0';
        out += '\n';
    }
    return out;
}

// A single CSV file, or every *.csv in a directory (sorted by path so corpus
// order is stable).
std::vector<TimeSeries> load_corpus(const std::string& input,
                                    const std::string& label_col) {
    std::vector<TimeSeries> corpus;
    if (fs::is_directory(input)) {
        std::vector<std::string> paths;
        for (const auto& entry : fs::directory_iterator(input))
            if (entry.is_regular_file() && entry.path().extension() == ".csv")
                paths.push_back(entry.path().string());
        std::sort(paths.begin(), paths.end());
        if (paths.empty())
            throw DataError("no .csv files in directory: " + input);
        for (const std::string& path : paths)
            corpus.push_back(load_skab_csv(path, ';', label_col));
    } else {
        corpus.push_back(load_skab_csv(input, ';', label_col));
    }
    return corpus;
}

struct CommonFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::string method;
    std::uint64_t members = 0;
    std::uint64_t partitions = 0;
    double subsample = 0.0;
    std::uint64_t window = 0;
    std::string threshold_mode;
    std::string label_col = "anomaly";
};

// Flags layered over config-file values: the config file is applied first,
// then every flag the user actually passed.
void add_common_options(CLI::App& cmd, CommonFlags& flags, bool seed_required) {
    cmd.add_option("--config", flags.config_path,
                   "Config file (flat key=value sections; see README)");
    auto* seed = cmd.add_option("--seed", flags.seed, "Root random seed");
    if (seed_required) seed->required();
    cmd.add_option("--threads", flags.threads,
                   "Worker thread cap (default: all cores)");
    cmd.add_option("--method", flags.method,
                   "Method: plain, fb, fbr, or stacked");
    cmd.add_option("--members", flags.members, "Ensemble member count");
    cmd.add_option("--partitions", flags.partitions,
                   "Feature partitions per member (fbr)");
    cmd.add_option("--subsample", flags.subsample,
                   "Row fraction for per-partition PCA fits (fbr)");
    cmd.add_option("--window", flags.window, "Sliding window length");
    cmd.add_option("--threshold-mode", flags.threshold_mode,
                   "Score threshold rule: paper_iqr or tukey");
    cmd.add_option("--label-col", flags.label_col,
                   "Label column name in input CSVs");
}

// Builds the experiment configuration from defaults, config file, and flags,
// in that order. Returns the modes requested (config `modes` key, overridden
// by --method).
std::vector<Method> resolve_config(const CLI::App& cmd, const CommonFlags& flags,
                                   ExperimentConfig& cfg) {
    std::vector<Method> modes{Method::Plain, Method::FeatureBagging,
                              Method::NestedRotations, Method::Stacked};
    if (!flags.config_path.empty())
        detail::apply_config_text(read_text_file(flags.config_path), cfg, modes);
    if (cmd.count("--seed")) cfg.ensemble.seed = flags.seed;
    if (cmd.count("--method")) modes = {method_from_name(flags.method)};
    if (cmd.count("--members")) cfg.ensemble.members = flags.members;
    if (cmd.count("--partitions")) cfg.ensemble.partitions = flags.partitions;
    if (cmd.count("--subsample"))
        cfg.ensemble.subsample_fraction = flags.subsample;
    if (cmd.count("--window")) cfg.ensemble.window_length = flags.window;
    if (cmd.count("--threshold-mode"))
        cfg.ensemble.threshold_mode =
            threshold_mode_from_name(flags.threshold_mode);
    if (flags.threads > 0)
        omp_set_num_threads(static_cast<int>(flags.threads));
    return modes;
}

int cmd_synth(const std::string& output_dir, std::size_t series_count,
              std::size_t length, std::size_t dim, double anomaly_fraction,
              std::size_t affected, double shift, std::uint64_t seed) {
    std::error_code ec;
    fs::create_directories(output_dir, ec);
    if (ec) throw IoError("cannot create directory: " + output_dir);

    const RngStream root(seed);
    for (std::size_t i = 0; i < series_count; ++i) {
        const std::uint64_t series_seed =
            root.child(stream_tag(StreamTag::Series, i)).seed();
        const TimeSeries series = generate_synthetic(
            length, dim, anomaly_fraction, affected, shift, series_seed);
        const std::string path =
            (fs::path(output_dir) / ("series_" + std::to_string(i) + ".csv"))
                .string();
        write_text_file(path, series_to_csv(series, ';'));
        std::cout << "wrote " << path << "\n";
    }
    return 0;
}

int cmd_train(const CLI::App& cmd, const CommonFlags& flags,
              const std::string& input, const std::string& output) {
    ExperimentConfig cfg;
    resolve_config(cmd, flags, cfg);
    const Method requested =
        cmd.count("--method") ? method_from_name(flags.method)
                              : cfg.ensemble.method;

    const TimeSeries series = load_skab_csv(input, ';', flags.label_col);
    series.validate();

    ModelBundle bundle;
    if (requested == Method::Stacked) {
        EnsembleConfig ecfg = cfg.ensemble;
        ecfg.method = Method::NestedRotations;
        const DatasetSplit split = split_series(
            series.n(), cfg.split_stacked, ecfg.window_length + 8);
        const Matrix member_rows =
            take_rows(series.values, split.parts[0].begin, split.parts[0].end);
        bundle.members = fit_ensemble(member_rows, ecfg);
        const Matrix regressor_rows =
            take_rows(series.values, split.parts[1].begin, split.parts[1].end);
        std::vector<std::uint8_t> regressor_labels(
            series.labels.begin() +
                static_cast<std::ptrdiff_t>(split.parts[1].begin),
            series.labels.begin() +
                static_cast<std::ptrdiff_t>(split.parts[1].end));
        const StackingDataset dataset = build_stacking_dataset(
            bundle.members, regressor_rows, regressor_labels);
        const LogisticModel logistic =
            fit_logistic(dataset.features, dataset.targets, cfg.logistic_l2,
                         cfg.logistic_max_iter, cfg.logistic_tol);
        bundle.stacking = StackingHead{logistic, dataset.score_stats};
        bundle.config = ecfg;
    } else {
        EnsembleConfig ecfg = cfg.ensemble;
        ecfg.method = requested;
        if (requested == Method::Plain) ecfg.members = 1;
        const DatasetSplit split = split_series(
            series.n(), cfg.split_unsupervised, ecfg.window_length + 8);
        const Matrix train_rows =
            take_rows(series.values, split.parts[0].begin, split.parts[0].end);
        bundle.members = fit_ensemble(train_rows, ecfg);
        bundle.config = ecfg;
    }

    save_model(bundle, output);
    std::cout << "wrote " << output << "\n";
    return 0;
}

int cmd_score(const std::string& model_path, const std::string& input,
              const std::string& output, const std::string& label_col,
              std::size_t threads) {
    if (threads > 0) omp_set_num_threads(static_cast<int>(threads));
    const ModelBundle bundle = load_model(model_path);
    const TimeSeries series = load_skab_csv(input, ';', label_col);
    series.validate();

    std::string csv = "timestamp,score,binary\n";
    if (bundle.stacking.has_value()) {
        const StackedModel model{bundle.members, bundle.stacking->logistic,
                                 bundle.stacking->score_stats};
        const StackedPrediction pred = predict_stacked(model, series.values);
        for (std::size_t t = 0; t < series.n(); ++t)
            csv += series.timestamps[t] + "," + g17(pred.probabilities[t]) + "," +
                   (pred.binary[t] ? "1" : "0") + "\n";
    } else {
        const ScoreMatrix scored = score_points(bundle.members, series.values);
        const std::size_t m = bundle.members.size();
        for (std::size_t t = 0; t < series.n(); ++t) {
            const std::span<const std::uint8_t> votes(
                scored.binary.data() + t * m, m);
            const std::uint8_t verdict = majority_vote(votes);
            double score = 0.0;
            if (bundle.config.method == Method::Plain) {
                score = scored.scores(t, 0);
            } else {
                std::size_t ones = 0;
                for (std::uint8_t v : votes) ones += v;
                score = static_cast<double>(ones) / static_cast<double>(m);
            }
            csv += series.timestamps[t] + "," + g17(score) + "," +
                   (verdict ? "1" : "0") + "\n";
        }
    }

    if (output.empty())
        std::cout << csv;
    else
        write_text_file(output, csv);
    return 0;
}

int cmd_eval(const CLI::App& cmd, const CommonFlags& flags,
             const std::string& input, const std::string& output_dir) {
    ExperimentConfig cfg;
    const std::vector<Method> modes = resolve_config(cmd, flags, cfg);
    const std::vector<TimeSeries> corpus = load_corpus(input, flags.label_col);
    const Report report = run_experiment(corpus, cfg, modes);

    const std::string text = report_to_text(report);
    std::cout << text;
    if (!output_dir.empty()) {
        std::error_code ec;
        fs::create_directories(output_dir, ec);
        if (ec) throw IoError("cannot create directory: " + output_dir);
        write_text_file((fs::path(output_dir) / "report.txt").string(), text);
        write_text_file((fs::path(output_dir) / "report.csv").string(),
                        report_to_csv(report));
    }
    return 0;
}

// Small random fixtures keep finite differences both fast and well
// conditioned; thresholds match the library's gradient contract.
int cmd_gradcheck(std::uint64_t seed) {
    RngStream rng = RngStream(seed).child(stream_tag(StreamTag::Synthetic));

    const auto fill = [&rng](std::size_t rows, std::size_t cols) {
        Matrix m(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.next_normal();
        return m;
    };

    DetectorSpec dense;
    dense.kind = DetectorKind::DenseAutoencoder;
    dense.ae_hidden = {3};
    const WindowSet dense_fixture = make_windows(fill(40, 3), 2, 1);
    const double dense_err = gradient_check(dense, dense_fixture, seed);

    DetectorSpec lstm;
    lstm.kind = DetectorKind::LstmForecaster;
    lstm.lstm_hidden = 4;
    const WindowSet lstm_fixture = make_windows(fill(40, 2), 5, 1);
    const double lstm_err = gradient_check(lstm, lstm_fixture, seed);

    std::cout << "dense_autoencoder max relative gradient error: "
              << g17(dense_err) << "\n";
    std::cout << "lstm_forecaster max relative gradient error: "
              << g17(lstm_err) << "\n";
    constexpr double kTolerance = 1e-4;
    if (dense_err > kTolerance || lstm_err > kTolerance)
        throw NumericalError("gradient check failed: analytic and finite "
                             "difference gradients disagree");
    std::cout << "gradient checks passed (tolerance " << g17(kTolerance)
              << ")\n";
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Ensemble anomaly detection for multivariate time series", "tsad"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
    std::string synth_output;
    std::size_t synth_series = 5, synth_length = 2000, synth_dim = 8,
                synth_affected = 2;
    double synth_fraction = 0.05, synth_shift = 5.0;
    std::uint64_t synth_seed = 0;
    synth->add_option("--output", synth_output, "Directory for series CSVs")
        ->required();
    synth->add_option("--series", synth_series, "Number of series");
    synth->add_option("--length", synth_length, "Points per series");
    synth->add_option("--dim", synth_dim, "Features per series");
    synth->add_option("--anomaly-fraction", synth_fraction,
                      "Fraction of anomalous points");
    synth->add_option("--affected", synth_affected,
                      "Features shifted inside anomalies");
    synth->add_option("--shift", synth_shift,
                      "Shift size in per-feature standard deviations");
    synth->add_option("--seed", synth_seed, "Root random seed");

    // train
    auto* train = app.add_subcommand("train", "Fit a model on one series");
    CommonFlags train_flags;
    std::string train_input, train_output;
    add_common_options(*train, train_flags, /*seed_required=*/true);
    train->add_option("--input", train_input, "Series CSV")->required();
    train->add_option("--output", train_output, "Model file to write")
        ->required();

    // score
    auto* score = app.add_subcommand("score", "Score a series with a saved model");
    std::string score_model, score_input, score_output,
        score_label_col = "anomaly";
    std::size_t score_threads = 0;
    score->add_option("--model", score_model, "Model file")->required();
    score->add_option("--input", score_input, "Series CSV")->required();
    score->add_option("--output", score_output,
                      "Output CSV path (default: stdout)");
    score->add_option("--label-col", score_label_col,
                      "Label column name in input CSVs");
    score->add_option("--threads", score_threads,
                      "Worker thread cap (default: all cores)");

    // eval
    auto* eval = app.add_subcommand(
        "eval", "Run the method comparison over a corpus and report metrics");
    CommonFlags eval_flags;
    std::string eval_input, eval_output;
    add_common_options(*eval, eval_flags, /*seed_required=*/true);
    eval->add_option("--input", eval_input, "Series CSV or directory of CSVs")
        ->required();
    eval->add_option("--output", eval_output,
                     "Directory for report.txt and report.csv");

    // gradcheck
    auto* gradcheck = app.add_subcommand(
        "gradcheck", "Verify analytic detector gradients against finite differences");
    std::uint64_t gradcheck_seed = 1;
    gradcheck->add_option("--seed", gradcheck_seed, "Fixture seed");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(synth))
            return cmd_synth(synth_output, synth_series, synth_length, synth_dim,
                             synth_fraction, synth_affected, synth_shift,
                             synth_seed);
        if (app.got_subcommand(train))
            return cmd_train(*train, train_flags, train_input, train_output);
        if (app.got_subcommand(score))
            return cmd_score(score_model, score_input, score_output,
                             score_label_col, score_threads);
        if (app.got_subcommand(eval))
            return cmd_eval(*eval, eval_flags, eval_input, eval_output);
        if (app.got_subcommand(gradcheck)) return cmd_gradcheck(gradcheck_seed);
        throw UsageError("no command given");
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 6;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace tsad
