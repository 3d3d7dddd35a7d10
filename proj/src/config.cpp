#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "tsad/errors.hpp"

namespace tsad {

namespace detail {

std::string format_double(double v) {
    char buf[64];
    for (int precision : {15, 16, 17}) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        double back = 0.0;
        std::from_chars(buf, buf + std::string_view(buf).size(), back);
        if (back == v) break;
    }
    return buf;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> items;
    while (!value.empty()) {
        const std::size_t comma = value.find(',');
        const std::string_view item =
            trim(comma == std::string_view::npos ? value : value.substr(0, comma));
        if (item.empty())
            throw ArgumentError("empty item in list value");
        items.emplace_back(item);
        if (comma == std::string_view::npos) break;
        value.remove_prefix(comma + 1);
    }
    return items;
}

std::uint64_t parse_u64(const std::string& key, std::string_view value) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ArgumentError("invalid integer for " + key + ": " + std::string(value));
    return out;
}

double parse_double(const std::string& key, std::string_view value) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ArgumentError("invalid number for " + key + ": " + std::string(value));
    return out;
}

std::vector<double> parse_double_list(const std::string& key, std::string_view value) {
    std::vector<double> out;
    for (const std::string& item : split_list(value))
        out.push_back(parse_double(key, item));
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& key, std::string_view value) {
    std::vector<std::size_t> out;
    for (const std::string& item : split_list(value))
        out.push_back(parse_u64(key, item));
    return out;
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& items, Fn&& render) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += render(items[i]);
    }
    return out;
}

} // namespace

void apply_config_text(const std::string& text, ExperimentConfig& cfg,
                       std::vector<Method>& modes) {
    // Detector hyperparameters are staged so that key order cannot matter:
    // the spec list is rebuilt once after the whole file is read.
    std::vector<DetectorKind> kinds;
    for (const DetectorSpec& spec : cfg.ensemble.detector_specs)
        kinds.push_back(spec.kind);
    DetectorSpec shared = cfg.ensemble.detector_specs.empty()
                              ? DetectorSpec{}
                              : cfg.ensemble.detector_specs.front();

    std::vector<std::string> unknown;
    std::string section;
    std::size_t line_no = 0;
    std::string_view rest = text;
    while (!rest.empty()) {
        const std::size_t nl = rest.find('\n');
        std::string_view line =
            nl == std::string_view::npos ? rest : rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        ++line_no;

        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ArgumentError("malformed section header at line " +
                                    std::to_string(line_no));
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ArgumentError("malformed config line " + std::to_string(line_no) +
                                ": " + std::string(line));
        const std::string key =
            section + "." + std::string(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        const std::string value_str(value);

        if (key == "ensemble.method") {
            cfg.ensemble.method = method_from_name(value_str);
        } else if (key == "ensemble.members") {
            cfg.ensemble.members = parse_u64(key, value);
        } else if (key == "ensemble.partitions") {
            cfg.ensemble.partitions = parse_u64(key, value);
        } else if (key == "ensemble.subsample") {
            cfg.ensemble.subsample_fraction = parse_double(key, value);
        } else if (key == "ensemble.window") {
            cfg.ensemble.window_length = parse_u64(key, value);
        } else if (key == "ensemble.threshold_mode") {
            cfg.ensemble.threshold_mode = threshold_mode_from_name(value_str);
        } else if (key == "ensemble.detectors") {
            kinds.clear();
            for (const std::string& name : split_list(value))
                kinds.push_back(detector_kind_from_name(name));
        } else if (key == "ensemble.seed") {
            cfg.ensemble.seed = parse_u64(key, value);
        } else if (key == "training.epochs") {
            cfg.ensemble.training.epochs = parse_u64(key, value);
        } else if (key == "training.batch") {
            cfg.ensemble.training.batch_size = parse_u64(key, value);
        } else if (key == "training.learning_rate") {
            cfg.ensemble.training.learning_rate = parse_double(key, value);
        } else if (key == "detector.ae_hidden") {
            shared.ae_hidden =
                value.empty() ? std::vector<std::size_t>{} : parse_size_list(key, value);
        } else if (key == "detector.lstm_hidden") {
            shared.lstm_hidden = parse_u64(key, value);
        } else if (key == "detector.pca_components") {
            shared.pca_components = parse_u64(key, value);
        } else if (key == "stacking.l2") {
            cfg.logistic_l2 = parse_double(key, value);
        } else if (key == "stacking.max_iter") {
            cfg.logistic_max_iter = parse_u64(key, value);
        } else if (key == "stacking.tol") {
            cfg.logistic_tol = parse_double(key, value);
        } else if (key == "experiment.modes") {
            modes.clear();
            for (const std::string& name : split_list(value))
                modes.push_back(method_from_name(name));
        } else if (key == "experiment.split") {
            cfg.split_unsupervised = parse_double_list(key, value);
        } else if (key == "experiment.split_stacked") {
            cfg.split_stacked = parse_double_list(key, value);
        } else {
            unknown.push_back(key);
        }
    }

    if (!unknown.empty()) {
        std::string message = "unknown config keys:";
        for (const std::string& key : unknown) message += " " + key;
        throw ArgumentError(message);
    }

    if (kinds.empty())
        throw ArgumentError("ensemble.detectors must list at least one detector");
    cfg.ensemble.detector_specs.clear();
    for (DetectorKind kind : kinds) {
        DetectorSpec spec = shared;
        spec.kind = kind;
        cfg.ensemble.detector_specs.push_back(std::move(spec));
    }
}

} // namespace detail

std::string experiment_config_text(const ExperimentConfig& cfg,
                                   const std::vector<Method>& modes) {
    using detail::format_double;
    const DetectorSpec& shared = cfg.ensemble.detector_specs.empty()
                                     ? DetectorSpec{}
                                     : cfg.ensemble.detector_specs.front();
    std::string out;
    auto line = [&out](const std::string& s) {
        out += s;
        out += '\n';
    };
    line("[ensemble]");
    line("method = " + method_name(cfg.ensemble.method));
    line("members = " + std::to_string(cfg.ensemble.members));
    line("partitions = " + std::to_string(cfg.ensemble.partitions));
    line("subsample = " + format_double(cfg.ensemble.subsample_fraction));
    line("window = " + std::to_string(cfg.ensemble.window_length));
    line("threshold_mode = " + threshold_mode_name(cfg.ensemble.threshold_mode));
    line("detectors = " +
         detail::join(cfg.ensemble.detector_specs, [](const DetectorSpec& s) {
             return detector_kind_name(s.kind);
         }));
    line("seed = " + std::to_string(cfg.ensemble.seed));
    line("");
    line("[training]");
    line("epochs = " + std::to_string(cfg.ensemble.training.epochs));
    line("batch = " + std::to_string(cfg.ensemble.training.batch_size));
    line("learning_rate = " + format_double(cfg.ensemble.training.learning_rate));
    line("");
    line("[detector]");
    line("ae_hidden = " + detail::join(shared.ae_hidden, [](std::size_t v) {
             return std::to_string(v);
         }));
    line("lstm_hidden = " + std::to_string(shared.lstm_hidden));
    line("pca_components = " + std::to_string(shared.pca_components));
    line("");
    line("[stacking]");
    line("l2 = " + format_double(cfg.logistic_l2));
    line("max_iter = " + std::to_string(cfg.logistic_max_iter));
    line("tol = " + format_double(cfg.logistic_tol));
    line("");
    line("[experiment]");
    line("modes = " +
         detail::join(modes, [](Method m) { return method_name(m); }));
    line("split = " + detail::join(cfg.split_unsupervised, [](double v) {
             return format_double(v);
         }));
    line("split_stacked = " + detail::join(cfg.split_stacked, [](double v) {
             return format_double(v);
         }));
    return out;
}

} // namespace tsad
