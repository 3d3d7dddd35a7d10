#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tsad/errors.hpp"
#include "tsad/timeseries.hpp"

namespace tsad {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t'))
        ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' ||
                     s[e - 1] == '\n'))
        --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, delimiter))
        cells.push_back(trim(cell));
    if (!line.empty() && line.back() == delimiter)
        cells.emplace_back();
    return cells;
}

bool parse_cell(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

std::string file_stem(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    const std::size_t start = slash == std::string::npos ? 0 : slash + 1;
    const std::size_t dot = path.find_last_of('.');
    if (dot != std::string::npos && dot > start)
        return path.substr(start, dot - start);
    return path.substr(start);
}

} // namespace

TimeSeries load_skab_csv(const std::string& path, char delimiter,
                         const std::string& label_col) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line))
        throw DataError(path + ": empty file, header row required");

    const std::vector<std::string> header = split_line(line, delimiter);
    if (header.size() < 3)
        throw DataError(path + ": header must name a timestamp, a label and features");
    bool header_numeric = true;
    for (const std::string& h : header) {
        double ignored;
        if (h.empty() || !parse_cell(h, ignored)) {
            header_numeric = false;
            break;
        }
    }
    if (header_numeric)
        throw DataError(path + ": first row looks numeric, header row required");

    std::size_t ts_col = 0; // default: first column
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == "datetime")
            ts_col = j;
    std::size_t label_idx = header.size();
    std::size_t changepoint_idx = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == label_col)
            label_idx = j;
        if (header[j] == "changepoint")
            changepoint_idx = j;
    }
    if (label_idx == header.size())
        throw DataError(path + ": no `" + label_col + "` column in header");
    if (label_idx == ts_col)
        throw DataError(path + ": label column collides with timestamp column");

    std::vector<std::size_t> feature_cols;
    std::vector<std::string> feature_names;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == ts_col || j == label_idx || j == changepoint_idx)
            continue;
        feature_cols.push_back(j);
        feature_names.push_back(header[j]);
    }

    std::vector<std::string> timestamps;
    std::vector<std::uint8_t> labels;
    std::vector<double> flat;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty())
            continue;
        const std::vector<std::string> cells = split_line(line, delimiter);
        if (cells.size() != header.size())
            throw DataError(path + ": row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(header.size()));
        for (std::size_t j = 0; j < cells.size(); ++j)
            if (cells[j].empty())
                throw DataError(path + ": missing value at row " +
                                std::to_string(row) + ", column " + header[j]);

        timestamps.push_back(cells[ts_col]);
        double label_value;
        if (!parse_cell(cells[label_idx], label_value) ||
            (label_value != 0.0 && label_value != 1.0))
            throw DataError(path + ": row " + std::to_string(row) +
                            ": label must be 0 or 1, got `" + cells[label_idx] + "`");
        labels.push_back(static_cast<std::uint8_t>(label_value));
        for (std::size_t j : feature_cols) {
            double v;
            if (!parse_cell(cells[j], v))
                throw DataError(path + ": row " + std::to_string(row) +
                                ", column " + header[j] +
                                ": cannot parse `" + cells[j] + "` as a number");
            flat.push_back(v);
        }
    }
    if (timestamps.empty())
        throw DataError(path + ": no data rows");

    TimeSeries ts;
    ts.id = file_stem(path);
    ts.timestamps = std::move(timestamps);
    ts.labels = std::move(labels);
    ts.feature_names = std::move(feature_names);
    ts.values = Matrix(ts.timestamps.size(), feature_cols.size());
    for (std::size_t i = 0; i < ts.values.rows(); ++i)
        for (std::size_t j = 0; j < ts.values.cols(); ++j)
            ts.values(i, j) = flat[i * feature_cols.size() + j];
    ts.validate();
    return ts;
}

} // namespace tsad
