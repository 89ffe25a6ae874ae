#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "datagen.hpp"
#include "fast_slts.hpp"

namespace slts::io {

using json = nlohmann::json;

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw numeric_error("cannot format double");
    return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw input_error("cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().remove_suffix(1);
    return out;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw input_error("cannot open '" + path + "' for writing");
    return f;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw input_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Dataset: CSV with header y,x1,...,xd; JSON {"y": [...], "X": [[...], ...]}

inline void write_dataset_csv(std::ostream& os, const Dataset& ds) {
    os << "y";
    for (Index j = 0; j < ds.d(); ++j) os << ",x" << (j + 1);
    os << '\n';
    for (Index i = 0; i < ds.n(); ++i) {
        os << format_double(ds.y[i]);
        for (Index j = 0; j < ds.d(); ++j) os << ',' << format_double(ds.X(i, j));
        os << '\n';
    }
}

inline Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw input_error("dataset CSV is empty");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "y") throw input_error("dataset CSV header must start with 'y,x1'");
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (header[j] != "x" + std::to_string(j)) {
            throw input_error("dataset CSV column " + std::to_string(j + 1) + " must be named x" + std::to_string(j));
        }
    }
    const auto d = static_cast<Index>(header.size() - 1);
    std::vector<double> vals;
    Index n = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (static_cast<Index>(cells.size()) != d + 1) {
            throw input_error("dataset CSV row " + std::to_string(n + 2) + " has " + std::to_string(cells.size()) +
                              " fields, expected " + std::to_string(d + 1));
        }
        for (auto c : cells) vals.push_back(parse_double(c));
        ++n;
    }
    Dataset ds;
    ds.y.resize(n);
    ds.X.resize(n, d);
    for (Index i = 0; i < n; ++i) {
        ds.y[i] = vals[static_cast<std::size_t>(i * (d + 1))];
        for (Index j = 0; j < d; ++j) ds.X(i, j) = vals[static_cast<std::size_t>(i * (d + 1) + 1 + j)];
    }
    ds.validate();
    return ds;
}

inline json dataset_to_json(const Dataset& ds) {
    json j;
    j["y"] = std::vector<double>(ds.y.data(), ds.y.data() + ds.n());
    json rows = json::array();
    for (Index i = 0; i < ds.n(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(ds.d()));
        for (Index k = 0; k < ds.d(); ++k) row[static_cast<std::size_t>(k)] = ds.X(i, k);
        rows.push_back(std::move(row));
    }
    j["X"] = std::move(rows);
    if (!ds.meta.empty()) j["meta"] = ds.meta;
    return j;
}

inline Dataset dataset_from_json(const json& j) {
    if (!j.contains("y") || !j.contains("X")) throw input_error("dataset JSON needs fields 'y' and 'X'");
    Dataset ds;
    const auto y = j.at("y").get<std::vector<double>>();
    const auto X = j.at("X").get<std::vector<std::vector<double>>>();
    ds.y = Eigen::Map<const Vec>(y.data(), static_cast<Index>(y.size()));
    const Index d = X.empty() ? 0 : static_cast<Index>(X.front().size());
    ds.X.resize(static_cast<Index>(X.size()), d);
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (static_cast<Index>(X[i].size()) != d) throw input_error("dataset JSON rows of X differ in length");
        for (Index k = 0; k < d; ++k) ds.X(static_cast<Index>(i), k) = X[i][static_cast<std::size_t>(k)];
    }
    if (j.contains("meta")) ds.meta = j.at("meta").get<std::map<std::string, std::string>>();
    ds.validate();
    return ds;
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
    auto f = open_out(path);
    if (path.ends_with(".json")) {
        f << dataset_to_json(ds).dump() << '\n';
    } else {
        write_dataset_csv(f, ds);
    }
}

inline Dataset load_dataset(const std::string& path) {
    if (path.ends_with(".json")) {
        try {
            return dataset_from_json(json::parse(read_file(path)));
        } catch (const json::exception& e) {
            throw input_error("bad dataset JSON '" + path + "': " + e.what());
        }
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) throw input_error("cannot open '" + path + "'");
    return read_dataset_csv(f);
}

inline json truth_to_json(const Truth& t, const GenSpec& spec) {
    json j;
    j["beta0"] = t.beta0;
    j["beta"] = std::vector<double>(t.beta.data(), t.beta.data() + t.beta.size());
    std::vector<int> mask(t.outlier_mask.begin(), t.outlier_mask.end());
    j["outlier_mask"] = mask;
    j["spec"] = {{"n", spec.n},
                 {"d", spec.d},
                 {"rho", spec.rho},
                 {"sparsity_zero_prob", spec.sparsity_zero_prob},
                 {"outlier_frac", spec.outlier_frac},
                 {"outlier_mean", spec.outlier_mean},
                 {"outlier_sd", spec.outlier_sd},
                 {"noise_sd", spec.noise_sd},
                 {"seed", spec.seed}};
    return j;
}

// ---------------------------------------------------------------------------
// Solver outputs

inline constexpr std::string_view kTraceHeader = "t,objective,stationarity,elapsed_s";
inline constexpr std::string_view kStartsHeader = "start,objective,iterations";

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
    os << kTraceHeader << '\n';
    for (const auto& r : trace) {
        os << r.t << ',' << format_double(r.objective) << ',' << format_double(r.stationarity) << ','
           << format_double(r.elapsed_s) << '\n';
    }
}

inline void write_starts_csv(std::ostream& os, const std::vector<StartSummary>& starts) {
    os << kStartsHeader << '\n';
    for (const auto& s : starts) os << s.start << ',' << format_double(s.objective) << ',' << s.iterations << '\n';
}

inline json report_to_json(const SolverReport& rep) {
    json j;
    j["status"] = std::string(to_string(rep.status));
    j["iterations"] = rep.iterations;
    j["objective"] = rep.final.objective;
    j["beta0"] = rep.final.beta0;
    j["beta"] = std::vector<double>(rep.final.beta.data(), rep.final.beta.data() + rep.final.beta.size());
    j["alpha"] = std::vector<double>(rep.final.alpha.data(), rep.final.alpha.data() + rep.final.alpha.size());
    j["linesearch_backtracks_total"] = rep.linesearch_backtracks_total;
    j["descent_violations"] = rep.descent_violations;
    j["initial_grad_norm"] = rep.initial_grad_norm;
    j["final_stationarity"] = rep.final_stationarity;
    j["elapsed_s"] = rep.elapsed_s;
    return j;
}

// ---------------------------------------------------------------------------
// Schema checks for emitted CSV files

/// Throws unless `path` starts with exactly `header` and every data row has
/// the same number of fields, each a parseable number.
inline void validate_csv(const std::string& path, std::string_view header, std::size_t numeric_from = 0) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw input_error("cannot open '" + path + "' for validation");
    std::string line;
    if (!std::getline(f, line) || line != header) {
        throw input_error("'" + path + "' header is '" + line + "', expected '" + std::string(header) + "'");
    }
    const std::size_t cols = split_csv_line(header).size();
    long row = 1;
    while (std::getline(f, line)) {
        ++row;
        const auto cells = split_csv_line(line);
        if (cells.size() != cols) {
            throw input_error("'" + path + "' row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                              " fields, expected " + std::to_string(cols));
        }
        for (std::size_t c = numeric_from; c < cells.size(); ++c) (void)parse_double(cells[c]);
    }
}

} // namespace slts::io
