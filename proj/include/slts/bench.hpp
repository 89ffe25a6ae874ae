#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "io.hpp"
#include "multistart.hpp"

namespace slts::bench {

struct Size {
    Index n = 0;
    Index d = 0;
};

struct Regime {
    std::string name; // "a" (d = 2n), "b" (n fixed), "c" (d fixed)
    std::vector<Size> sizes;
};

enum class Kind { Trace, Scaling, Compare };

struct ExperimentSpec {
    Kind kind = Kind::Trace;
    std::vector<Size> sizes{{100, 200}, {100, 1000}, {500, 200}, {500, 1000}};
    std::vector<Regime> regimes{
        {"a", {{50, 100}, {100, 200}, {200, 400}}},
        {"b", {{100, 100}, {100, 200}, {100, 400}}},
        {"c", {{100, 200}, {200, 200}, {400, 200}}},
    };
    std::optional<double> lambda; // fixed value; otherwise lambda_ratio * lambda_max
    double lambda_ratio = 0.05;
    double h_frac = 0.75;
    int repeats = 10;
    std::vector<std::uint64_t> seeds{0};
    std::vector<int> start_counts{1, 5, 10, 20, 30};
    GenSpec gen;                  // n, d and seed are overwritten per cell
    SolverConfig solver;          // trace and scaling
    SolverConfig compare_solver = [] {
        SolverConfig c;
        c.t_max = 100'000;
        return c;
    }();
    MultiStartConfig fast;
    LassoControl start_ctl;
    bool mad_constant = false;
    int jobs = 1;
    std::string out_dir = "out";
    std::string format = "csv"; // csv | json

    void validate() const {
        if (repeats < 1) throw domain_error("repeats must be >= 1");
        if (seeds.empty()) throw domain_error("at least one seed is required");
        for (const auto& s : sizes)
            if (s.n < 2 || s.d < 1) throw domain_error("every size needs n >= 2 and d >= 1");
        for (const auto& r : regimes)
            for (const auto& s : r.sizes)
                if (s.n < 2 || s.d < 1) throw domain_error("every size needs n >= 2 and d >= 1");
        for (int k : start_counts)
            if (k < 1) throw domain_error("start counts must be >= 1");
        if (jobs < 1) throw domain_error("jobs must be >= 1");
        if (format != "csv" && format != "json") throw domain_error("format must be csv or json");
    }
};

/// A cell that threw; the rest of the grid still runs.
struct CellFailure {
    std::string cell;
    std::string message;
};

// ---------------------------------------------------------------------------
// Shared preparation

struct Prepared {
    Generated generated;  // raw data and truth
    StrlsProblem problem; // on standardized data
};

inline double resolve_lambda(const ExperimentSpec& spec, const Dataset& standardized) {
    return spec.lambda ? *spec.lambda : spec.lambda_ratio * lambda_max(standardized, true);
}

inline Prepared prepare(const ExperimentSpec& spec, Index n, Index d, std::uint64_t seed) {
    GenSpec g = spec.gen;
    g.n = n;
    g.d = d;
    g.seed = seed;
    Generated gen = generate(g);
    auto [std_data, scale] = robust_standardize(gen.data, spec.mad_constant);
    const double lambda = resolve_lambda(spec, std_data);
    const Index h = trimming_count(n, spec.h_frac);
    StrlsProblem prob(std::move(std_data), h, lambda, true);
    return {std::move(gen), std::move(prob)};
}

/// Runs fn(0..count-1) on up to `jobs` threads.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

inline std::string cell_name(Index n, Index d, std::uint64_t seed) {
    return "n" + std::to_string(n) + "_d" + std::to_string(d) + "_seed" + std::to_string(seed);
}

// ---------------------------------------------------------------------------
// Convergence traces

struct TraceOutcome {
    std::vector<std::string> files;
    std::vector<SolverReport> reports; // same order as files
    std::vector<CellFailure> failures;
};

/// One trace file per (size, seed): PGM from random N(0, 1) coefficients
/// with the optimal absorber.
inline TraceOutcome run_trace(const ExperimentSpec& spec) {
    spec.validate();
    std::filesystem::create_directories(spec.out_dir);
    struct Cell {
        Size size;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (auto seed : spec.seeds)
        for (const auto& s : spec.sizes) cells.push_back({s, seed});

    std::vector<std::optional<SolverReport>> reports(cells.size());
    std::vector<std::string> errors(cells.size());
    SolverConfig cfg = spec.solver;
    cfg.record_trace = true;
    parallel_for(cells.size(), spec.jobs, [&](std::size_t i) {
        try {
            const auto& c = cells[i];
            Prepared prep = prepare(spec, c.size.n, c.size.d, c.seed);
            reports[i] = solve(prep.problem, random_start(prep.problem, c.seed), cfg);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    TraceOutcome out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::string name = cell_name(cells[i].size.n, cells[i].size.d, cells[i].seed);
        if (!reports[i]) {
            out.failures.push_back({name, errors[i]});
            continue;
        }
        const std::string path = (std::filesystem::path(spec.out_dir) / ("trace_" + name + ".csv")).string();
        {
            auto f = io::open_out(path);
            io::write_trace_csv(f, reports[i]->trace);
        }
        io::validate_csv(path, io::kTraceHeader);
        {
            auto f = io::open_out((std::filesystem::path(spec.out_dir) / ("report_" + name + ".json")).string());
            f << io::report_to_json(*reports[i]).dump(2) << '\n';
        }
        out.files.push_back(path);
        out.reports.push_back(std::move(*reports[i]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scaling study

struct ScalingRow {
    std::string regime;
    Index n = 0;
    Index d = 0;
    double mean_s = 0.0;
    double sd_s = 0.0;
};

/// The timed unit of the scaling study. Only this call is inside the clock.
using TimedSolver = std::function<void(const StrlsProblem&, const Iterate&)>;

inline TimedSolver pgm_timed_solver(const SolverConfig& cfg) {
    SolverConfig c = cfg;
    c.record_trace = false;
    return [c](const StrlsProblem& p, const Iterate& init) { (void)solve(p, init, c); };
}

inline constexpr std::string_view kScalingHeader = "regime,n,d,mean_s,sd_s";

struct ScalingOutcome {
    std::vector<ScalingRow> rows;
    std::string file;
    std::vector<CellFailure> failures;
};

/// Mean and sample standard deviation of solve time over `repeats`
/// repetitions (repetition r uses seed seeds[0] + r). Starting points are
/// 3-sample LASSO fits; one untimed warm-up run precedes each size.
inline ScalingOutcome run_scaling(const ExperimentSpec& spec, const TimedSolver& timed = {}) {
    spec.validate();
    std::filesystem::create_directories(spec.out_dir);
    const TimedSolver run = timed ? timed : pgm_timed_solver(spec.solver);
    struct Cell {
        std::string regime;
        Size size;
    };
    std::vector<Cell> cells;
    for (const auto& r : spec.regimes) {
        std::vector<Size> sorted = r.sizes;
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const Size& a, const Size& b) { return a.n + a.d < b.n + b.d; });
        for (const auto& s : sorted) cells.push_back({r.name, s});
    }

    std::vector<std::optional<ScalingRow>> rows(cells.size());
    std::vector<std::string> errors(cells.size());
    // Timing cells are always run one at a time.
    parallel_for(cells.size(), 1, [&](std::size_t i) {
        try {
            const auto& c = cells[i];
            std::vector<double> times;
            for (int r = -1; r < spec.repeats; ++r) {
                const std::uint64_t seed = spec.seeds.front() + static_cast<std::uint64_t>(std::max(r, 0));
                Prepared prep = prepare(spec, c.size.n, c.size.d, seed);
                const LassoResult e = elemental_start(prep.problem, seed, 0, spec.start_ctl);
                const Iterate init = lift_to_strls(prep.problem, e.beta0, e.beta);
                const auto t0 = std::chrono::steady_clock::now();
                run(prep.problem, init);
                const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                if (r >= 0) times.push_back(dt);
            }
            double mean = 0.0;
            for (double t : times) mean += t;
            mean /= static_cast<double>(times.size());
            double var = 0.0;
            for (double t : times) var += (t - mean) * (t - mean);
            const double sd = times.size() > 1 ? std::sqrt(var / static_cast<double>(times.size() - 1)) : 0.0;
            rows[i] = ScalingRow{c.regime, c.size.n, c.size.d, mean, sd};
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    ScalingOutcome out;
    out.file = (std::filesystem::path(spec.out_dir) / "scaling.csv").string();
    auto f = io::open_out(out.file);
    f << kScalingHeader << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!rows[i]) {
            out.failures.push_back({cells[i].regime + "_" + cell_name(cells[i].size.n, cells[i].size.d,
                                                                      spec.seeds.front()),
                                    errors[i]});
            continue;
        }
        const auto& r = *rows[i];
        f << r.regime << ',' << r.n << ',' << r.d << ',' << io::format_double(r.mean_s) << ','
          << io::format_double(r.sd_s) << '\n';
        out.rows.push_back(r);
    }
    f.close();
    io::validate_csv(out.file, kScalingHeader, 1);
    return out;
}

// ---------------------------------------------------------------------------
// Comparison with FAST-SLTS

struct CompareRow {
    int starts = 0;
    std::uint64_t seed = 0;
    double time_ratio = 0.0;      // PGM time / FAST-SLTS time
    double objective_ratio = 0.0; // PGM STRLS objective / FAST-SLTS STRLS objective
    double pgm_objective = 0.0;
    double fast_objective = 0.0;
    double pgm_s = 0.0;
    double fast_s = 0.0;
};

struct RatioSummary {
    double gmean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct CompareSummaryRow {
    int starts = 0;
    RatioSummary time;
    RatioSummary objective;
};

/// Geometric mean, min and max of positive ratios.
inline RatioSummary summarize_ratios(const std::vector<double>& v) {
    if (v.empty()) throw domain_error("no ratios to summarize");
    double log_sum = 0.0;
    RatioSummary s{0.0, v.front(), v.front()};
    for (double x : v) {
        if (!(x > 0.0)) throw domain_error("ratios must be positive");
        log_sum += std::log(x);
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.gmean = std::exp(log_sum / static_cast<double>(v.size()));
    return s;
}

inline std::vector<CompareSummaryRow> summarize_compare(const std::vector<CompareRow>& rows,
                                                        const std::vector<int>& start_counts) {
    std::vector<CompareSummaryRow> out;
    for (int k : start_counts) {
        std::vector<double> tr, orat;
        for (const auto& r : rows) {
            if (r.starts != k) continue;
            tr.push_back(r.time_ratio);
            orat.push_back(r.objective_ratio);
        }
        if (tr.empty()) continue;
        out.push_back({k, summarize_ratios(tr), summarize_ratios(orat)});
    }
    return out;
}

inline constexpr std::string_view kCompareRowsHeader =
    "starts,seed,time_ratio,objective_ratio,pgm_objective,fast_objective,pgm_s,fast_s";
inline constexpr std::string_view kCompareSummaryHeader =
    "starts,time_gmean,time_min,time_max,obj_gmean,obj_min,obj_max";
inline constexpr std::string_view kFastStartsHeader = io::kStartsHeader;

struct CompareOutcome {
    std::vector<CompareRow> rows;
    std::vector<CompareSummaryRow> summary;
    std::vector<std::string> files;
    long descent_violations = 0;
    std::vector<CellFailure> failures;
};

/// Per seed (first size only): FAST-SLTS with the configured multi-start
/// scheme against the PGM from k elemental starts for each k in
/// start_counts. Starts are nested, so the k-start PGM result is the best of
/// the first k starts and its time is the sum of their times.
inline CompareOutcome run_compare(const ExperimentSpec& spec) {
    spec.validate();
    std::filesystem::create_directories(spec.out_dir);
    const Size size = spec.sizes.front();
    const int kmax = *std::max_element(spec.start_counts.begin(), spec.start_counts.end());
    SolverConfig cfg = spec.compare_solver;
    cfg.record_trace = false;

    struct SeedResult {
        std::vector<CompareRow> rows;
        std::vector<StartSummary> fast_starts;
        long violations = 0;
    };
    std::vector<std::optional<SeedResult>> results(spec.seeds.size());
    std::vector<std::string> errors(spec.seeds.size());
    parallel_for(spec.seeds.size(), spec.jobs, [&](std::size_t i) {
        try {
            const std::uint64_t seed = spec.seeds[i];
            Prepared prep = prepare(spec, size.n, size.d, seed);
            const StrlsProblem& p = prep.problem;

            MultiStartConfig ms = spec.fast;
            ms.seed = seed;
            const FastSltsResult fast = fast_slts(p, ms);

            std::vector<double> obj(static_cast<std::size_t>(kmax)), secs(static_cast<std::size_t>(kmax));
            SeedResult sr;
            for (int s = 0; s < kmax; ++s) {
                const auto t0 = std::chrono::steady_clock::now();
                const LassoResult e = elemental_start(p, seed, static_cast<std::uint64_t>(s), spec.start_ctl);
                const SolverReport rep = solve(p, lift_to_strls(p, e.beta0, e.beta), cfg);
                secs[static_cast<std::size_t>(s)] =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                obj[static_cast<std::size_t>(s)] = rep.final.objective;
                sr.violations += rep.descent_violations;
            }
            for (int k : spec.start_counts) {
                double best = obj[0], total = 0.0;
                for (int s = 0; s < k; ++s) {
                    best = std::min(best, obj[static_cast<std::size_t>(s)]);
                    total += secs[static_cast<std::size_t>(s)];
                }
                CompareRow row;
                row.starts = k;
                row.seed = seed;
                row.pgm_objective = best;
                row.fast_objective = fast.report.final.objective;
                row.pgm_s = total;
                row.fast_s = fast.report.elapsed_s;
                row.objective_ratio = best / fast.report.final.objective;
                row.time_ratio = total / fast.report.elapsed_s;
                sr.rows.push_back(row);
            }
            sr.fast_starts = fast.starts;
            results[i] = std::move(sr);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    CompareOutcome out;
    const std::filesystem::path dir(spec.out_dir);
    for (std::size_t i = 0; i < spec.seeds.size(); ++i) {
        if (!results[i]) {
            out.failures.push_back({cell_name(size.n, size.d, spec.seeds[i]), errors[i]});
            continue;
        }
        out.descent_violations += results[i]->violations;
        for (const auto& r : results[i]->rows) out.rows.push_back(r);
        const std::string sp = (dir / ("fast_starts_seed" + std::to_string(spec.seeds[i]) + ".csv")).string();
        {
            auto f = io::open_out(sp);
            io::write_starts_csv(f, results[i]->fast_starts);
        }
        io::validate_csv(sp, io::kStartsHeader);
        out.files.push_back(sp);
    }
    std::stable_sort(out.rows.begin(), out.rows.end(),
                     [](const CompareRow& a, const CompareRow& b) { return a.starts < b.starts; });
    if (!out.rows.empty()) out.summary = summarize_compare(out.rows, spec.start_counts);

    const std::string rows_path = (dir / "compare_rows.csv").string();
    {
        auto f = io::open_out(rows_path);
        f << kCompareRowsHeader << '\n';
        for (const auto& r : out.rows) {
            f << r.starts << ',' << r.seed << ',' << io::format_double(r.time_ratio) << ','
              << io::format_double(r.objective_ratio) << ',' << io::format_double(r.pgm_objective) << ','
              << io::format_double(r.fast_objective) << ',' << io::format_double(r.pgm_s) << ','
              << io::format_double(r.fast_s) << '\n';
        }
    }
    io::validate_csv(rows_path, kCompareRowsHeader);
    const std::string sum_path = (dir / "compare_summary.csv").string();
    {
        auto f = io::open_out(sum_path);
        f << kCompareSummaryHeader << '\n';
        for (const auto& s : out.summary) {
            f << s.starts << ',' << io::format_double(s.time.gmean) << ',' << io::format_double(s.time.min) << ','
              << io::format_double(s.time.max) << ',' << io::format_double(s.objective.gmean) << ','
              << io::format_double(s.objective.min) << ',' << io::format_double(s.objective.max) << '\n';
        }
    }
    io::validate_csv(sum_path, kCompareSummaryHeader);
    out.files.push_back(rows_path);
    out.files.push_back(sum_path);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation helpers

/// Median |y_i - b0 - x_i' b| over rows not flagged in `outlier_mask`.
inline double clean_median_abs_residual(const Dataset& data, const std::vector<char>& outlier_mask, double beta0,
                                        const Vec& beta) {
    const Vec r = (data.y - data.X * beta).array() - beta0;
    std::vector<double> clean;
    for (Index i = 0; i < data.n(); ++i)
        if (!outlier_mask[static_cast<std::size_t>(i)]) clean.push_back(std::abs(r[i]));
    return median(std::move(clean));
}

/// Table-style text: one line per start count, "gmean (min, max)".
inline std::string format_table(const std::vector<CompareSummaryRow>& summary) {
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", v);
        return std::string(buf);
    };
    std::string out = "starts | CPU time ratio gmean (min, max) | objective ratio gmean (min, max)\n";
    for (const auto& s : summary) {
        out += std::to_string(s.starts) + " | " + fmt(s.time.gmean) + " (" + fmt(s.time.min) + ", " +
               fmt(s.time.max) + ") | " + fmt(s.objective.gmean) + " (" + fmt(s.objective.min) + ", " +
               fmt(s.objective.max) + ")\n";
    }
    return out;
}

} // namespace slts::bench
