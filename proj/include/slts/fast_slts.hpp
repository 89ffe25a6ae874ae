#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lasso.hpp"

namespace slts {

/// FAST-SLTS baseline: alternate between the concentration step (keep the h
/// best-fitting samples) and a LASSO fit on the kept samples.
struct Subset {
    std::vector<Index> indices; // ascending, size h

    bool operator==(const Subset&) const = default;
};

struct MultiStartConfig {
    int n_starts = 500;
    int warm_iters = 2;
    int n_keep = 10;
    double inner_tol = 1e-6;
    long inner_max_iter = 10'000;
    int max_alternations = 100;
    Index elemental_size = 3;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_starts < 1) throw domain_error("n_starts must be >= 1");
        if (n_keep < 1 || n_keep > n_starts) throw domain_error("need 1 <= n_keep <= n_starts");
        if (warm_iters < 0 || max_alternations < 1) throw domain_error("invalid alternation counts");
    }

    LassoControl inner() const {
        LassoControl c;
        c.tol = inner_tol;
        c.max_iter = inner_max_iter;
        return c;
    }
};

struct StartSummary {
    int start = 0;
    double objective = 0.0; // sparse LTS objective at the end of this start's run
    long iterations = 0;    // alternations performed
};

struct FastSltsResult {
    SolverReport report; // final = lifted best solution, objective = STRLS objective
    std::vector<StartSummary> starts;
    int best_start = 0;
    double slts_objective = 0.0;
};

/// Concentration step: the h samples with smallest |y_i - b0 - x_i' b|.
inline Subset c_step(const StrlsProblem& p, double beta0, const Vec& beta) {
    const Vec r = detail::fit_residual(p, beta0, beta);
    return Subset{select_trim(r, p.h()).kept_indices};
}

namespace detail {

struct Alternation {
    double beta0;
    Vec beta;
    double objective; // sparse LTS
    Subset subset;
    long iterations = 0;
    bool settled = false;
};

// Up to `max_steps` (c_step, lasso) pairs, stopping early when the subset
// repeats or the objective stalls.
inline Alternation alternate(const StrlsProblem& p, double beta0, Vec beta, int max_steps, const LassoControl& ctl) {
    Alternation a{beta0, std::move(beta), 0.0, {}, 0, false};
    a.objective = slts_objective(p, a.beta0, a.beta);
    for (int k = 0; k < max_steps; ++k) {
        Subset s = c_step(p, a.beta0, a.beta);
        if (k > 0 && s == a.subset) {
            a.settled = true;
            break;
        }
        LassoResult fit = lasso_on_subset(p, s.indices, a.beta0, a.beta, ctl);
        const double obj = slts_objective(p, fit.beta0, fit.beta);
        const double decrease = a.objective - obj;
        ++a.iterations;
        a.subset = std::move(s);
        // Rounding inside the inner solver can break exact monotonicity; never
        // step to a worse point.
        if (obj <= a.objective) {
            a.beta0 = fit.beta0;
            a.beta = std::move(fit.beta);
            a.objective = obj;
        }
        if (decrease < 1e-10 * std::max(1.0, std::abs(a.objective))) {
            a.settled = true;
            break;
        }
    }
    return a;
}

} // namespace detail

struct CoefficientStart {
    double beta0 = 0.0;
    Vec beta;
};

/// Multi-start FAST-SLTS: `n_starts` elemental starts run `warm_iters`
/// alternations each, the `n_keep` best (by sparse LTS objective, then start
/// index) are alternated to convergence, and the best result is lifted to the
/// STRLS problem. `explicit_starts`, when non-empty, replaces the elemental
/// draws.
inline FastSltsResult fast_slts(const StrlsProblem& p, const MultiStartConfig& ms,
                                std::span<const CoefficientStart> explicit_starts = {}) {
    ms.validate();
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const LassoControl ctl = ms.inner();

    const int total = explicit_starts.empty() ? ms.n_starts : static_cast<int>(explicit_starts.size());
    const int keep = std::min(ms.n_keep, total);

    std::vector<detail::Alternation> warm;
    warm.reserve(static_cast<std::size_t>(total));
    for (int s = 0; s < total; ++s) {
        CoefficientStart st;
        if (explicit_starts.empty()) {
            LassoResult e = elemental_start(p, ms.seed, static_cast<std::uint64_t>(s), ctl, ms.elemental_size);
            st = {e.beta0, std::move(e.beta)};
        } else {
            st = explicit_starts[static_cast<std::size_t>(s)];
        }
        warm.push_back(detail::alternate(p, st.beta0, std::move(st.beta), ms.warm_iters, ctl));
    }

    std::vector<int> order(static_cast<std::size_t>(total));
    for (int s = 0; s < total; ++s) order[static_cast<std::size_t>(s)] = s;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return warm[static_cast<std::size_t>(a)].objective < warm[static_cast<std::size_t>(b)].objective;
    });

    FastSltsResult res;
    res.starts.resize(static_cast<std::size_t>(total));
    for (int s = 0; s < total; ++s) {
        res.starts[static_cast<std::size_t>(s)] = {s, warm[static_cast<std::size_t>(s)].objective,
                                                   warm[static_cast<std::size_t>(s)].iterations};
    }

    std::optional<detail::Alternation> best;
    bool best_settled = false;
    for (int k = 0; k < keep; ++k) {
        const int s = order[static_cast<std::size_t>(k)];
        auto& w = warm[static_cast<std::size_t>(s)];
        detail::Alternation fin = detail::alternate(p, w.beta0, w.beta, ms.max_alternations, ctl);
        auto& row = res.starts[static_cast<std::size_t>(s)];
        row.objective = fin.objective;
        row.iterations += fin.iterations;
        if (!best || fin.objective < best->objective ||
            (fin.objective == best->objective && s < res.best_start)) {
            best_settled = fin.settled;
            fin.iterations = row.iterations;
            best = std::move(fin);
            res.best_start = s;
        }
    }

    res.slts_objective = best->objective;
    res.report.final = lift_to_strls(p, best->beta0, best->beta);
    res.report.iterations = best->iterations;
    res.report.status = best_settled ? SolverStatus::Converged : SolverStatus::MaxIterations;
    res.report.elapsed_s = std::chrono::duration<double>(clock::now() - t0).count();
    return res;
}

} // namespace slts
