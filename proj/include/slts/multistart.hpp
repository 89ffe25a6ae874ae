#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <vector>

#include "fast_slts.hpp"

namespace slts {

struct PgmMultiStartResult {
    SolverReport best;
    int best_start = 0;
    std::vector<StartSummary> starts; // objective column holds the STRLS objective
    double elapsed_s = 0.0;
    long descent_violations = 0;
};

/// Starting point with N(0, 1) coefficients and the optimal absorber.
inline Iterate random_start(const StrlsProblem& p, std::uint64_t seed) {
    auto rng = make_stream(seed, StreamTag::SolverInit);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double b0 = p.fit_intercept() ? normal(rng) : 0.0;
    Vec b(p.d());
    for (Index j = 0; j < p.d(); ++j) b[j] = normal(rng);
    return lift_to_strls(p, b0, b);
}

/// Runs the PGM from `n_starts` elemental LASSO starts (shared with
/// fast_slts for the same seed) and keeps the lowest STRLS objective, ties
/// going to the earlier start.
inline PgmMultiStartResult pgm_multistart(const StrlsProblem& p, int n_starts, std::uint64_t seed,
                                          const SolverConfig& cfg, const LassoControl& start_ctl = {},
                                          Index elemental_size = 3) {
    if (n_starts < 1) throw domain_error("n_starts must be >= 1");
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    PgmMultiStartResult res;
    bool have = false;
    for (int s = 0; s < n_starts; ++s) {
        const LassoResult e = elemental_start(p, seed, static_cast<std::uint64_t>(s), start_ctl, elemental_size);
        SolverReport rep = solve(p, lift_to_strls(p, e.beta0, e.beta), cfg);
        res.descent_violations += rep.descent_violations;
        res.starts.push_back({s, rep.final.objective, rep.iterations});
        if (!have || rep.final.objective < res.best.final.objective) {
            res.best = std::move(rep);
            res.best_start = s;
            have = true;
        }
    }
    res.elapsed_s = std::chrono::duration<double>(clock::now() - t0).count();
    return res;
}

} // namespace slts
