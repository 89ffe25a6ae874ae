#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pgm.hpp"
#include "rng.hpp"

namespace slts {

struct LassoControl {
    double tol = 1e-6;      // relative to the initial smooth-gradient norm
    long max_iter = 10'000;
    double c1 = 2.0;
    double c2 = 1e-4;
    double eta_lo = 1e-10;
    double eta_hi = 1e10;
};

struct LassoResult {
    double beta0 = 0.0;
    Vec beta;
    double objective = 0.0; // 1/4 sum_{rows} r_i^2 + lambda ||beta||_1
    long iterations = 0;
    bool converged = false;
};

/// 1/4 sum_{i in rows} (y_i - b0 - x_i' b)^2 + lambda ||b||_1
inline double subset_lasso_objective(const StrlsProblem& p, std::span<const Index> rows, double beta0,
                                     const Vec& beta) {
    double sq = 0.0;
    for (Index i : rows) {
        double r = p.y()[i] - p.X().row(i).dot(beta);
        if (p.fit_intercept()) r -= beta0;
        sq += r * r;
    }
    return 0.25 * sq + p.lambda() * beta.lpNorm<1>();
}

/// LASSO restricted to `rows`, keeping the 1/4 loss scale of the sparse LTS
/// objective. Proximal gradient with the same vwBB guess and monotone
/// backtracking as the STRLS solver, so the returned objective never exceeds
/// the warm start's.
inline LassoResult lasso_on_subset(const StrlsProblem& p, std::span<const Index> rows, double beta0_warm,
                                   const Vec& beta_warm, const LassoControl& ctl = {}) {
    if (rows.empty()) throw domain_error("lasso_on_subset needs at least one row");
    if (beta_warm.size() != p.d()) throw input_error("warm-start beta has the wrong length");
    const auto m = static_cast<Index>(rows.size());
    Mat Xs(m, p.d());
    Vec ys(m);
    for (Index k = 0; k < m; ++k) {
        const Index i = rows[static_cast<std::size_t>(k)];
        if (i < 0 || i >= p.n()) throw input_error("subset row index out of range");
        Xs.row(k) = p.X().row(i);
        ys[k] = p.y()[i];
    }
    const bool icpt = p.fit_intercept();
    const double lambda = p.lambda();

    struct Point {
        double b0;
        Vec b;
        Vec r;
        double obj;
        double g0;
        Vec g;
    };
    auto make_point = [&](double b0, Vec b) {
        Point q{icpt ? b0 : 0.0, std::move(b), {}, 0.0, 0.0, {}};
        q.r = ys - Xs * q.b;
        if (icpt) q.r.array() -= q.b0;
        q.obj = 0.25 * q.r.squaredNorm() + lambda * q.b.lpNorm<1>();
        q.g0 = icpt ? -0.5 * q.r.sum() : 0.0;
        q.g = -0.5 * (Xs.transpose() * q.r);
        return q;
    };

    Point cur = make_point(beta0_warm, beta_warm);
    const double stop_at = ctl.tol * std::sqrt(cur.g0 * cur.g0 + cur.g.squaredNorm());
    StepState eta;
    eta.eta_lo = ctl.eta_lo;
    eta.eta_hi = ctl.eta_hi;
    Point prev;

    LassoResult res;
    for (long t = 0; t < ctl.max_iter; ++t) {
        if (t > 0) {
            const double dx0 = cur.b0 - prev.b0, dg0 = cur.g0 - prev.g0;
            if (dx0 != 0.0 && dg0 != 0.0) eta.eta_beta0 = detail::clamp_eta(std::abs(dg0) / std::abs(dx0), eta);
            eta.eta_beta = detail::bb_block(cur.b - prev.b, cur.g - prev.g, eta.eta_beta, eta);
        }
        auto step = [&] {
            return make_point(cur.b0 - cur.g0 / eta.eta_beta0,
                              soft_threshold(cur.b - cur.g / eta.eta_beta, lambda / eta.eta_beta));
        };
        Point cand = step();
        bool stalled = false;
        int backtracks = 0;
        for (;;) {
            const double db0 = cand.b0 - cur.b0;
            const double need =
                0.5 * ctl.c2 * (eta.eta_beta0 * db0 * db0 + eta.eta_beta * (cand.b - cur.b).squaredNorm());
            if (cand.obj <= cur.obj - need + accept_slack(cur.obj)) break;
            if (++backtracks > 100) {
                stalled = true;
                break;
            }
            eta.eta_beta0 *= ctl.c1;
            eta.eta_beta *= ctl.c1;
            cand = step();
        }
        if (stalled) break;
        res.iterations = t + 1;
        const double w0 = cand.g0 - cur.g0 - eta.eta_beta0 * (cand.b0 - cur.b0);
        const double w = std::sqrt(w0 * w0 + (cand.g - cur.g - eta.eta_beta * (cand.b - cur.b)).squaredNorm());
        prev = std::move(cur);
        cur = std::move(cand);
        if (w <= stop_at) {
            res.converged = true;
            break;
        }
    }
    res.beta0 = cur.b0;
    res.beta = std::move(cur.b);
    res.objective = cur.obj;
    return res;
}

/// Draws `size` distinct rows and fits the LASSO on them from zero: the
/// elemental starting point used by both multi-start schemes. Start k of a
/// given seed is the same for every caller.
inline LassoResult elemental_start(const StrlsProblem& p, std::uint64_t seed, std::uint64_t start_index,
                                   const LassoControl& ctl = {}, Index size = 3) {
    const Index k = std::min(size, p.n());
    auto rng = make_stream(seed, StreamTag::ElementalStart, start_index);
    std::vector<Index> pool(static_cast<std::size_t>(p.n()));
    for (Index i = 0; i < p.n(); ++i) pool[static_cast<std::size_t>(i)] = i;
    for (Index j = 0; j < k; ++j) {
        std::uniform_int_distribution<Index> pick(j, p.n() - 1);
        std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<Index> rows(pool.begin(), pool.begin() + k);
    std::sort(rows.begin(), rows.end());
    return lasso_on_subset(p, rows, 0.0, Vec::Zero(p.d()), ctl);
}

} // namespace slts
