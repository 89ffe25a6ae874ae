#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string_view>
#include <vector>

#include "problem.hpp"

namespace slts {

/// Inverse stepsizes for the three blocks plus the box [eta_lo, eta_hi] that
/// the per-iteration initial guess is clamped to.
struct StepState {
    double eta_beta0 = 1.0;
    double eta_beta = 1.0;
    double eta_alpha = 1.0;
    double eta_lo = 1e-10;
    double eta_hi = 1e10;

    void scale(double c) {
        eta_beta0 *= c;
        eta_beta *= c;
        eta_alpha *= c;
    }
};

struct SolverConfig {
    double c1 = 2.0;
    double c2 = 1e-4;
    double eta_lo = 1e-10;
    double eta_hi = 1e10;
    double tol_rel = 1e-6;
    long t_max = 1'000'000;
    int linesearch_cap = 100;
    bool record_trace = true;

    void validate() const {
        if (!(c1 > 1.0)) throw domain_error("c1 must exceed 1");
        if (!(c2 > 0.0 && c2 < 1.0)) throw domain_error("c2 must lie in (0, 1)");
        if (!(eta_lo > 0.0 && eta_hi >= eta_lo)) throw domain_error("need 0 < eta_lo <= eta_hi");
        if (!(tol_rel >= 0.0)) throw domain_error("tol_rel must be >= 0");
        if (t_max < 1) throw domain_error("t_max must be >= 1");
        if (linesearch_cap < 0) throw domain_error("linesearch_cap must be >= 0");
    }
};

enum class SolverStatus { Converged, MaxIterations, LinesearchStalled };

inline std::string_view to_string(SolverStatus s) {
    switch (s) {
    case SolverStatus::Converged: return "Converged";
    case SolverStatus::MaxIterations: return "MaxIterations";
    case SolverStatus::LinesearchStalled: return "LinesearchStalled";
    }
    return "Unknown";
}

/// One accepted iteration. Row t = 0 describes the starting point; its
/// stationarity column holds ||grad l(init)||, the scale of the stopping rule.
struct TraceRow {
    long t = 0;
    double objective = 0.0;
    double stationarity = 0.0;
    double elapsed_s = 0.0;
    // (c2/2) ||delta||^2_eta demanded by the acceptance test for this step.
    double required_decrease = 0.0;
    int backtracks = 0;
};

struct SolverReport {
    SolverStatus status = SolverStatus::MaxIterations;
    long iterations = 0;
    Iterate final;
    std::vector<TraceRow> trace;
    long linesearch_backtracks_total = 0;
    // Accepted steps whose decrease fell short of (c2/2)||delta||^2_eta by more than 1e-10.
    long descent_violations = 0;
    double initial_grad_norm = 0.0;
    double final_stationarity = 0.0;
    double elapsed_s = 0.0;
};

/// (c2/2) * (eta_b0 d_b0^2 + eta_b ||d_b||^2 + eta_a ||d_a||^2)
inline double required_decrease(const Iterate& old, const Iterate& cand, const StepState& eta, double c2) {
    const double db0 = cand.beta0 - old.beta0;
    const double dist = eta.eta_beta0 * db0 * db0 + eta.eta_beta * (cand.beta - old.beta).squaredNorm() +
                        eta.eta_alpha * (cand.alpha - old.alpha).squaredNorm();
    return 0.5 * c2 * dist;
}

/// Candidate from one proximal gradient step with inverse stepsizes eta,
/// using a precomputed gradient at `it`.
inline Iterate pgm_step(const StrlsProblem& p, const Iterate& it, const SmoothGradient& g, const StepState& eta) {
    if (!(eta.eta_beta0 > 0.0 && eta.eta_beta > 0.0 && eta.eta_alpha > 0.0)) {
        throw domain_error("inverse stepsizes must be positive");
    }
    const double b0 = p.fit_intercept() ? it.beta0 - g.beta0 / eta.eta_beta0 : 0.0;
    Vec b = soft_threshold(it.beta - g.beta / eta.eta_beta, p.lambda() / eta.eta_beta);
    Vec a_arg = it.alpha - g.alpha / eta.eta_alpha;
    if (!std::isfinite(b0) || !b.allFinite() || !a_arg.allFinite()) {
        throw numeric_error("proximal gradient step produced a non-finite candidate");
    }
    ProxResult a = prox_trimmed_squares(a_arg, p.h(), 0.5 / eta.eta_alpha);
    Iterate cand = make_iterate(p, b0, std::move(b), std::move(a.point));
    if (!std::isfinite(cand.objective)) throw numeric_error("candidate objective is not finite");
    return cand;
}

inline Iterate pgm_step(const StrlsProblem& p, const Iterate& it, const StepState& eta) {
    return pgm_step(p, it, grad_smooth(p, it), eta);
}

/// Rounding allowance of the acceptance test: 1e-12 * max(1, |L|), capped at 1e-10.
inline double accept_slack(double objective) { return std::min(1e-10, 1e-12 * std::max(1.0, std::abs(objective))); }

/// Sufficient-decrease test L(cand) <= L(old) - (c2/2)||delta||^2_eta + accept_slack(L(old)).
inline bool accept_test(const Iterate& old, const Iterate& cand, const StepState& eta, double c2) {
    return cand.objective <= old.objective - required_decrease(old, cand, eta, c2) + accept_slack(old.objective);
}

inline bool accept_test(const StrlsProblem& p, const Iterate& old, const Iterate& cand, const StepState& eta,
                        double c2) {
    (void)p;
    return accept_test(old, cand, eta, c2);
}

namespace detail {

inline double clamp_eta(double v, const StepState& s) { return std::min(s.eta_hi, std::max(s.eta_lo, v)); }

// Block curvature <dg, dx>/||dx||^2, or the fallback when it is not positive.
inline double bb_block(const Vec& dx, const Vec& dg, double fallback, const StepState& s) {
    const double dxx = dx.squaredNorm();
    if (dxx == 0.0) return fallback;
    const double curv = dg.dot(dx);
    if (!(curv > 0.0)) return fallback;
    return clamp_eta(curv / dxx, s);
}

} // namespace detail

/// Variable-wise Barzilai-Borwein guess for the inverse stepsizes.
///
/// `last` carries the previous accepted stepsizes and the clamp box. A block
/// whose iterate did not move, or whose curvature estimate is not positive,
/// keeps its previous value.
inline StepState bb_init(const Iterate& prev, const Iterate& cur, const SmoothGradient& grad_prev,
                         const SmoothGradient& grad_cur, const StepState& last) {
    StepState s = last;
    const double dx0 = cur.beta0 - prev.beta0;
    const double dg0 = grad_cur.beta0 - grad_prev.beta0;
    if (dx0 != 0.0 && dg0 != 0.0) s.eta_beta0 = detail::clamp_eta(std::abs(dg0) / std::abs(dx0), s);
    s.eta_beta = detail::bb_block(cur.beta - prev.beta, grad_cur.beta - grad_prev.beta, last.eta_beta, s);
    s.eta_alpha = detail::bb_block(cur.alpha - prev.alpha, grad_cur.alpha - grad_prev.alpha, last.eta_alpha, s);
    return s;
}

/// ||w|| with w = grad l(cur) - grad l(prev) - (eta_b0 d_b0, eta_b d_b, eta_a d_a).
inline double stationarity_measure(const Iterate& prev, const Iterate& cur, const SmoothGradient& grad_prev,
                                   const SmoothGradient& grad_cur, const StepState& eta_used) {
    const double w0 = grad_cur.beta0 - grad_prev.beta0 - eta_used.eta_beta0 * (cur.beta0 - prev.beta0);
    const double wb = (grad_cur.beta - grad_prev.beta - eta_used.eta_beta * (cur.beta - prev.beta)).squaredNorm();
    const double wa =
        (grad_cur.alpha - grad_prev.alpha - eta_used.eta_alpha * (cur.alpha - prev.alpha)).squaredNorm();
    return std::sqrt(w0 * w0 + wb + wa);
}

inline double stationarity_measure(const StrlsProblem& p, const Iterate& prev, const Iterate& cur,
                                   const StepState& eta_used) {
    return stationarity_measure(prev, cur, grad_smooth(p, prev), grad_smooth(p, cur), eta_used);
}

/// Called after every accepted iteration with (t, iterate, stepsizes used).
using IterationObserver = std::function<void(long, const Iterate&, const StepState&)>;

/// Proximal gradient method with vwBB initialization and backtracking.
///
/// Each outer iteration starts from the BB guess (all ones at t = 0) and
/// multiplies all three inverse stepsizes by c1 until the sufficient-decrease
/// test passes. Stops when ||w|| <= tol_rel * ||grad l(init)||.
inline SolverReport solve(const StrlsProblem& p, const Iterate& init, const SolverConfig& cfg,
                          const IterationObserver& observer = {}) {
    cfg.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    auto seconds = [&start] { return std::chrono::duration<double>(clock::now() - start).count(); };

    SolverReport rep;
    Iterate cur = make_iterate(p, init.beta0, init.beta, init.alpha);
    if (!std::isfinite(cur.objective)) throw input_error("initial iterate has non-finite objective");
    SmoothGradient g_cur = grad_from_residual(p, cur.residual);
    rep.initial_grad_norm = g_cur.norm();
    const double stop_at = cfg.tol_rel * rep.initial_grad_norm;

    if (cfg.record_trace) rep.trace.push_back({0, cur.objective, rep.initial_grad_norm, 0.0, 0.0, 0});

    StepState eta;
    eta.eta_lo = cfg.eta_lo;
    eta.eta_hi = cfg.eta_hi;
    eta.eta_beta0 = eta.eta_beta = eta.eta_alpha = detail::clamp_eta(1.0, eta);
    Iterate prev;
    SmoothGradient g_prev;

    for (long t = 0; t < cfg.t_max; ++t) {
        if (t > 0) eta = bb_init(prev, cur, g_prev, g_cur, eta);

        Iterate cand = pgm_step(p, cur, g_cur, eta);
        int backtracks = 0;
        while (!accept_test(cur, cand, eta, cfg.c2)) {
            if (backtracks == cfg.linesearch_cap) {
                rep.status = SolverStatus::LinesearchStalled;
                rep.iterations = t;
                rep.final = std::move(cur);
                rep.elapsed_s = seconds();
                return rep;
            }
            eta.scale(cfg.c1);
            cand = pgm_step(p, cur, g_cur, eta);
            ++backtracks;
        }
        rep.linesearch_backtracks_total += backtracks;
        const double needed = required_decrease(cur, cand, eta, cfg.c2);
        if (cand.objective > cur.objective - needed + 1e-10) ++rep.descent_violations;

        prev = std::move(cur);
        g_prev = std::move(g_cur);
        cur = std::move(cand);
        g_cur = grad_from_residual(p, cur.residual);
        const double w = stationarity_measure(prev, cur, g_prev, g_cur, eta);
        rep.final_stationarity = w;
        rep.iterations = t + 1;

        if (cfg.record_trace) rep.trace.push_back({t + 1, cur.objective, w, seconds(), needed, backtracks});
        if (observer) observer(t + 1, cur, eta);

        if (w <= stop_at) {
            rep.status = SolverStatus::Converged;
            break;
        }
    }
    rep.final = std::move(cur);
    rep.elapsed_s = seconds();
    return rep;
}

} // namespace slts
