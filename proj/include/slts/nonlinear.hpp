#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <utility>

#include "pgm.hpp"

namespace slts {

/// Differentiable regression model beta -> f_beta(X) in R^n.
///
/// `grad_adjoint(beta, X, v)` must return J' v, where J is the n x p Jacobian
/// of beta -> f_beta(X). It must be linear in v.
struct ModelSpec {
    std::function<Vec(const Vec& beta, const Mat& X)> predict;
    std::function<Vec(const Vec& beta, const Mat& X, const Vec& v)> grad_adjoint;
    Index param_dim = 0;
};

/// Proximable penalty P. Plugins must be bounded below by `lower_bound`,
/// lower semicontinuous and continuous on their domain; `prox(z, c)` returns
/// one deterministic member of prox_{cP}(z).
struct PenaltySpec {
    std::function<double(const Vec& beta)> value;
    std::function<Vec(const Vec& z, double c)> prox;
    double lower_bound = 0.0;
};

/// 1/2 ||y - f_beta(X) - a||^2 + 1/2 T_h(a) + lambda P(beta)
class TrimmedProblem {
public:
    TrimmedProblem(Dataset data, ModelSpec model, PenaltySpec penalty, Index h, double lambda)
        : data_(std::move(data)), model_(std::move(model)), penalty_(std::move(penalty)), h_(h), lambda_(lambda) {
        data_.validate();
        if (h_ < 1 || h_ > data_.n()) throw domain_error("trimming count outside [1, n]");
        if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw domain_error("lambda must be finite and >= 0");
        if (!model_.predict || !model_.grad_adjoint || model_.param_dim < 1) {
            throw input_error("model plugin is incomplete");
        }
        if (!penalty_.value || !penalty_.prox) throw input_error("penalty plugin is incomplete");
    }

    const Dataset& data() const { return data_; }
    const ModelSpec& model() const { return model_; }
    const PenaltySpec& penalty() const { return penalty_; }
    Index h() const { return h_; }
    double lambda() const { return lambda_; }

private:
    Dataset data_;
    ModelSpec model_;
    PenaltySpec penalty_;
    Index h_;
    double lambda_;
};

// ---------------------------------------------------------------------------
// Built-in plugins

/// f_beta(X) = X beta
inline ModelSpec linear_model(Index d) {
    ModelSpec m;
    m.param_dim = d;
    m.predict = [](const Vec& beta, const Mat& X) -> Vec { return X * beta; };
    m.grad_adjoint = [](const Vec&, const Mat& X, const Vec& v) -> Vec { return X.transpose() * v; };
    return m;
}

/// f_beta(x) = beta[0] * exp(-beta[1:]' x), parameter dimension d + 1.
inline ModelSpec exp_decay_model(Index d) {
    ModelSpec m;
    m.param_dim = d + 1;
    m.predict = [](const Vec& beta, const Mat& X) -> Vec {
        const Vec e = (-(X * beta.tail(beta.size() - 1))).array().exp();
        return beta[0] * e;
    };
    m.grad_adjoint = [](const Vec& beta, const Mat& X, const Vec& v) -> Vec {
        const Vec e = (-(X * beta.tail(beta.size() - 1))).array().exp();
        Vec out(beta.size());
        out[0] = e.dot(v);
        out.tail(beta.size() - 1) = -beta[0] * (X.transpose() * e.cwiseProduct(v));
        return out;
    };
    return m;
}

inline PenaltySpec l1_penalty() {
    PenaltySpec p;
    p.value = [](const Vec& b) { return b.lpNorm<1>(); };
    p.prox = [](const Vec& z, double c) -> Vec { return soft_threshold(z, c); };
    p.lower_bound = 0.0;
    return p;
}

inline PenaltySpec zero_penalty() {
    PenaltySpec p;
    p.value = [](const Vec&) { return 0.0; };
    p.prox = [](const Vec& z, double) -> Vec { return z; };
    p.lower_bound = 0.0;
    return p;
}

/// Indicator of the box [lo, hi]^p.
inline PenaltySpec box_penalty(double lo, double hi) {
    if (!(lo <= hi)) throw domain_error("box penalty needs lo <= hi");
    PenaltySpec p;
    p.value = [lo, hi](const Vec& b) {
        const bool inside = (b.array() >= lo).all() && (b.array() <= hi).all();
        return inside ? 0.0 : std::numeric_limits<double>::infinity();
    };
    p.prox = [lo, hi](const Vec& z, double) -> Vec { return z.cwiseMax(lo).cwiseMin(hi); };
    p.lower_bound = 0.0;
    return p;
}

// ---------------------------------------------------------------------------
// Objective and step

namespace detail {

inline double penalty_term(double lambda, double value) { return lambda == 0.0 ? 0.0 : lambda * value; }

inline void check_nonlinear_dims(const TrimmedProblem& p, const Vec& beta, const Vec& alpha) {
    if (beta.size() != p.model().param_dim) throw input_error("beta length does not match model param_dim");
    if (alpha.size() != p.data().n()) throw input_error("alpha length does not match sample count");
}

} // namespace detail

/// L~(beta, a); +inf when beta leaves the penalty's domain.
inline double eval_tilde_objective(const ModelSpec& model, const PenaltySpec& penalty, const Dataset& data,
                                   const Vec& beta, const Vec& alpha, Index h, double lambda) {
    const Vec r = data.y - model.predict(beta, data.X) - alpha;
    if (r.size() != data.n()) throw input_error("model prediction length does not match sample count");
    return 0.5 * r.squaredNorm() + 0.5 * trimmed_squares(alpha, h) + detail::penalty_term(lambda, penalty.value(beta));
}

/// State of the two-block method. Stored as an Iterate with beta0 fixed at 0
/// so reports share one shape with the linear solver.
inline Iterate make_state(const TrimmedProblem& p, Vec beta, Vec alpha) {
    detail::check_nonlinear_dims(p, beta, alpha);
    Iterate s;
    s.beta = std::move(beta);
    s.alpha = std::move(alpha);
    s.residual = p.data().y - p.model().predict(s.beta, p.data().X) - s.alpha;
    s.objective = 0.5 * s.residual.squaredNorm() + 0.5 * trimmed_squares(s.alpha, p.h()) +
                  detail::penalty_term(p.lambda(), p.penalty().value(s.beta));
    return s;
}

/// (grad_beta l~, grad_a l~) = (-J' r, -r); beta0 component unused.
inline SmoothGradient nonlinear_gradient(const TrimmedProblem& p, const Iterate& s) {
    SmoothGradient g;
    g.beta = -p.model().grad_adjoint(s.beta, p.data().X, s.residual);
    g.alpha = -s.residual;
    return g;
}

/// Completes beta with a = prox_{T_h / 2}(y - f_beta(X)).
inline Iterate lift_nonlinear(const TrimmedProblem& p, const Vec& beta) {
    const Vec r = p.data().y - p.model().predict(beta, p.data().X);
    return make_state(p, beta, prox_trimmed_squares(r, p.h(), 0.5).point);
}

/// Prox step on the beta block through the penalty plugin and on the absorber
/// through the trimmed-squares prox. eta.eta_beta0 is ignored.
inline Iterate nonlinear_pgm_step(const TrimmedProblem& p, const Iterate& s, const SmoothGradient& g,
                                  const StepState& eta) {
    if (!(eta.eta_beta > 0.0 && eta.eta_alpha > 0.0)) throw domain_error("inverse stepsizes must be positive");
    Vec b_arg = s.beta - g.beta / eta.eta_beta;
    Vec a_arg = s.alpha - g.alpha / eta.eta_alpha;
    if (!b_arg.allFinite() || !a_arg.allFinite()) throw numeric_error("nonlinear step produced a non-finite point");
    Vec b = p.penalty().prox(b_arg, p.lambda() / eta.eta_beta);
    if (!b.allFinite()) throw numeric_error("penalty prox returned a non-finite point");
    ProxResult a = prox_trimmed_squares(a_arg, p.h(), 0.5 / eta.eta_alpha);
    Iterate next = make_state(p, std::move(b), std::move(a.point));
    if (std::isnan(next.objective) || !next.residual.allFinite()) {
        throw numeric_error("candidate objective is not finite");
    }
    return next;
}

inline Iterate nonlinear_pgm_step(const TrimmedProblem& p, const Iterate& s, const StepState& eta) {
    return nonlinear_pgm_step(p, s, nonlinear_gradient(p, s), eta);
}

/// Two-block analogue of the linear solver: same BB rule, joint backtracking
/// on (eta_beta, eta_alpha), same stopping rule and report.
inline SolverReport solve_nonlinear(const TrimmedProblem& p, const Iterate& init, const SolverConfig& cfg,
                                    const IterationObserver& observer = {}) {
    cfg.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    auto seconds = [&start] { return std::chrono::duration<double>(clock::now() - start).count(); };

    SolverReport rep;
    Iterate cur = make_state(p, init.beta, init.alpha);
    if (!std::isfinite(cur.objective)) throw input_error("initial point has non-finite objective");
    SmoothGradient g_cur = nonlinear_gradient(p, cur);
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

        auto try_step = [&]() -> std::pair<Iterate, bool> {
            // A non-finite prediction counts as a rejected step, not an error:
            // the model may blow up for too long a step.
            try {
                Iterate c = nonlinear_pgm_step(p, cur, g_cur, eta);
                return {std::move(c), true};
            } catch (const numeric_error&) {
                return {Iterate{}, false};
            }
        };

        auto [cand, ok] = try_step();
        int backtracks = 0;
        while (!ok || !accept_test(cur, cand, eta, cfg.c2)) {
            if (backtracks == cfg.linesearch_cap) {
                rep.status = SolverStatus::LinesearchStalled;
                rep.iterations = t;
                rep.final = std::move(cur);
                rep.elapsed_s = seconds();
                return rep;
            }
            eta.scale(cfg.c1);
            std::tie(cand, ok) = try_step();
            ++backtracks;
        }
        rep.linesearch_backtracks_total += backtracks;
        const double needed = required_decrease(cur, cand, eta, cfg.c2);
        if (cand.objective > cur.objective - needed + 1e-10) ++rep.descent_violations;

        prev = std::move(cur);
        g_prev = std::move(g_cur);
        cur = std::move(cand);
        g_cur = nonlinear_gradient(p, cur);
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

// ---------------------------------------------------------------------------
// Randomized plugin probes

/// Largest relative deviation between grad_adjoint and central differences of
/// v' f_beta(X) over `probes` random (beta, v) pairs around `center`.
template <class Rng>
double probe_model_gradient(const ModelSpec& model, const Mat& X, const Vec& center, double spread, int probes,
                            Rng& rng, double step = 1e-6) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < probes; ++k) {
        Vec beta = center;
        for (Index j = 0; j < beta.size(); ++j) beta[j] += spread * normal(rng);
        Vec v(X.rows());
        for (Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
        const Vec analytic = model.grad_adjoint(beta, X, v);
        for (Index j = 0; j < beta.size(); ++j) {
            Vec bp = beta, bm = beta;
            bp[j] += step;
            bm[j] -= step;
            const double fd = (v.dot(model.predict(bp, X)) - v.dot(model.predict(bm, X))) / (2.0 * step);
            const double err = std::abs(fd - analytic[j]) / std::max(1.0, std::abs(analytic[j]));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

/// True when every probed prox output is no worse than its input for the
/// prox objective c P(x) + 1/2 ||x - z||^2 and the penalty never dips below
/// its declared lower bound.
template <class Rng>
bool probe_penalty(const PenaltySpec& penalty, Index dim, int probes, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.01, 3.0);
    for (int k = 0; k < probes; ++k) {
        Vec z(dim);
        for (Index j = 0; j < dim; ++j) z[j] = 2.0 * normal(rng);
        const double c = unif(rng);
        const Vec x = penalty.prox(z, c);
        const double at_x = c * penalty.value(x) + 0.5 * (x - z).squaredNorm();
        const double at_z = c * penalty.value(z);
        if (at_x > at_z + 1e-12 * std::max(1.0, std::abs(at_z))) return false;
        if (penalty.value(z) < penalty.lower_bound || penalty.value(x) < penalty.lower_bound) return false;
    }
    return true;
}

} // namespace slts
