#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "trimmed_ops.hpp"

namespace slts {

/// Response vector y (length n) and covariates X (n x d, one row per sample).
struct Dataset {
    Vec y;
    Mat X;
    // Free-form provenance: generator seed, contamination rate, ...
    std::map<std::string, std::string> meta;

    Index n() const { return y.size(); }
    Index d() const { return X.cols(); }

    void validate() const {
        if (y.size() < 1) throw input_error("dataset has no samples");
        if (X.cols() < 1) throw input_error("dataset has no covariates");
        if (X.rows() != y.size()) {
            throw input_error("dataset y has " + std::to_string(y.size()) + " entries but X has " +
                              std::to_string(X.rows()) + " rows");
        }
        if (!y.allFinite() || !X.allFinite()) throw input_error("dataset contains non-finite values");
    }
};

/// Immutable trimmed-regularized problem instance.
///
///   L(b0, b, a) = 1/2 ||y - b0 1 - X b - a||^2 + 1/2 T_h(a) + lambda ||b||_1
///
/// Minimizing L over a recovers 1/4 T_h(y - b0 1 - X b) + lambda ||b||_1, the
/// sparse LTS objective.
class StrlsProblem {
public:
    StrlsProblem(Dataset data, Index h, double lambda, bool fit_intercept = true)
        : data_(std::move(data)), h_(h), lambda_(lambda), fit_intercept_(fit_intercept) {
        data_.validate();
        if (h_ < 1 || h_ > data_.n()) {
            throw domain_error("trimming count h=" + std::to_string(h_) + " outside [1, " +
                               std::to_string(data_.n()) + "]");
        }
        if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw domain_error("lambda must be finite and >= 0");
    }

    const Dataset& data() const { return data_; }
    const Vec& y() const { return data_.y; }
    const Mat& X() const { return data_.X; }
    Index n() const { return data_.n(); }
    Index d() const { return data_.d(); }
    Index h() const { return h_; }
    double lambda() const { return lambda_; }
    bool fit_intercept() const { return fit_intercept_; }

    StrlsProblem with_h(Index h) const { return StrlsProblem(data_, h, lambda_, fit_intercept_); }
    StrlsProblem with_lambda(double lambda) const { return StrlsProblem(data_, h_, lambda, fit_intercept_); }

private:
    Dataset data_;
    Index h_;
    double lambda_;
    bool fit_intercept_;
};

/// Solver state with cached residual y - b0 1 - X b - a and objective L.
struct Iterate {
    double beta0 = 0.0;
    Vec beta;
    Vec alpha;
    Vec residual;
    double objective = 0.0;
};

/// Gradient of the smooth part l = 1/2 ||residual||^2, block by block.
struct SmoothGradient {
    double beta0 = 0.0;
    Vec beta;
    Vec alpha;

    double squared_norm() const { return beta0 * beta0 + beta.squaredNorm() + alpha.squaredNorm(); }
    double norm() const { return std::sqrt(squared_norm()); }
};

namespace detail {

inline void check_dims(const StrlsProblem& p, const Vec& beta) {
    if (beta.size() != p.d()) {
        throw input_error("beta has length " + std::to_string(beta.size()) + ", expected " +
                          std::to_string(p.d()));
    }
}

inline void check_dims(const StrlsProblem& p, const Iterate& it) {
    check_dims(p, it.beta);
    if (it.alpha.size() != p.n()) {
        throw input_error("alpha has length " + std::to_string(it.alpha.size()) + ", expected " +
                          std::to_string(p.n()));
    }
}

// y - b0 1 - X b; b0 is ignored when the problem has no intercept.
inline Vec fit_residual(const StrlsProblem& p, double beta0, const Vec& beta) {
    Vec r = p.y() - p.X() * beta;
    if (p.fit_intercept()) r.array() -= beta0;
    return r;
}

} // namespace detail

inline double eval_smooth(const StrlsProblem& p, const Iterate& it) {
    detail::check_dims(p, it);
    const Vec r = detail::fit_residual(p, it.beta0, it.beta) - it.alpha;
    return 0.5 * r.squaredNorm();
}

inline double eval_objective(const StrlsProblem& p, const Iterate& it) {
    detail::check_dims(p, it);
    const Vec r = detail::fit_residual(p, it.beta0, it.beta) - it.alpha;
    return 0.5 * r.squaredNorm() + 0.5 * trimmed_squares(it.alpha, p.h()) + p.lambda() * it.beta.lpNorm<1>();
}

/// Builds an iterate and fills its residual and objective caches from scratch.
inline Iterate make_iterate(const StrlsProblem& p, double beta0, Vec beta, Vec alpha) {
    Iterate it;
    it.beta0 = p.fit_intercept() ? beta0 : 0.0;
    it.beta = std::move(beta);
    it.alpha = std::move(alpha);
    detail::check_dims(p, it);
    it.residual = detail::fit_residual(p, it.beta0, it.beta) - it.alpha;
    it.objective = 0.5 * it.residual.squaredNorm() + 0.5 * trimmed_squares(it.alpha, p.h()) +
                   p.lambda() * it.beta.lpNorm<1>();
    return it;
}

/// (-1'r, -X'r, -r) where r is the residual. The intercept component is 0
/// when the problem has no intercept.
inline SmoothGradient grad_smooth(const StrlsProblem& p, const Iterate& it) {
    detail::check_dims(p, it);
    const Vec r = detail::fit_residual(p, it.beta0, it.beta) - it.alpha;
    SmoothGradient g;
    g.beta0 = p.fit_intercept() ? -r.sum() : 0.0;
    g.beta = -(p.X().transpose() * r);
    g.alpha = -r;
    return g;
}

// Same as grad_smooth but trusts the cached residual.
inline SmoothGradient grad_from_residual(const StrlsProblem& p, const Vec& residual) {
    SmoothGradient g;
    g.beta0 = p.fit_intercept() ? -residual.sum() : 0.0;
    g.beta.noalias() = -(p.X().transpose() * residual);
    g.alpha = -residual;
    return g;
}

/// Sparse LTS objective 1/4 T_h(y - b0 1 - X b) + lambda ||b||_1.
inline double slts_objective(const StrlsProblem& p, double beta0, const Vec& beta) {
    detail::check_dims(p, beta);
    const Vec r = detail::fit_residual(p, beta0, beta);
    return 0.25 * trimmed_squares(r, p.h()) + p.lambda() * beta.lpNorm<1>();
}

/// Completes (b0, b) with the optimal absorber a = prox_{T_h / 2}(y - b0 1 - X b).
inline Iterate lift_to_strls(const StrlsProblem& p, double beta0, const Vec& beta) {
    detail::check_dims(p, beta);
    const Vec r = detail::fit_residual(p, beta0, beta);
    ProxResult prox = prox_trimmed_squares(r, p.h(), 0.5);
    return make_iterate(p, beta0, beta, std::move(prox.point));
}

/// Smallest lambda at which the all-zero coefficient vector is optimal for
/// the untrimmed 1/4-scaled LASSO: ||X'(y - ybar)||_inf / 2 (ybar = 0 without
/// an intercept).
inline double lambda_max(const Dataset& data, bool fit_intercept = true) {
    Vec centered = data.y;
    if (fit_intercept) centered.array() -= data.y.mean();
    return 0.5 * (data.X.transpose() * centered).cwiseAbs().maxCoeff();
}

} // namespace slts
