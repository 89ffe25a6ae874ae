#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "problem.hpp"
#include "rng.hpp"

namespace slts {

/// Contaminated sparse linear regression:
///   y_i = b0 + x_i' b + e_i,  x_i ~ N(0, Sigma), Sigma_jk = rho^|j-k|,
/// e_i ~ N(outlier_mean, outlier_sd^2) on ceil(outlier_frac n) uniformly
/// chosen rows and N(0, noise_sd^2) elsewhere.
struct GenSpec {
    Index n = 100;
    Index d = 200;
    double rho = 0.5;
    double sparsity_zero_prob = 0.1;
    double outlier_frac = 0.1;
    double outlier_mean = 20.0;
    double outlier_sd = std::sqrt(2.0); // N(20, 2) read as variance 2
    double noise_sd = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 1 || d < 1) throw domain_error("generator needs n >= 1 and d >= 1");
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!prob(sparsity_zero_prob) || !prob(outlier_frac)) throw domain_error("probabilities must lie in [0, 1]");
        if (!(std::abs(rho) < 1.0)) throw domain_error("rho must satisfy |rho| < 1");
        if (!(noise_sd >= 0.0) || !(outlier_sd >= 0.0)) throw domain_error("standard deviations must be >= 0");
    }
};

struct Truth {
    double beta0 = 0.0;
    Vec beta;
    std::vector<char> outlier_mask; // 1 for contaminated rows
};

struct Generated {
    Dataset data;
    Truth truth;
};

inline Mat ar1_covariance(Index d, double rho) {
    Mat s(d, d);
    for (Index j = 0; j < d; ++j)
        for (Index k = 0; k < d; ++k) s(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
    return s;
}

inline Index outlier_count(Index n, double frac) {
    // 1e-9 absorbs representation error, e.g. 0.1 * 30 = 3.0000000000000004.
    const auto k = static_cast<Index>(std::ceil(frac * static_cast<double>(n) - 1e-9));
    return std::clamp<Index>(k, 0, n);
}

inline Generated generate(const GenSpec& spec) {
    spec.validate();
    const Index n = spec.n, d = spec.d;

    Generated g;
    g.truth.beta.resize(d);
    {
        auto rng = make_stream(spec.seed, StreamTag::Intercept);
        std::normal_distribution<double> normal(0.0, 1.0);
        g.truth.beta0 = normal(rng);
    }
    for (Index j = 0; j < d; ++j) {
        auto rng = make_stream(spec.seed, StreamTag::Coefficient, static_cast<std::uint64_t>(j));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::bernoulli_distribution zero(spec.sparsity_zero_prob);
        const double v = normal(rng);
        g.truth.beta[j] = zero(rng) ? 0.0 : v;
    }

    const Mat chol = Eigen::LLT<Mat>(ar1_covariance(d, spec.rho)).matrixL();
    Mat X(n, d);
    Vec z(d);
    for (Index i = 0; i < n; ++i) {
        auto rng = make_stream(spec.seed, StreamTag::CovariateRow, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Index j = 0; j < d; ++j) z[j] = normal(rng);
        X.row(i) = (chol * z).transpose();
    }

    const Index n_out = outlier_count(n, spec.outlier_frac);
    g.truth.outlier_mask.assign(static_cast<std::size_t>(n), 0);
    {
        auto rng = make_stream(spec.seed, StreamTag::OutlierPick);
        std::vector<Index> rows(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
        for (Index k = 0; k < n_out; ++k) {
            std::uniform_int_distribution<Index> pick(k, n - 1);
            std::swap(rows[static_cast<std::size_t>(k)], rows[static_cast<std::size_t>(pick(rng))]);
            g.truth.outlier_mask[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])] = 1;
        }
    }

    Vec y = (X * g.truth.beta).array() + g.truth.beta0;
    for (Index i = 0; i < n; ++i) {
        auto rng = make_stream(spec.seed, StreamTag::NoiseRow, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> normal(0.0, 1.0);
        const double e = normal(rng);
        y[i] += g.truth.outlier_mask[static_cast<std::size_t>(i)] ? spec.outlier_mean + spec.outlier_sd * e
                                                                  : spec.noise_sd * e;
    }

    g.data.y = std::move(y);
    g.data.X = std::move(X);
    g.data.meta["generator"] = "ar1-contaminated";
    g.data.meta["seed"] = std::to_string(spec.seed);
    g.data.meta["outlier_frac"] = std::to_string(spec.outlier_frac);
    g.data.meta["n"] = std::to_string(n);
    g.data.meta["d"] = std::to_string(d);
    return g;
}

// ---------------------------------------------------------------------------
// Robust preprocessing

inline double median(std::vector<double> v) {
    if (v.empty()) throw input_error("median of an empty sample");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

inline double median(const VecRef& v) { return median(std::vector<double>(v.data(), v.data() + v.size())); }

/// Median absolute deviation around `center`.
inline double mad(const VecRef& v, double center) { return median((v.array() - center).abs().matrix()); }

inline constexpr double kMadConsistency = 1.4826;

struct RobustScale {
    double y_center = 0.0;
    Vec center; // per-column median
    Vec scale;  // per-column MAD, times kMadConsistency when enabled
    bool mad_constant = false;
};

/// Centers y by its median and maps each column to (x - median) / MAD.
inline std::pair<Dataset, RobustScale> robust_standardize(const Dataset& ds, bool mad_constant = false) {
    ds.validate();
    RobustScale rs;
    rs.mad_constant = mad_constant;
    rs.y_center = median(ds.y);
    rs.center.resize(ds.d());
    rs.scale.resize(ds.d());

    Dataset out;
    out.meta = ds.meta;
    out.meta["standardized"] = mad_constant ? "median/mad*1.4826" : "median/mad";
    out.y = ds.y.array() - rs.y_center;
    out.X.resize(ds.n(), ds.d());
    for (Index j = 0; j < ds.d(); ++j) {
        const double c = median(ds.X.col(j));
        double s = mad(ds.X.col(j), c);
        if (!(s > 0.0)) throw input_error("column x" + std::to_string(j + 1) + " has zero MAD");
        if (mad_constant) s *= kMadConsistency;
        rs.center[j] = c;
        rs.scale[j] = s;
        out.X.col(j) = (ds.X.col(j).array() - c) / s;
    }
    return {std::move(out), std::move(rs)};
}

/// floor(frac * n) clamped to [1, n].
inline Index trimming_count(Index n, double frac = 0.75) {
    if (n < 1) throw domain_error("trimming_count needs n >= 1");
    if (!(frac > 0.0 && frac <= 1.0)) throw domain_error("trimming fraction must lie in (0, 1]");
    const auto h = static_cast<Index>(std::floor(frac * static_cast<double>(n) + 1e-9));
    return std::clamp<Index>(h, 1, n);
}

} // namespace slts
