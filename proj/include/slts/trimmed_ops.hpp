#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace slts {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;
using VecRef = Eigen::Ref<const Vec>;

/// The h entries of a vector with smallest magnitude.
///
/// Among the (possibly many) valid index sets, the canonical one is returned:
/// entries are ranked by the pair (|r_i|, i), so ties at the boundary keep the
/// smaller index.
struct TrimSelection {
    std::vector<Index> kept_indices; // ascending
    std::vector<char> kept_mask;     // kept_mask[i] != 0 iff i is kept
    double threshold_value = 0.0;    // h-th smallest |r_i|
};

/// Prox point of gamma * T_h together with the Moreau envelope value.
struct ProxResult {
    Vec point;
    double envelope_value = 0.0;
    TrimSelection selection;
};

namespace detail {

inline void check_trim_args(const VecRef& r, Index h) {
    const Index n = r.size();
    if (n < 1) throw input_error("trimmed operation on an empty vector");
    if (h < 1 || h > n) {
        throw domain_error("trimming count h=" + std::to_string(h) + " outside [1, " +
                           std::to_string(n) + "]");
    }
    if (!r.allFinite()) throw input_error("non-finite entry in residual vector");
}

} // namespace detail

/// Selects the h smallest-magnitude entries in expected O(n) time.
inline TrimSelection select_trim(const VecRef& r, Index h) {
    detail::check_trim_args(r, h);
    const Index n = r.size();

    TrimSelection sel;
    sel.kept_mask.assign(static_cast<std::size_t>(n), 0);

    if (h == n) {
        std::fill(sel.kept_mask.begin(), sel.kept_mask.end(), 1);
        sel.kept_indices.resize(static_cast<std::size_t>(n));
        std::iota(sel.kept_indices.begin(), sel.kept_indices.end(), Index{0});
        sel.threshold_value = r.cwiseAbs().maxCoeff();
        return sel;
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    auto less = [&r](Index a, Index b) {
        const double ra = std::abs(r[a]);
        const double rb = std::abs(r[b]);
        return ra < rb || (ra == rb && a < b);
    };
    // (|r_i|, i) is a strict total order, so the first h positions after
    // partitioning hold a unique set.
    std::nth_element(order.begin(), order.begin() + (h - 1), order.end(), less);
    sel.threshold_value = std::abs(r[order[static_cast<std::size_t>(h - 1)]]);
    for (Index k = 0; k < h; ++k) sel.kept_mask[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;

    sel.kept_indices.reserve(static_cast<std::size_t>(h));
    for (Index i = 0; i < n; ++i) {
        if (sel.kept_mask[static_cast<std::size_t>(i)]) sel.kept_indices.push_back(i);
    }
    return sel;
}

/// T_h(r): sum of the h smallest squared entries of r.
inline double trimmed_squares(const VecRef& r, Index h) {
    const TrimSelection sel = select_trim(r, h);
    double sum = 0.0;
    for (Index i : sel.kept_indices) sum += r[i] * r[i];
    return sum;
}

/// Closed-form proximal mapping of gamma * T_h.
///
/// Kept entries shrink by 1/(2 gamma + 1); trimmed entries pass through.
/// The envelope value gamma/(2 gamma + 1) * T_h(r) is exact for every member
/// of the prox set.
inline ProxResult prox_trimmed_squares(const VecRef& r, Index h, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw domain_error("prox_trimmed_squares requires finite gamma > 0");
    }
    ProxResult out;
    out.selection = select_trim(r, h);
    out.point = r;
    const double shrink = 1.0 / (2.0 * gamma + 1.0);
    double kept_sq = 0.0;
    for (Index i : out.selection.kept_indices) {
        kept_sq += r[i] * r[i];
        out.point[i] = r[i] * shrink;
    }
    out.envelope_value = gamma * shrink * kept_sq;
    return out;
}

/// sign(x) * max(|x| - c, 0)
inline double soft_threshold(double x, double c) {
    if (c < 0.0) throw domain_error("soft_threshold requires c >= 0");
    if (x > c) return x - c;
    if (x < -c) return x + c;
    return 0.0;
}

inline Vec soft_threshold(const VecRef& x, double c) {
    return x.unaryExpr([c](double v) { return soft_threshold(v, c); });
}

} // namespace slts
