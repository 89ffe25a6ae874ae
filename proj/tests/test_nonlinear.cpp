#include <gtest/gtest.h>

#include <random>

#include <slts/datagen.hpp>
#include <slts/nonlinear.hpp>

#include "oracles.hpp"

using namespace slts;

namespace {

Dataset random_dataset(std::uint64_t seed, Index n, Index d) {
    std::mt19937_64 rng(seed);
    Dataset ds;
    ds.X = oracle::random_mat(rng, n, d);
    ds.y = ds.X * oracle::random_vec(rng, d) + oracle::random_vec(rng, n, 0.3);
    for (Index i = 0; i < n / 4; ++i) ds.y[i] -= 12.0;
    return ds;
}

// Contaminated exponential-decay data: y = A exp(-b'x) + noise, 20% of the
// rows shifted by +8.
struct DecayData {
    Dataset data;
    std::vector<char> outliers;
    Vec truth;
};

DecayData decay_data(std::uint64_t seed, Index n, Index d) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DecayData out;
    out.data.X = Mat(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) out.data.X(i, j) = u(rng);
    out.truth = Vec(d + 1);
    out.truth[0] = 5.0;
    for (Index j = 0; j < d; ++j) out.truth[j + 1] = 0.5 + u(rng);
    out.data.y = exp_decay_model(d).predict(out.truth, out.data.X) + oracle::random_vec(rng, n, 0.1);
    out.outliers.assign(static_cast<std::size_t>(n), 0);
    std::vector<Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Index{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    for (Index k = 0; k < n / 5; ++k) {
        out.outliers[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])] = 1;
        out.data.y[rows[static_cast<std::size_t>(k)]] += 8.0;
    }
    return out;
}

} // namespace

TEST(Nonlinear, LinearPluginReproducesStrlsObjective) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        const Index n = 5 + static_cast<Index>(rng() % 20), d = 1 + static_cast<Index>(rng() % 8);
        const Dataset ds = random_dataset(rng(), n, d);
        const Index h = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
        StrlsProblem lin(ds, h, 0.3, false);
        const Vec b = oracle::random_vec(rng, d), a = oracle::random_vec(rng, n);
        const double expected = eval_objective(lin, make_iterate(lin, 0, b, a));
        EXPECT_NEAR(eval_tilde_objective(linear_model(d), l1_penalty(), ds, b, a, h, 0.3), expected,
                    1e-12 * std::max(1.0, expected));
    }
}

TEST(Nonlinear, ObjectiveTrivialCases) {
    const Dataset ds = random_dataset(2, 8, 3);
    const Vec b = Vec::Constant(3, 0.2);
    const Vec a = ds.y - ds.X * b;
    EXPECT_NEAR(eval_tilde_objective(linear_model(3), l1_penalty(), ds, b, Vec::Zero(8), 8, 0.0),
                0.5 * (ds.y - ds.X * b).squaredNorm(), 1e-12);
    // Residual absorbed and T_h(a) = 0 needs h zeros in a; use h = 1 with a zero entry.
    Vec a0 = a;
    a0[0] = 0.0;
    Dataset shifted = ds;
    shifted.y[0] = ds.X.row(0).dot(b);
    EXPECT_NEAR(eval_tilde_objective(linear_model(3), l1_penalty(), shifted, b, a0, 1, 2.0), 2.0 * 0.6, 1e-12);

    ModelSpec zero;
    zero.param_dim = 3;
    zero.predict = [](const Vec&, const Mat& X) -> Vec { return Vec::Zero(X.rows()); };
    zero.grad_adjoint = [](const Vec& b, const Mat&, const Vec&) -> Vec { return Vec::Zero(b.size()); };
    EXPECT_NEAR(eval_tilde_objective(zero, zero_penalty(), ds, b, Vec::Zero(8), 5, 1.0), 0.5 * ds.y.squaredNorm(),
                1e-12);

    EXPECT_TRUE(std::isinf(eval_tilde_objective(linear_model(3), box_penalty(-0.1, 0.1), ds, b, a, 4, 1.0)));
}

TEST(Nonlinear, StepMatchesLinearSolverStep) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 5 + static_cast<Index>(rng() % 20), d = 1 + static_cast<Index>(rng() % 8);
        const Dataset ds = random_dataset(rng(), n, d);
        const Index h = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
        StrlsProblem lin(ds, h, 0.4, false);
        TrimmedProblem gen(ds, linear_model(d), l1_penalty(), h, 0.4);
        const Vec b = oracle::random_vec(rng, d), a = oracle::random_vec(rng, n);
        const StepState eta{1.0, 7.5, 2.5};
        const Iterate x = pgm_step(lin, make_iterate(lin, 0, b, a), eta);
        const Iterate y = nonlinear_pgm_step(gen, make_state(gen, b, a), eta);
        EXPECT_LE((x.beta - y.beta).lpNorm<Eigen::Infinity>(), 1e-12);
        EXPECT_LE((x.alpha - y.alpha).lpNorm<Eigen::Infinity>(), 1e-12);
        EXPECT_NEAR(x.objective, y.objective, 1e-12 * std::max(1.0, x.objective));
    }
}

TEST(Nonlinear, FixedPointIsUnchanged) {
    // Exact fit on the first h rows, zero gradient, absorber with h zeros.
    const Index n = 6, d = 2;
    Dataset ds = random_dataset(4, n, d);
    const Vec b = Vec::Constant(d, 0.5);
    ds.y = ds.X * b;
    ds.y[5] += 3.0;
    TrimmedProblem p(ds, linear_model(d), zero_penalty(), 5, 0.0);
    Vec a = Vec::Zero(n);
    a[5] = 3.0;
    const Iterate s = make_state(p, b, a);
    const Iterate next = nonlinear_pgm_step(p, s, StepState{1.0, 3.0, 2.0});
    EXPECT_EQ(next.beta, s.beta);
    EXPECT_EQ(next.alpha, s.alpha);
}

TEST(Nonlinear, ExponentialGradientMatchesFiniteDifferences) {
    // f_beta(x) = exp(beta x) on two samples.
    ModelSpec m;
    m.param_dim = 1;
    m.predict = [](const Vec& b, const Mat& X) -> Vec { return (X * b).array().exp(); };
    m.grad_adjoint = [](const Vec& b, const Mat& X, const Vec& v) -> Vec {
        return X.transpose() * ((X * b).array().exp() * v.array()).matrix();
    };
    Dataset ds;
    ds.X = Mat(2, 1);
    ds.X << 0.5, -1.0;
    ds.y = Vec(2);
    ds.y << 2.0, 0.3;
    TrimmedProblem p(ds, m, zero_penalty(), 1, 0.0);
    const Vec b = Vec::Constant(1, 0.7), a = Vec::Constant(2, 0.1);
    const auto g = nonlinear_gradient(p, make_state(p, b, a));
    const Vec fd = oracle::central_difference(
        [&](const Vec& v) { return 0.5 * (ds.y - m.predict(v, ds.X) - a).squaredNorm(); }, b);
    EXPECT_NEAR(g.beta[0], fd[0], 1e-6 * std::max(1.0, std::abs(fd[0])));
}

TEST(Nonlinear, DecayModelGradientProbe) {
    std::mt19937_64 rng(5);
    const DecayData dd = decay_data(6, 20, 3);
    EXPECT_LE(probe_model_gradient(exp_decay_model(3), dd.data.X, dd.truth, 0.3, 50, rng), 1e-6);
    EXPECT_LE(probe_model_gradient(linear_model(3), dd.data.X, Vec::Zero(3), 1.0, 50, rng), 1e-6);
}

TEST(Nonlinear, BuiltinPenaltiesPassProbes) {
    std::mt19937_64 rng(8);
    EXPECT_TRUE(probe_penalty(l1_penalty(), 6, 200, rng));
    EXPECT_TRUE(probe_penalty(zero_penalty(), 6, 200, rng));
    EXPECT_TRUE(probe_penalty(box_penalty(-1.0, 1.0), 6, 200, rng));

    PenaltySpec bad = l1_penalty();
    bad.prox = [](const Vec& z, double) -> Vec { return 2.0 * z; };
    EXPECT_FALSE(probe_penalty(bad, 6, 50, rng));
}

TEST(Nonlinear, LinearPluginTrajectoryMatchesLinearSolver) {
    const Dataset ds = random_dataset(9, 40, 12);
    StrlsProblem lin(ds, 30, 0.5, false);
    TrimmedProblem gen(ds, linear_model(12), l1_penalty(), 30, 0.5);
    std::mt19937_64 rng(10);
    const Vec b = oracle::random_vec(rng, 12);
    SolverConfig cfg;
    cfg.t_max = 100;
    cfg.tol_rel = 0.0;
    std::vector<Iterate> a_path, b_path;
    solve(lin, lift_to_strls(lin, 0, b), cfg, [&](long, const Iterate& it, const StepState&) { a_path.push_back(it); });
    solve_nonlinear(gen, lift_nonlinear(gen, b), cfg,
                    [&](long, const Iterate& it, const StepState&) { b_path.push_back(it); });
    ASSERT_EQ(a_path.size(), b_path.size());
    for (std::size_t k = 0; k < a_path.size(); ++k) {
        EXPECT_LE((a_path[k].beta - b_path[k].beta).lpNorm<Eigen::Infinity>(), 1e-12) << k;
        EXPECT_LE((a_path[k].alpha - b_path[k].alpha).lpNorm<Eigen::Infinity>(), 1e-12) << k;
    }
}

TEST(Nonlinear, SolveConvergesAndDescends) {
    const DecayData dd = decay_data(11, 60, 2);
    TrimmedProblem p(dd.data, exp_decay_model(2), zero_penalty(), trimming_count(60), 0.0);
    Vec start = Vec::Ones(3);
    const SolverReport rep = solve_nonlinear(p, lift_nonlinear(p, start), SolverConfig{});
    EXPECT_EQ(rep.status, SolverStatus::Converged);
    EXPECT_EQ(rep.descent_violations, 0);
    for (std::size_t k = 1; k < rep.trace.size(); ++k)
        EXPECT_LE(rep.trace[k].objective, rep.trace[k - 1].objective + 1e-12 * std::max(1.0, rep.trace[k - 1].objective));
    EXPECT_LE(rep.final_stationarity, 1e-6 * rep.initial_grad_norm);

}

TEST(Nonlinear, StationaryStartStopsAtOnce) {
    // Exact decay fit on the first h rows, the remaining rows shifted and
    // absorbed: zero residual and h zero absorber entries.
    const Index n = 30, d = 2, h = 24;
    DecayData dd = decay_data(13, n, d);
    const ModelSpec model = exp_decay_model(d);
    dd.data.y = model.predict(dd.truth, dd.data.X);
    Vec a = Vec::Zero(n);
    for (Index i = h; i < n; ++i) {
        dd.data.y[i] += 8.0;
        a[i] = dd.data.y[i] - model.predict(dd.truth, dd.data.X)[i];
    }
    TrimmedProblem p(dd.data, model, zero_penalty(), h, 0.0);
    const SolverReport rep = solve_nonlinear(p, make_state(p, dd.truth, a), SolverConfig{});
    EXPECT_EQ(rep.status, SolverStatus::Converged);
    EXPECT_LE(rep.iterations, 2);
    EXPECT_LE((rep.final.beta - dd.truth).norm(), 1e-12);
}

TEST(Nonlinear, BoxPenaltyKeepsIterateFeasible) {
    const DecayData dd = decay_data(12, 40, 2);
    TrimmedProblem p(dd.data, exp_decay_model(2), box_penalty(0.0, 1.0), 30, 1.0);
    const SolverReport rep = solve_nonlinear(p, lift_nonlinear(p, Vec::Constant(3, 0.5)), SolverConfig{});
    EXPECT_TRUE((rep.final.beta.array() >= 0.0).all() && (rep.final.beta.array() <= 1.0).all());
    EXPECT_TRUE(std::isfinite(rep.final.objective));
}

TEST(Nonlinear, TrimmedFitIsRobustToContamination) {
    int wins = 0;
    std::vector<double> trimmed_res, plain_res;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const DecayData dd = decay_data(100 + seed, 80, 2);
        auto fit = [&](Index h) {
            TrimmedProblem p(dd.data, exp_decay_model(2), zero_penalty(), h, 0.0);
            return solve_nonlinear(p, lift_nonlinear(p, Vec::Ones(3)), SolverConfig{}).final.beta;
        };
        auto clean_median = [&](const Vec& beta) {
            const Vec r = dd.data.y - exp_decay_model(2).predict(beta, dd.data.X);
            std::vector<double> v;
            for (Index i = 0; i < r.size(); ++i)
                if (!dd.outliers[static_cast<std::size_t>(i)]) v.push_back(std::abs(r[i]));
            return median(v);
        };
        const double t = clean_median(fit(trimming_count(80))), pl = clean_median(fit(80));
        trimmed_res.push_back(t);
        plain_res.push_back(pl);
        wins += t < pl;
    }
    EXPECT_LT(median(trimmed_res), median(plain_res));
    EXPECT_GE(wins, 8);
}

TEST(Nonlinear, RejectsIncompletePlugins) {
    const Dataset ds = random_dataset(1, 5, 2);
    ModelSpec empty;
    EXPECT_THROW(TrimmedProblem(ds, empty, l1_penalty(), 3, 0.1), slts::input_error);
    EXPECT_THROW(TrimmedProblem(ds, linear_model(2), l1_penalty(), 6, 0.1), slts::domain_error);
}
