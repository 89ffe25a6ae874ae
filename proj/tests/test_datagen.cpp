#include <gtest/gtest.h>

#include <slts/datagen.hpp>

using namespace slts;

TEST(Datagen, Ar1CovarianceEntries) {
    const Mat s = ar1_covariance(4, 0.5);
    EXPECT_DOUBLE_EQ(s(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(s(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(s(2, 0), 0.25);
    EXPECT_DOUBLE_EQ(s(3, 0), 0.125);
    EXPECT_EQ(s, s.transpose());
}

TEST(Datagen, ShapesAndExactOutlierCount) {
    for (Index n : {7, 10, 30, 100, 101}) {
        GenSpec spec;
        spec.n = n;
        spec.d = 5;
        const Generated g = generate(spec);
        EXPECT_EQ(g.data.n(), n);
        EXPECT_EQ(g.data.d(), 5);
        EXPECT_EQ(g.truth.beta.size(), 5);
        const auto count = std::count(g.truth.outlier_mask.begin(), g.truth.outlier_mask.end(), 1);
        EXPECT_EQ(count, static_cast<long>(std::ceil(0.1 * static_cast<double>(n) - 1e-9))) << n;
    }
    EXPECT_EQ(outlier_count(30, 0.1), 3);
    EXPECT_EQ(outlier_count(31, 0.1), 4);
    EXPECT_EQ(outlier_count(100, 0.0), 0);
}

TEST(Datagen, NoiselessCleanRowsFollowTheModel) {
    GenSpec spec;
    spec.n = 40;
    spec.d = 6;
    spec.noise_sd = 0.0;
    spec.seed = 3;
    const Generated g = generate(spec);
    const Vec fit = (g.data.X * g.truth.beta).array() + g.truth.beta0;
    for (Index i = 0; i < spec.n; ++i) {
        if (g.truth.outlier_mask[static_cast<std::size_t>(i)]) {
            EXPECT_GT(g.data.y[i] - fit[i], 10.0);
        } else {
            EXPECT_NEAR(g.data.y[i], fit[i], 1e-12);
        }
    }
}

TEST(Datagen, SampleCovarianceMatchesAr1) {
    GenSpec spec;
    spec.n = 100000;
    spec.d = 3;
    spec.seed = 11;
    const Generated g = generate(spec);
    const Mat& X = g.data.X;
    const Mat centered = X.rowwise() - X.colwise().mean();
    const Mat cov = centered.transpose() * centered / static_cast<double>(spec.n - 1);
    EXPECT_LE((cov - ar1_covariance(3, 0.5)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Datagen, CoefficientSparsityRate) {
    GenSpec spec;
    spec.n = 5;
    spec.d = 2000;
    spec.rho = 0.0;
    const Generated g = generate(spec);
    const double zero_rate = static_cast<double>((g.truth.beta.array() == 0.0).count()) / 2000.0;
    EXPECT_NEAR(zero_rate, 0.1, 0.03);
}

TEST(Datagen, ReproducibleForFixedSeed) {
    GenSpec spec;
    spec.n = 30;
    spec.d = 12;
    spec.seed = 42;
    const Generated a = generate(spec), b = generate(spec);
    EXPECT_EQ(a.data.y, b.data.y);
    EXPECT_EQ(a.data.X, b.data.X);
    EXPECT_EQ(a.truth.beta, b.truth.beta);
    EXPECT_EQ(a.truth.outlier_mask, b.truth.outlier_mask);
    spec.seed = 43;
    EXPECT_NE(generate(spec).data.y, a.data.y);
}

TEST(Datagen, RowsDoNotDependOnSampleCount) {
    GenSpec small, large;
    small.n = 10;
    large.n = 20;
    small.d = large.d = 4;
    small.seed = large.seed = 5;
    EXPECT_EQ(generate(small).data.X, generate(large).data.X.topRows(10));
}

TEST(Datagen, RejectsBadSpecs) {
    GenSpec spec;
    spec.n = 0;
    EXPECT_THROW(generate(spec), slts::domain_error);
    spec = GenSpec{};
    spec.rho = 1.0;
    EXPECT_THROW(generate(spec), slts::domain_error);
    spec = GenSpec{};
    spec.outlier_frac = 1.5;
    EXPECT_THROW(generate(spec), slts::domain_error);
}

TEST(Standardize, MedianMadExample) {
    Dataset ds;
    ds.y = Vec(4);
    ds.y << 1, 2, 3, 100;
    ds.X = Mat(4, 1);
    ds.X << 1, 2, 3, 100;
    const auto [out, rs] = robust_standardize(ds);
    EXPECT_DOUBLE_EQ(rs.y_center, 2.5);
    EXPECT_DOUBLE_EQ(rs.center[0], 2.5);
    EXPECT_DOUBLE_EQ(rs.scale[0], 1.0);
    Vec expect(4);
    expect << -1.5, -0.5, 0.5, 97.5;
    EXPECT_EQ(out.X.col(0), expect);
    EXPECT_EQ(out.y, expect);

    const auto [scaled, rs2] = robust_standardize(ds, true);
    EXPECT_DOUBLE_EQ(rs2.scale[0], kMadConsistency);
    EXPECT_NEAR(scaled.X(3, 0), 97.5 / kMadConsistency, 1e-12);
}

TEST(Standardize, ZeroMadColumnIsRejected) {
    Dataset ds;
    ds.y = Vec::LinSpaced(5, 0, 4);
    ds.X = Mat(5, 2);
    ds.X << 1, 3, 2, 3, 3, 3, 4, 3, 5, 7;
    try {
        robust_standardize(ds);
        FAIL() << "expected input_error";
    } catch (const slts::input_error& e) {
        EXPECT_NE(std::string(e.what()).find("x2"), std::string::npos);
    }
}

TEST(Standardize, MedianAndMad) {
    EXPECT_DOUBLE_EQ(median(std::vector<double>{3, 1, 2}), 2.0);
    EXPECT_DOUBLE_EQ(median(std::vector<double>{4, 1, 3, 2}), 2.5);
    Vec v(5);
    v << 1, 1, 2, 2, 4;
    EXPECT_DOUBLE_EQ(mad(v, median(v)), 1.0);
    EXPECT_THROW(median(std::vector<double>{}), slts::input_error);
}

TEST(Standardize, TrimmingCount) {
    EXPECT_EQ(trimming_count(100), 75);
    EXPECT_EQ(trimming_count(1), 1);
    EXPECT_EQ(trimming_count(500), 375);
    EXPECT_EQ(trimming_count(10), 7);
    EXPECT_EQ(trimming_count(10, 1.0), 10);
}
