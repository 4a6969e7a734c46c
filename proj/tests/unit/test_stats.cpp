#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hpl/hermite_oracle.hpp"
#include "hpl/stats.hpp"

using namespace hpl;

namespace {

Ensemble fbm_ensemble(double H, std::vector<double> const& grid, std::size_t replicas, std::uint64_t seed)
{
    Ensemble e;
    e.t = grid;
    for (std::uint64_t r = 0; r < replicas; ++r) {
        RandomStream rng(seed, r);
        e.rows.push_back(fbm_sample(H, grid, rng));
    }
    return e;
}

Ensemble normal_ensemble(std::size_t n, std::size_t dims, double shift, std::uint64_t seed)
{
    Ensemble e;
    for (std::size_t i = 0; i < dims; ++i) {
        e.t.push_back(static_cast<double>(i + 1));
    }
    RandomStream rng(seed, 0);
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> row;
        for (std::size_t i = 0; i < dims; ++i) {
            row.push_back(shift + rng.normal());
        }
        e.rows.push_back(row);
    }
    return e;
}

}  // namespace

TEST(Ensemble, Validation)
{
    Ensemble e;
    EXPECT_THROW(e.validate(), std::invalid_argument);
    e.t = {0.5, 1.0};
    e.rows = {{1.0, 2.0}, {1.0}};
    EXPECT_THROW(e.validate(), std::invalid_argument);
    e.rows = {{1.0, NAN}, {1.0, 2.0}};
    EXPECT_THROW(e.validate(), std::invalid_argument);
    e.rows = {{1.0, 2.0}, {3.0, 4.0}};
    EXPECT_NO_THROW(e.validate());
    EXPECT_EQ(e.index_of(1.0), 1u);
    EXPECT_THROW(e.index_of(0.7), std::invalid_argument);
    EXPECT_EQ(e.column(1), (std::vector<double>{2.0, 4.0}));
}

TEST(Covariance, ConstantEnsembleIsZero)
{
    Ensemble e;
    e.t = {1.0, 2.0};
    e.rows.assign(50, {3.0, -1.0});
    auto const cov = estimate_covariance(e);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            EXPECT_EQ(cov.estimate[i][j], 0.0);
            EXPECT_EQ(cov.se[i][j], 0.0);
        }
    }
    EXPECT_EQ(cov.replicas, 50u);
}

TEST(Covariance, SmallExampleAndTwoReplicas)
{
    Ensemble e;
    e.t = {1.0, 2.0};
    e.rows = {{1.0, 2.0}, {2.0, 4.0}, {3.0, 9.0}};
    auto const cov = estimate_covariance(e);
    EXPECT_DOUBLE_EQ(cov.estimate[0][0], 1.0);
    EXPECT_DOUBLE_EQ(cov.estimate[0][1], 3.5);
    EXPECT_DOUBLE_EQ(cov.estimate[1][0], 3.5);
    EXPECT_NEAR(cov.estimate[1][1], 13.0, 1e-12);
    e.rows.pop_back();
    EXPECT_TRUE(std::isinf(estimate_covariance(e).se[0][1]));
    e.rows.pop_back();
    EXPECT_THROW(estimate_covariance(e), std::invalid_argument);
}

TEST(Covariance, IndependentColumnsAndJackknifeCalibration)
{
    auto const e = normal_ensemble(4000, 3, 0.0, 1);
    auto const cov = estimate_covariance(e);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_LE(std::abs(cov.estimate[i][i] - 1.0), 3.0 * cov.se[i][i]);
        EXPECT_NEAR(cov.se[i][i], std::sqrt(2.0 / 4000.0), 0.005);
        for (std::size_t j = i + 1; j < 3; ++j) {
            EXPECT_LE(std::abs(cov.estimate[i][j]), 3.0 * cov.se[i][j]);
            EXPECT_NEAR(cov.se[i][j], std::sqrt(1.0 / 4000.0), 0.003);
        }
    }
}

TEST(Covariance, RowOrderInvariant)
{
    auto e = normal_ensemble(300, 2, 1.0, 2);
    auto const a = estimate_covariance(e);
    std::reverse(e.rows.begin(), e.rows.end());
    std::rotate(e.rows.begin(), e.rows.begin() + 17, e.rows.end());
    auto const b = estimate_covariance(e);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            EXPECT_NEAR(a.estimate[i][j], b.estimate[i][j], 1e-12);
            EXPECT_NEAR(a.se[i][j], b.se[i][j], 1e-12);
        }
    }
}

TEST(Normalize, UnitSpreadAtOne)
{
    Ensemble e;
    e.t = {0.5, 1.0};
    e.rows = {{1.0, 2.0}, {3.0, 4.0}};
    EXPECT_DOUBLE_EQ(standard_deviation_at(e, 1.0), std::sqrt(2.0));
    auto const n = normalize(e);
    EXPECT_DOUBLE_EQ(n.rows[1][0], 3.0 / std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(standard_deviation_at(n, 1.0), 1.0);
    Ensemble flat;
    flat.t = {1.0};
    flat.rows = {{2.0}, {2.0}};
    EXPECT_THROW(normalize(flat), std::invalid_argument);
    Ensemble no_one;
    no_one.t = {0.5, 2.0};
    no_one.rows = {{1.0, 2.0}, {3.0, 5.0}};
    EXPECT_THROW(normalize(no_one), std::invalid_argument);
}

TEST(NormalizedCovariance, FbmValueAndScaleInvariance)
{
    auto e = fbm_ensemble(0.7, {0.25, 0.5, 1.0, 2.0}, 4000, 3);
    double const target = target_covariance(0.7, 0.25, 2.0) / target_covariance(0.7, 1.0, 1.0);
    auto const est = normalized_covariance(e, 0.25, 2.0);
    EXPECT_LE(std::abs(est.value - target), 3.0 * est.se);
    auto const half = normalized_covariance(e, 0.5, 1.0);
    EXPECT_LE(std::abs(half.value - 0.5), 3.0 * half.se);
    for (auto& row : e.rows) {
        for (double& v : row) {
            v *= 7.5;
        }
    }
    auto const scaled = normalized_covariance(e, 0.25, 2.0);
    EXPECT_NEAR(scaled.value, est.value, 1e-12);
    EXPECT_NEAR(scaled.se, est.se, 1e-12);
}

TEST(Hurst, RecoversFbmIndexAndIsScaleFree)
{
    std::vector<double> const grid{0.25, 0.5, 1.0, 2.0};
    auto e = fbm_ensemble(0.7, grid, 4000, 4);
    auto const h = hurst_from_variance(e, grid);
    EXPECT_NEAR(h.value, 0.7, 0.02);
    EXPECT_LE(std::abs(h.value - 0.7), 3.0 * h.se);
    EXPECT_GT(h.se, 0.0);
    for (auto& row : e.rows) {
        for (double& v : row) {
            v *= 0.01;
        }
    }
    EXPECT_NEAR(hurst_from_variance(e, grid).value, h.value, 1e-10);
    std::vector<double> const two{0.5, 1.0};
    EXPECT_THROW(hurst_from_variance(e, two), std::invalid_argument);
    std::vector<double> const missing{0.5, 1.0, 3.0};
    EXPECT_THROW(hurst_from_variance(e, missing), std::invalid_argument);
    Ensemble flat;
    flat.t = grid;
    flat.rows.assign(10, {1.0, 1.0, 1.0, 1.0});
    EXPECT_THROW(hurst_from_variance(flat, grid), std::invalid_argument);
}

TEST(Energy, IdenticalSamplesGiveZero)
{
    auto const a = normal_ensemble(40, 2, 0.0, 5);
    auto const report = energy_distance_test(a, a, 99, RandomStream(5, 1));
    EXPECT_NEAR(report.statistic, 0.0, 1e-12);
    EXPECT_EQ(report.p_value, 1.0);
    EXPECT_EQ(report.permutations, 99u);
    EXPECT_EQ(report.replicas, 80u);
}

TEST(Energy, NullCalibration)
{
    int rejections = 0;
    int const trials = 200;
    for (int i = 0; i < trials; ++i) {
        auto const a = normal_ensemble(50, 2, 0.0, 1000 + static_cast<std::uint64_t>(i));
        auto const b = normal_ensemble(50, 2, 0.0, 5000 + static_cast<std::uint64_t>(i));
        auto const report = energy_distance_test(a, b, 99, RandomStream(6, static_cast<std::uint64_t>(i)));
        ASSERT_TRUE(report.p_value > 0.0 && report.p_value <= 1.0);
        rejections += report.p_value <= 0.05 ? 1 : 0;
    }
    // Binomial(200, 0.05): mean 10, sd 3.1.
    EXPECT_LE(rejections, 20);
    EXPECT_GE(rejections, 2);
}

TEST(Energy, DetectsShiftAndIsThreadIndependent)
{
    auto const a = normal_ensemble(100, 1, 0.0, 7);
    auto const b = normal_ensemble(100, 1, 3.0, 8);
    auto const one = energy_distance_test(a, b, 199, RandomStream(7, 0), 1);
    EXPECT_LT(one.p_value, 0.01);
    auto const three = energy_distance_test(a, b, 199, RandomStream(7, 0), 3);
    EXPECT_EQ(one.statistic, three.statistic);
    EXPECT_EQ(one.p_value, three.p_value);
}

TEST(Moments, MeanSkewnessCorrelation)
{
    std::vector<double> const x{1.0, 2.0, 3.0, 4.0};
    auto const m = mean_estimate(x);
    EXPECT_DOUBLE_EQ(m.value, 2.5);
    EXPECT_NEAR(m.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-14);
    EXPECT_NEAR(skewness(x).value, 0.0, 1e-14);
    std::vector<double> y;
    for (double v : x) {
        y.push_back(3.0 - 2.0 * v);
    }
    EXPECT_NEAR(correlation(x, y).value, -1.0, 1e-14);
    RandomStream rng(9, 0);
    std::vector<double> e;
    for (int i = 0; i < 20000; ++i) {
        e.push_back(rng.exponential());
    }
    auto const s = skewness(e);
    EXPECT_LE(std::abs(s.value - 2.0), 4.0 * s.se);
}
