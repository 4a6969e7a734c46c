#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "hpl/hermite_oracle.hpp"
#include "hpl/stats.hpp"

using namespace hpl;

namespace {

// Direct sum over all bin tuples of the spectral lattice, with the same
// weights as the library: Z(b) = sqrt(dw / 2) (N + i N') on positive bins,
// conjugate on the mirror, amplitude sqrt(mass / dw).
std::vector<double> spectral_brute_force(std::vector<double> const& ex, std::vector<double> const& tg,
                                         SpectralGrid const& g, std::uint64_t seed, std::uint64_t id)
{
    int const k = static_cast<int>(ex.size());
    int const N = static_cast<int>(g.bins);
    double const dw = g.dw();
    RandomStream rng(seed, id);
    std::vector<std::complex<double>> Z(static_cast<std::size_t>(N));
    for (auto& z : Z) {
        double const a = rng.normal();
        double const b = rng.normal();
        z = std::sqrt(0.5 * dw) * std::complex<double>(a, b);
    }
    auto cc = [&](int s, int b) {
        double const lo = b * dw, hi = lo + dw, a = ex[static_cast<std::size_t>(s)];
        return std::sqrt((std::pow(hi, 1 - a) - std::pow(lo, 1 - a)) / (1 - a) / dw);
    };
    auto mirror = [](int bb) { return bb >= 0 ? bb : -bb - 1; };
    auto amp = [&](int s, int bb) {
        auto const z = bb >= 0 ? Z[static_cast<std::size_t>(bb)] : std::conj(Z[static_cast<std::size_t>(mirror(bb))]);
        return cc(s, mirror(bb)) * z;
    };
    auto Kt = [](double u, double t) {
        return std::abs(u) < 1e-14 ? std::complex<double>(t, 0.0)
                                   : (std::exp(std::complex<double>(0.0, u * t)) - 1.0) / std::complex<double>(0.0, u);
    };
    bool const exclude = g.diagonal == SpectralGrid::Diagonal::exclude;
    std::vector<double> out;
    for (double t : tg) {
        std::complex<double> acc = 0.0;
        std::vector<int> idx(static_cast<std::size_t>(k));
        std::function<void(int)> rec = [&](int d) {
            if (d == k) {
                if (exclude) {
                    for (int i = 0; i < k; ++i) {
                        for (int j = i + 1; j < k; ++j) {
                            if (mirror(idx[i]) == mirror(idx[j])) {
                                return;
                            }
                        }
                    }
                }
                double u = 0.0;
                std::complex<double> w = 1.0;
                for (int i = 0; i < k; ++i) {
                    u += (idx[i] + 0.5) * dw;
                    w *= amp(i, idx[i]);
                }
                acc += Kt(u, t) * w;
                return;
            }
            for (int b = -N; b < N; ++b) {
                idx[static_cast<std::size_t>(d)] = b;
                rec(d + 1);
            }
        };
        rec(0);
        if (!exclude && k >= 2) {
            for (int i = 0; i < k; ++i) {
                for (int j = i + 1; j < k; ++j) {
                    double P = 0.0;
                    for (int b = 0; b < N; ++b) {
                        P += 2.0 * dw * cc(i, b) * cc(j, b);
                    }
                    if (k == 2) {
                        acc -= P * t;
                    } else {
                        int const l = 3 - i - j;
                        std::complex<double> F = 0.0;
                        for (int b = -N; b < N; ++b) {
                            F += Kt((b + 0.5) * dw, t) * amp(l, b);
                        }
                        acc -= P * F;
                    }
                }
            }
        }
        out.push_back(acc.real());
    }
    return out;
}

}  // namespace

TEST(TargetCovariance, ClosedForms)
{
    EXPECT_DOUBLE_EQ(target_covariance(0.5, 0.3, 0.8), 0.3);
    EXPECT_DOUBLE_EQ(target_covariance(0.7, 2.0, 2.0), std::pow(2.0, 1.4));
    EXPECT_DOUBLE_EQ(target_covariance(0.7, 0.0, 1.5), 0.0);
    EXPECT_NEAR(target_covariance(0.75, 0.5, 1.0), 0.5 * (std::pow(0.5, 1.5) + 1.0 - std::pow(0.5, 1.5)), 1e-15);
    EXPECT_DOUBLE_EQ(target_covariance(0.85, 0.4, 1.1), target_covariance(0.85, 1.1, 0.4));
    EXPECT_THROW(target_covariance(0.0, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(target_covariance(1.0, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(target_covariance(0.7, -1.0, 1.0), std::invalid_argument);
}

TEST(Fbm, CovarianceAndOrigin)
{
    std::vector<double> const grid{0.0, 0.5, 1.0};
    Ensemble e;
    e.t = grid;
    for (std::uint64_t r = 0; r < 10000; ++r) {
        RandomStream rng(1, r);
        auto const x = fbm_sample(0.7, grid, rng);
        ASSERT_EQ(x[0], 0.0);
        e.rows.push_back(x);
    }
    auto const cov = estimate_covariance(e);
    for (std::size_t i = 1; i < 3; ++i) {
        for (std::size_t j = i; j < 3; ++j) {
            EXPECT_LE(std::abs(cov.estimate[i][j] - target_covariance(0.7, grid[i], grid[j])), 3.0 * cov.se[i][j]);
        }
    }
}

TEST(Fbm, BrownianIncrementsUncorrelated)
{
    std::vector<double> const grid{1.0, 2.0, 3.0};
    Ensemble inc;
    inc.t = {1.0, 2.0};
    for (std::uint64_t r = 0; r < 10000; ++r) {
        RandomStream rng(2, r);
        auto const x = fbm_sample(0.5, grid, rng);
        inc.rows.push_back({x[1] - x[0], x[2] - x[1]});
    }
    auto const cov = estimate_covariance(inc);
    EXPECT_LE(std::abs(cov.estimate[0][1]), 3.0 * cov.se[0][1]);
    EXPECT_LE(std::abs(cov.estimate[0][0] - 1.0), 3.0 * cov.se[0][0]);
}

TEST(Hermite, PolynomialValues)
{
    for (double x : {-1.5, 0.0, 0.3, 2.0}) {
        EXPECT_DOUBLE_EQ(hermite_polynomial(0, x), 1.0);
        EXPECT_DOUBLE_EQ(hermite_polynomial(1, x), x);
        EXPECT_NEAR(hermite_polynomial(2, x), x * x - 1.0, 1e-14);
        EXPECT_NEAR(hermite_polynomial(3, x), x * x * x - 3.0 * x, 1e-14);
        EXPECT_NEAR(hermite_polynomial(4, x), x * x * x * x - 6.0 * x * x + 3.0, 1e-13);
    }
    EXPECT_THROW(hermite_polynomial(-1, 1.0), std::invalid_argument);
}

TEST(Hermite, OrthogonalUnderGaussian)
{
    RandomStream rng(3, 0);
    int const n = 1000000;
    double m[4][4] = {};
    for (int r = 0; r < n; ++r) {
        double const z = rng.normal();
        double h[4];
        for (int j = 0; j < 4; ++j) {
            h[j] = hermite_polynomial(j + 1, z);
        }
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                m[i][j] += h[i] * h[j];
            }
        }
    }
    double const fact[] = {1.0, 2.0, 6.0, 24.0};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            double const expected = i == j ? fact[i] : 0.0;
            // Var(He_i He_j) is bounded by E He_i^2 He_j^2 <= (2i+2j)!-ish; 5 SE with a generous scale.
            double const scale = std::sqrt(fact[i] * fact[j] * (i + j + 2) * 10.0 / n);
            EXPECT_NEAR(m[i][j] / n, expected, 5.0 * scale) << i << j;
        }
    }
}

TEST(Lrd, CorrelationSequence)
{
    EXPECT_DOUBLE_EQ(lrd_correlation(0.75, 2, 0), 1.0);
    EXPECT_DOUBLE_EQ(lrd_correlation(0.75, 2, 1), std::pow(2.0, -0.25));
    EXPECT_DOUBLE_EQ(lrd_correlation(0.6, 3, 9), std::pow(10.0, -0.8 / 3.0));
    EXPECT_THROW(LrdSampler(0.5, 1, 10), std::invalid_argument);
    EXPECT_THROW(LrdSampler(0.4, 2, 10), std::invalid_argument);
}

TEST(Lrd, VarianceAndLagOne)
{
    for (std::size_t n : {std::size_t{500}, std::size_t{5000}}) {
        LrdSampler const sampler(0.7, 2, n);
        EXPECT_EQ(sampler.method(), n <= 4096 ? LrdSampler::Method::cholesky : LrdSampler::Method::circulant);
        EXPECT_LT(sampler.perturbation(), 1e-8);
        std::vector<double> var, lag1, lag5;
        for (std::uint64_t r = 0; r < 2000; ++r) {
            RandomStream rng(4, r);
            auto const x = sampler.sample(rng);
            ASSERT_EQ(x.size(), n);
            var.push_back(x[0] * x[0]);
            lag1.push_back(x[n / 2] * x[n / 2 + 1]);
            lag5.push_back(x[n - 6] * x[n - 1]);
        }
        auto const v = mean_estimate(var);
        auto const c1 = mean_estimate(lag1);
        auto const c5 = mean_estimate(lag5);
        EXPECT_LE(std::abs(v.value - 1.0), 3.0 * v.se) << n;
        EXPECT_LE(std::abs(c1.value - lrd_correlation(0.7, 2, 1)), 3.0 * c1.se) << n;
        EXPECT_LE(std::abs(c5.value - lrd_correlation(0.7, 2, 5)), 3.0 * c5.se) << n;
    }
}

TEST(PartialSum, ShapeOriginAndDeterminism)
{
    OracleConfig config;
    config.k = 2;
    config.H = 0.7;
    config.n = 256;
    config.t_grid = {0.0, 0.5, 1.0};
    RandomStream a(5, 0), b(5, 0);
    auto const x = hermite_partial_sum(config, a);
    ASSERT_EQ(x.size(), 3u);
    EXPECT_EQ(x[0], 0.0);
    EXPECT_EQ(x, hermite_partial_sum(config, b));
    config.H = 0.5;
    EXPECT_THROW(config.validate(), std::invalid_argument);
}

TEST(PartialSum, SecondOrderIsRightSkewed)
{
    OracleConfig config;
    config.k = 2;
    config.H = 0.6;
    config.n = 1024;
    config.t_grid = {1.0};
    std::vector<double> z;
    for (std::uint64_t r = 0; r < 2000; ++r) {
        RandomStream rng(6, r);
        z.push_back(hermite_partial_sum(config, rng)[0]);
    }
    auto const s = skewness(z);
    EXPECT_GE(s.value / s.se, 3.0);
}

TEST(PartialSum, FirstOrderCovariance)
{
    OracleConfig config;
    config.k = 1;
    config.H = 0.7;
    config.n = 1024;
    config.t_grid = {0.5, 1.0, 2.0};
    Ensemble e;
    e.t = config.t_grid;
    for (std::uint64_t r = 0; r < 2000; ++r) {
        RandomStream rng(7, r);
        e.rows.push_back(hermite_partial_sum(config, rng));
    }
    for (double t : {0.5, 2.0}) {
        double const target = target_covariance(0.7, t, 2.0) / target_covariance(0.7, 1.0, 1.0);
        auto const est = normalized_covariance(e, t, 2.0);
        EXPECT_LT(std::abs(est.value - target) / target, 0.1) << t;
    }
}

TEST(Spectral, OriginAndValidation)
{
    std::vector<double> const ex{0.7};
    std::vector<double> const tg{0.0, 1.0};
    SpectralGrid grid;
    RandomStream rng(8, 0);
    auto const s = spectral_hermite_sample(ex, tg, grid, rng);
    EXPECT_EQ(s.values[0], 0.0);
    std::vector<double> const bad{1.2};
    EXPECT_THROW(spectral_hermite_sample(bad, tg, grid, rng), std::invalid_argument);
    grid.bins = 0;
    EXPECT_THROW(grid.validate(), std::invalid_argument);
    auto const sym = symmetric_exponents(2, 0.75);
    ASSERT_EQ(sym.size(), 2u);
    EXPECT_NEAR(sym[0], 0.75, 1e-15);
}

TEST(Spectral, MatchesBruteForceLattice)
{
    std::vector<double> const tg{0.7, 1.3};
    for (auto rule : {SpectralGrid::Diagonal::exclude, SpectralGrid::Diagonal::wick}) {
        for (int k : {1, 2, 3}) {
            std::vector<double> ex(static_cast<std::size_t>(k), 0.5);
            if (k == 2) {
                ex = {0.6, 0.7};
            }
            if (k == 3) {
                ex = {0.8, 0.85, 0.9};
            }
            SpectralGrid grid;
            grid.omega = 3.0;
            grid.bins = 4;
            grid.compensate_tail = false;
            grid.diagonal = rule;
            RandomStream rng(11, static_cast<std::uint64_t>(k));
            auto const fast = spectral_hermite_sample(ex, tg, grid, rng);
            auto const slow = spectral_brute_force(ex, tg, grid, 11, static_cast<std::uint64_t>(k));
            for (std::size_t i = 0; i < tg.size(); ++i) {
                EXPECT_NEAR(fast.values[i], slow[i], 1e-10 * (1.0 + std::abs(slow[i]))) << k;
                EXPECT_LT(std::abs(fast.imaginary[i]), 1e-10 * (1.0 + std::abs(slow[i])));
            }
        }
    }
}

TEST(Spectral, FirstOrderIsFbm)
{
    std::vector<double> const ex{0.7};
    std::vector<double> const tg{0.5, 1.0, 2.0};
    SpectralGrid const grid;
    Ensemble e;
    e.t = tg;
    for (std::uint64_t r = 0; r < 2000; ++r) {
        RandomStream rng(12, r);
        auto const s = spectral_hermite_sample(ex, tg, grid, rng);
        for (std::size_t i = 0; i < tg.size(); ++i) {
            ASSERT_LT(std::abs(s.imaginary[i]), 1e-9 * (1.0 + std::abs(s.values[i])));
        }
        e.rows.push_back(s.values);
    }
    for (auto [s, t] : {std::pair{0.5, 1.0}, std::pair{0.5, 2.0}, std::pair{2.0, 2.0}}) {
        double const target = target_covariance(0.85, s, t) / target_covariance(0.85, 1.0, 1.0);
        auto const est = normalized_covariance(e, s, t);
        EXPECT_LT(std::abs(est.value - target) / target, 0.1) << s << " " << t;
    }
}

TEST(Spectral, AgreesWithPartialSumAtSecondOrder)
{
    std::vector<double> const tg{0.5, 1.0, 2.0};
    OracleConfig config;
    config.k = 2;
    config.H = 0.6;
    config.n = 2048;
    config.t_grid = tg;
    auto const ex = symmetric_exponents(2, 0.6);
    SpectralGrid const grid;
    Ensemble spectral, partial;
    spectral.t = partial.t = tg;
    for (std::uint64_t r = 0; r < 2000; ++r) {
        RandomStream a(13, r), b(14, r);
        spectral.rows.push_back(spectral_hermite_sample(ex, tg, grid, a).values);
        partial.rows.push_back(hermite_partial_sum(config, b));
    }
    for (auto [s, t] : {std::pair{0.5, 2.0}, std::pair{2.0, 2.0}}) {
        double const x = normalized_covariance(spectral, s, t).value;
        double const y = normalized_covariance(partial, s, t).value;
        EXPECT_LT(std::abs(x - y) / y, 0.15) << s << " " << t;
    }
    auto const sk = skewness(spectral.column(1));
    EXPECT_GE(sk.value / sk.se, 3.0);
}
