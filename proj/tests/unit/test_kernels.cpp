#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hpl/kernels.hpp"
#include "hpl/quadrature.hpp"
#include "hpl/rng.hpp"

using namespace hpl;

namespace {

// V^delta f_eps(x) by singularity subtraction:
//   int (f(y) - f(x)) h(x - y) dy + f(x) int_{annulus within support} |x - y|^(gamma - 1) dy.
double v_delta_oracle(Mollifier const& m, double eps, double gamma, double delta, double x)
{
    double const lo = delta;
    double const hi = delta > 0.0 ? 1.0 / delta : std::numeric_limits<double>::infinity();
    double const fx = mollifier_eval(m, eps, x);
    auto h = [&](double u) { return (u > lo && u < hi) ? std::pow(u, gamma - 1.0) : 0.0; };
    std::vector<double> breaks{-eps, eps, x};
    for (double s : {-1.0, 1.0}) {
        breaks.push_back(x + s * lo);
        if (std::isfinite(hi)) {
            breaks.push_back(x + s * hi);
        }
    }
    std::vector<double> inside;
    for (double b : breaks) {
        if (b >= -eps && b <= eps) {
            inside.push_back(b);
        }
    }
    std::sort(inside.begin(), inside.end());
    double const smooth = quad::integrate_panels(
        [&](double y) {
            double const u = std::abs(x - y);
            return u == 0.0 ? 0.0 : (mollifier_eval(m, eps, y) - fx) * h(u);
        },
        inside, 1e-12);
    // int over y in [-eps, eps] with lo < |x - y| < hi of |x - y|^(gamma-1), in closed form.
    auto primitive = [&](double a, double b) {  // int_a^b u^(gamma-1) du on the annulus
        a = std::max(a, lo);
        b = std::min(b, hi);
        return b > a ? (std::pow(b, gamma) - std::pow(a, gamma)) / gamma : 0.0;
    };
    double singular = 0.0;
    if (x >= eps) {
        singular = primitive(x - eps, x + eps);
    } else if (x <= -eps) {
        singular = primitive(-x - eps, -x + eps);
    } else {
        singular = primitive(0.0, eps - x) + primitive(0.0, x + eps);
    }
    return smooth + fx * singular;
}

}  // namespace

TEST(Mollifier, NormalizationSymmetryAndSupport)
{
    for (auto profile : {MollifierProfile::bump, MollifierProfile::cosine}) {
        Mollifier const m(profile);
        for (double eps : {0.5, 0.1}) {
            double const mass =
                quad::integrate([&](double x) { return mollifier_eval(m, eps, x); }, -eps, eps, 1e-13);
            EXPECT_NEAR(mass, 1.0, 1e-10);
            EXPECT_EQ(mollifier_eval(m, eps, 2.0 * eps), 0.0);
            EXPECT_EQ(mollifier_eval(m, eps, -eps), 0.0);
        }
        RandomStream rng(1, 0);
        for (int i = 0; i < 100; ++i) {
            double const x = rng.uniform(-1.2, 1.2);
            EXPECT_EQ(mollifier_eval(m, 0.3, x), mollifier_eval(m, 0.3, -x));
            EXPECT_GE(m(x), 0.0);
        }
        EXPECT_THROW(mollifier_eval(m, 0.0, 0.1), std::invalid_argument);
        EXPECT_THROW(mollifier_eval(m, -1.0, 0.1), std::invalid_argument);
    }
}

TEST(Mollifier, MomentsAndSupNorm)
{
    Mollifier const bump(MollifierProfile::bump);
    // mpmath: int_{-1}^{1} exp(-1/(1-x^2)) dx
    EXPECT_NEAR(bump.norm_const(), 1.0 / 0.44399381616807943, 1e-12);
    EXPECT_NEAR(bump.sup_norm(), bump(0.0), 1e-15);
    double const m2 = quad::integrate([&](double x) { return x * x * bump(x); }, -1.0, 1.0, 1e-14);
    EXPECT_NEAR(bump.second_moment(), m2, 1e-12);
    Mollifier const cosine(MollifierProfile::cosine);
    EXPECT_NEAR(cosine.second_moment(), 1.0 / 3.0 - 2.0 / (std::numbers::pi * std::numbers::pi), 1e-12);
}

TEST(Mollifier, CdfMatchesQuadrature)
{
    for (auto profile : {MollifierProfile::bump, MollifierProfile::cosine}) {
        Mollifier const m(profile);
        for (double x : {-1.5, -0.9, -0.3, 0.0, 0.41, 0.77, 0.999, 2.0}) {
            double const direct =
                x <= -1.0 ? 0.0 : quad::integrate([&](double y) { return m(y); }, -1.0, std::min(x, 1.0), 1e-14);
            EXPECT_NEAR(m.cdf(x), direct, 1e-10) << x;
        }
    }
}

TEST(Mollifier, FourierMatchesQuadrature)
{
    for (auto profile : {MollifierProfile::bump, MollifierProfile::cosine}) {
        Mollifier const m(profile);
        for (double z : {0.0, 0.5, 3.0, std::numbers::pi, 17.0}) {
            std::vector<double> breaks{-1.0, 0.0, 1.0};
            double const direct = quad::integrate_panels(
                [&](double x) { return m(x) * std::cos(z * x); }, breaks, 1e-13);
            EXPECT_NEAR(m.fourier(z), direct, 1e-10) << z;
            EXPECT_LE(std::abs(m.fourier(z)), 1.0 + 1e-15);
        }
    }
}

TEST(SmoothedIndicator, ExamplesAndMass)
{
    Mollifier const g;
    auto const psi = smoothed_indicator(StepFunction::indicator(0.0, 1.0), g, 0.1);
    EXPECT_EQ(psi(0.5), 1.0);
    EXPECT_EQ(psi(-1.0), 0.0);
    EXPECT_EQ(psi(1.2), 0.0);
    EXPECT_NEAR(psi(0.0), 0.5, 1e-12);
    std::vector<double> breaks{-0.1, 0.0, 0.1, 0.9, 1.0, 1.1};
    EXPECT_NEAR(quad::integrate_panels(psi, breaks, 1e-12), 1.0, 1e-8);
    EXPECT_THROW(smoothed_indicator(StepFunction::indicator(0.0, 1.0), g, 0.0), std::invalid_argument);
    EXPECT_THROW(smoothed_indicator(StepFunction::indicator(0.0, 1.0), g, 1.0), std::invalid_argument);
}

TEST(SmoothedIndicator, EqualsDirectConvolution)
{
    Mollifier const g;
    StepFunction const step{{2.0, -0.5}, {Interval{0.0, 1.0}, Interval{0.5, 2.0}}};
    double const kappa = 0.2;
    auto const psi = smoothed_indicator(step, g, kappa);
    for (double x : {-0.15, 0.05, 0.45, 0.6, 1.1, 1.95, 2.1}) {
        std::vector<double> breaks{-kappa, kappa};
        for (double edge : {0.0, 0.5, 1.0, 2.0}) {
            if (std::abs(x - edge) < kappa) {
                breaks.push_back(x - edge);
            }
        }
        std::sort(breaks.begin(), breaks.end());
        double const direct = quad::integrate_panels(
            [&](double y) { return step(x - y) * mollifier_eval(g, kappa, y); }, breaks, 1e-12);
        EXPECT_NEAR(psi(x), direct, 1e-9) << x;
    }
    EXPECT_NEAR(step.integral(), 2.0 - 0.75, 1e-15);
}

TEST(SmoothedIndicator, FourierBound)
{
    Mollifier const g;
    StepFunction const step{{1.0, 0.5}, {Interval{0.0, 1.0}, Interval{-2.0, 0.5}}};
    auto const psi = smoothed_indicator(step, g, 0.3);
    for (double theta = -60.0; theta <= 60.0; theta += 0.173) {
        EXPECT_LE(std::abs(psi.fourier(theta)), std::abs(step.fourier(theta)) + 1e-15) << theta;
    }
    // Fourier transform of the step function against direct quadrature.
    for (double theta : {0.0, 0.7, 5.0}) {
        double const re = quad::integrate_panels([&](double x) { return step(x) * std::cos(theta * x); },
                                                 std::vector<double>{-2.0, 0.0, 0.5, 1.0}, 1e-13);
        double const im = quad::integrate_panels([&](double x) { return step(x) * std::sin(theta * x); },
                                                 std::vector<double>{-2.0, 0.0, 0.5, 1.0}, 1e-13);
        EXPECT_NEAR(step.fourier(theta).real(), re, 1e-10);
        EXPECT_NEAR(step.fourier(theta).imag(), im, 1e-10);
    }
}

TEST(RieszKernel, DomainAndTruncation)
{
    EXPECT_THROW(RieszKernel(0.0, 0.1), std::invalid_argument);
    EXPECT_THROW(RieszKernel(0.5, 0.1), std::invalid_argument);
    EXPECT_THROW(RieszKernel(0.2, -0.1), std::invalid_argument);
    RieszKernel const h(0.2, 0.1);
    EXPECT_EQ(h(0.05), 0.0);
    EXPECT_EQ(h(11.0), 0.0);
    EXPECT_DOUBLE_EQ(h(-2.0), std::pow(2.0, -0.8));
}

TEST(VDelta, EmptyAnnulusGivesZero)
{
    Mollifier const m;
    for (double delta : {1.0, 2.0}) {
        EXPECT_EQ(v_delta(RieszKernel(0.2, delta), TestFunction::from(m, 0.1), 0.01), 0.0);
    }
}

TEST(VDelta, MatchesSingularitySubtractionOracle)
{
    Mollifier const m;
    for (double gamma : {0.05, 0.15, 0.4}) {
        for (double delta : {0.0, 0.02, 0.3}) {
            for (double x : {0.0, 0.013, 0.07, 0.2, 1.5}) {
                double const got = v_delta(RieszKernel(gamma, delta), TestFunction::from(m, 0.1), x, 1e-11);
                double const want = v_delta_oracle(m, 0.1, gamma, delta, x);
                EXPECT_NEAR(got, want, 1e-7 * std::max(1.0, std::abs(want)))
                    << gamma << " " << delta << " " << x;
            }
        }
    }
}

TEST(VDelta, MonotoneAsDeltaDecreases)
{
    Mollifier const m;
    RandomStream rng(2, 0);
    for (int i = 0; i < 200; ++i) {
        double const gamma = rng.uniform(0.02, 0.48);
        double const eps = rng.uniform(0.01, 0.5);
        double const x = rng.uniform(-2.0, 2.0);
        double const delta = rng.uniform(0.001, 0.99);
        double const smaller = delta * rng.uniform(0.05, 1.0);
        auto const f = TestFunction::from(m, eps);
        double const a = v_delta(RieszKernel(gamma, delta), f, x);
        double const b = v_delta(RieszKernel(gamma, smaller), f, x);
        double const c = v_delta(RieszKernel(gamma, 0.0), f, x);
        EXPECT_LE(a, b + 1e-9);
        EXPECT_LE(b, c + 1e-9);
        EXPECT_LE(v_delta(RieszKernel(gamma, delta), f, x),
                  v_delta(RieszKernel(gamma, delta / 2.0), f, x) + 1e-9);
    }
}

TEST(VDelta, SupNormBound)
{
    Mollifier const m;
    double const gamma = 0.15;
    double const x = 0.05;
    double const v = v_delta(RieszKernel(gamma, 0.0), TestFunction::from(m, 0.1), x);
    EXPECT_LE(v, m.sup_norm() * std::pow(2.0, 2.0 - gamma) / gamma * std::pow(x, gamma - 1.0));
}

TEST(VDelta, PointwiseLimit)
{
    Mollifier const m;
    double const gamma = 0.15;
    double const target = std::pow(0.5, gamma - 1.0);
    double const v = v_delta(RieszKernel(gamma, 0.0), TestFunction::from(m, 1e-3), 0.5);
    EXPECT_NEAR(v, target, 0.01 * target);
    double previous = std::numeric_limits<double>::infinity();
    for (double eps : {0.3, 0.1, 0.03, 0.01, 0.003, 0.001}) {
        double const err = std::abs(v_delta(RieszKernel(gamma, 0.0), TestFunction::from(m, eps), 0.5) - target);
        EXPECT_LT(err, previous) << eps;
        previous = err;
    }
}

TEST(PairKernel, TableMatchesDirectConvolution)
{
    Mollifier const m;
    for (double delta : {0.05, 0.0}) {
        double const gamma = 0.05;
        double const eps = 0.05;
        auto const k = PairKernel::mollified(gamma, eps, delta, m);
        RandomStream rng(3, 0);
        double const top = delta > 0.0 ? 1.0 / delta + eps : 100.0;
        double peak = 0.0;
        for (double z = 0.0; z < 3.0 * eps; z += eps / 200.0) {
            peak = std::max(peak, k(z));
        }
        for (int i = 0; i < 300; ++i) {
            double const z = rng.uniform(-top, top) * (i % 3 == 0 ? 0.01 : 1.0);
            double const want = v_delta(RieszKernel(gamma, delta), TestFunction::from(m, eps), z, 1e-11);
            // Relative 1e-5 away from the support edges, 1e-5 of the peak everywhere.
            bool const edge = std::abs(z) < 2.0 * eps || std::abs(z) > top - 2.0 * eps;
            EXPECT_NEAR(k(z), want, 1e-5 * std::max(std::abs(want), edge ? peak : 0.0)) << z;
        }
        if (delta > 0.0) {
            EXPECT_DOUBLE_EQ(k.radius(), 1.0 / delta + eps);
            EXPECT_EQ(k(k.radius() + 1e-9), 0.0);
        } else {
            EXPECT_TRUE(std::isinf(k.radius()));
        }
    }
    EXPECT_THROW(PairKernel::mollified(0.05, 0.0, 0.05, m), std::invalid_argument);
}

TEST(PairKernel, RawFloorAndReach)
{
    auto const raw = PairKernel::raw(0.2, 0.01);
    EXPECT_TRUE(raw.is_raw());
    EXPECT_DOUBLE_EQ(raw(0.0), std::pow(0.01, -0.8));
    EXPECT_DOUBLE_EQ(raw(0.005), std::pow(0.01, -0.8));
    EXPECT_DOUBLE_EQ(raw(-3.0), std::pow(3.0, -0.8));

    auto const near = raw.within(2.0);
    EXPECT_EQ(near.radius(), 2.0);
    EXPECT_EQ(near(2.5), 0.0);
    EXPECT_EQ(near(1.5), raw(1.5));
    EXPECT_THROW(raw.within(0.0), std::invalid_argument);

    auto const moll = PairKernel::mollified(0.05, 0.05, 0.05, Mollifier{});
    EXPECT_EQ(moll.within(100.0).radius(), moll.radius());
}
