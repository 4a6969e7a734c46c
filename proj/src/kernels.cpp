#include "hpl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "hpl/quadrature.hpp"

namespace hpl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kCdfCells = 4096;

double bump_shape(double x)
{
    double const s = 1.0 - x * x;
    return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

}  // namespace

Mollifier::Mollifier(MollifierProfile profile) : profile_(profile)
{
    if (profile_ == MollifierProfile::cosine) {
        norm_const_ = 1.0;
        sup_norm_ = 1.0;
        second_moment_ = quad::integrate([&](double x) { return x * x * raw(x); }, -1.0, 1.0, 1e-14);
        return;
    }
    double const mass = quad::integrate(bump_shape, -1.0, 1.0, 1e-15);
    norm_const_ = 1.0 / mass;
    sup_norm_ = norm_const_ * std::exp(-1.0);
    second_moment_ = norm_const_ * quad::integrate([](double x) { return x * x * bump_shape(x); },
                                                   -1.0, 1.0, 1e-15);
    cdf_table_.resize(kCdfCells + 1);
    cdf_table_[0] = 0.0;
    double const h = 2.0 / static_cast<double>(kCdfCells);
    double acc = 0.0;
    for (std::size_t i = 0; i < kCdfCells; ++i) {
        double const a = -1.0 + h * static_cast<double>(i);
        acc += norm_const_ * quad::integrate(bump_shape, a, a + h, 1e-17);
        cdf_table_[i + 1] = acc;
    }
    // Remove the accumulated rounding so that G(1) = 1 exactly.
    for (double& v : cdf_table_) {
        v /= acc;
    }
}

double Mollifier::raw(double x) const
{
    if (profile_ == MollifierProfile::cosine) {
        return std::abs(x) < 1.0 ? 0.5 * (1.0 + std::cos(kPi * x)) : 0.0;
    }
    return bump_shape(x);
}

double Mollifier::operator()(double x) const
{
    return norm_const_ * raw(x);
}

double Mollifier::cdf(double x) const
{
    if (x <= -1.0) {
        return 0.0;
    }
    if (x >= 1.0) {
        return 1.0;
    }
    if (profile_ == MollifierProfile::cosine) {
        return 0.5 * (x + 1.0) + std::sin(kPi * x) / (2.0 * kPi);
    }
    double const h = 2.0 / static_cast<double>(kCdfCells);
    double const pos = (x + 1.0) / h;
    auto i = static_cast<std::size_t>(pos);
    if (i >= kCdfCells) {
        i = kCdfCells - 1;
    }
    double const t = pos - static_cast<double>(i);
    double const x0 = -1.0 + h * static_cast<double>(i);
    double const y0 = cdf_table_[i];
    double const y1 = cdf_table_[i + 1];
    double const d0 = (*this)(x0) * h;
    double const d1 = (*this)(x0 + h) * h;
    double const t2 = t * t;
    double const t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * y1
           + (t3 - t2) * d1;
}

double Mollifier::fourier(double z) const
{
    z = std::abs(z);
    if (profile_ == MollifierProfile::cosine) {
        double const d = kPi * kPi - z * z;
        if (z < 1e-4) {
            // sinc-type expansion around 0: 1 - z^2 (1/6 - 1/pi^2) + O(z^4)
            return 1.0 - z * z * (1.0 / 6.0 - 1.0 / (kPi * kPi));
        }
        if (std::abs(d) < 1e-6) {
            return quad::integrate([&](double x) { return 2.0 * raw(x) * std::cos(z * x); }, 0.0,
                                   1.0, 1e-14);
        }
        return kPi * kPi * std::sin(z) / (z * d);
    }
    if (z == 0.0) {
        return 1.0;
    }
    std::vector<double> breaks{0.0};
    double const half_period = kPi / z;
    for (double b = half_period; b < 1.0; b += half_period) {
        breaks.push_back(b);
    }
    breaks.push_back(1.0);
    return 2.0 * norm_const_
           * quad::integrate_panels([&](double x) { return bump_shape(x) * std::cos(z * x); }, breaks,
                                    1e-14);
}

double mollifier_eval(Mollifier const& m, double eps, double x)
{
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw std::invalid_argument("mollifier width must be positive");
    }
    double const u = x / eps;
    if (std::abs(u) >= 1.0) {
        return 0.0;
    }
    return m(u) / eps;
}

StepFunction StepFunction::indicator(double lo, double hi)
{
    if (!(hi > lo)) {
        throw std::invalid_argument("indicator needs lo < hi");
    }
    return StepFunction{{1.0}, {Interval{lo, hi}}};
}

double StepFunction::operator()(double x) const
{
    double v = 0.0;
    for (std::size_t j = 0; j < intervals.size(); ++j) {
        if (intervals[j].contains(x)) {
            v += coefficients[j];
        }
    }
    return v;
}

std::complex<double> StepFunction::fourier(double theta) const
{
    using namespace std::complex_literals;
    std::complex<double> v = 0.0;
    for (std::size_t j = 0; j < intervals.size(); ++j) {
        double const a = intervals[j].lo;
        double const b = intervals[j].hi;
        if (std::abs(theta) * (b - a) < 1e-8) {
            v += coefficients[j] * (b - a) * std::exp(1i * theta * 0.5 * (a + b));
        } else {
            v += coefficients[j] * (std::exp(1i * theta * b) - std::exp(1i * theta * a)) / (1i * theta);
        }
    }
    return v;
}

double StepFunction::integral() const
{
    double v = 0.0;
    for (std::size_t j = 0; j < intervals.size(); ++j) {
        v += coefficients[j] * intervals[j].length();
    }
    return v;
}

Interval StepFunction::support() const
{
    if (intervals.empty()) {
        return Interval{0.0, 0.0};
    }
    Interval s = intervals.front();
    for (auto const& iv : intervals) {
        s.lo = std::min(s.lo, iv.lo);
        s.hi = std::max(s.hi, iv.hi);
    }
    return s;
}

SmoothedIndicator::SmoothedIndicator(StepFunction psi, Mollifier g, double kappa)
    : psi_(std::move(psi)), g_(std::move(g)), kappa_(kappa)
{
    if (!(kappa_ > 0.0 && kappa_ < 1.0)) {
        throw std::invalid_argument("smoothing width kappa must lie in (0, 1)");
    }
    if (psi_.coefficients.size() != psi_.intervals.size()) {
        throw std::invalid_argument("step function has mismatched pieces");
    }
}

double SmoothedIndicator::operator()(double x) const
{
    double v = 0.0;
    for (std::size_t j = 0; j < psi_.intervals.size(); ++j) {
        auto const& iv = psi_.intervals[j];
        double const lo = (x - iv.hi) / kappa_;
        double const hi = (x - iv.lo) / kappa_;
        if (lo >= 1.0 || hi <= -1.0) {
            continue;
        }
        if (lo <= -1.0 && hi >= 1.0) {
            v += psi_.coefficients[j];
            continue;
        }
        v += psi_.coefficients[j] * (g_.cdf(hi) - g_.cdf(lo));
    }
    return v;
}

std::complex<double> SmoothedIndicator::fourier(double theta) const
{
    return psi_.fourier(theta) * g_.fourier(kappa_ * theta);
}

Interval SmoothedIndicator::support() const
{
    Interval s = psi_.support();
    return Interval{s.lo - kappa_, s.hi + kappa_};
}

SmoothedIndicator smoothed_indicator(StepFunction psi, Mollifier g, double kappa)
{
    return SmoothedIndicator(std::move(psi), std::move(g), kappa);
}

RieszKernel::RieszKernel(double gamma_, double delta_) : gamma(gamma_), delta(delta_)
{
    if (!(gamma > 0.0 && gamma < 0.5)) {
        throw std::invalid_argument("Riesz exponent gamma must lie in (0, 1/2)");
    }
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
        throw std::invalid_argument("truncation delta must be finite and non-negative");
    }
}

double RieszKernel::operator()(double x) const
{
    double const a = std::abs(x);
    if (delta > 0.0 && (a <= delta || a >= 1.0 / delta)) {
        return 0.0;
    }
    if (a == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return std::pow(a, gamma - 1.0);
}

TestFunction TestFunction::from(Mollifier const& m, double eps)
{
    return TestFunction{[m, eps](double y) { return mollifier_eval(m, eps, y); },
                        Interval{-eps, eps},
                        {0.0}};
}

TestFunction TestFunction::from(SmoothedIndicator const& s)
{
    std::vector<double> breaks;
    double const k = s.kappa();
    for (auto const& iv : s.step().intervals) {
        for (double e : {iv.lo, iv.hi}) {
            breaks.insert(breaks.end(), {e - k, e, e + k});
        }
    }
    return TestFunction{[s](double y) { return s(y); }, s.support(), std::move(breaks)};
}

TestFunction TestFunction::from(StepFunction const& s)
{
    std::vector<double> breaks;
    for (auto const& iv : s.intervals) {
        breaks.push_back(iv.lo);
        breaks.push_back(iv.hi);
    }
    return TestFunction{[s](double y) { return s(y); }, s.support(), std::move(breaks)};
}

double v_delta(RieszKernel const& kernel, TestFunction const& phi, double x, double abs_tol)
{
    double const g = kernel.gamma;
    double const u_min = kernel.delta;
    double const u_max = kernel.delta > 0.0 ? 1.0 / kernel.delta
                                            : std::numeric_limits<double>::infinity();
    if (u_min >= u_max) {
        return 0.0;
    }
    double total = 0.0;
    for (int side : {+1, -1}) {
        // y = x + side * u with u in [ua, ub]
        double ua = 0.0;
        double ub = 0.0;
        if (side > 0) {
            ua = std::max(u_min, phi.support.lo - x);
            ub = std::min(u_max, phi.support.hi - x);
        } else {
            ua = std::max(u_min, x - phi.support.hi);
            ub = std::min(u_max, x - phi.support.lo);
        }
        ua = std::max(ua, 0.0);
        if (!(ub > ua)) {
            continue;
        }
        double const wa = std::pow(ua, g);
        double const wb = std::pow(ub, g);
        std::vector<double> breaks{wa};
        for (double b : phi.breaks) {
            double const u = side * (b - x);
            if (u > ua && u < ub) {
                breaks.push_back(std::pow(u, g));
            }
        }
        breaks.push_back(wb);
        std::sort(breaks.begin(), breaks.end());
        auto integrand = [&](double w) { return phi.f(x + side * std::pow(w, 1.0 / g)) / g; };
        total += quad::integrate_panels(integrand, breaks, 0.5 * abs_tol);
    }
    return total;
}

PairKernel PairKernel::raw(double gamma, double floor)
{
    if (!(gamma > 0.0 && gamma < 0.5)) {
        throw std::invalid_argument("Riesz exponent gamma must lie in (0, 1/2)");
    }
    if (!(floor > 0.0)) {
        throw std::invalid_argument("raw kernel floor must be positive");
    }
    PairKernel k;
    k.raw_ = true;
    k.gamma_ = gamma;
    k.floor_ = floor;
    return k;
}

PairKernel PairKernel::mollified(double gamma, double eps, double delta, Mollifier const& m,
                                 double max_radius)
{
    RieszKernel const h(gamma, delta);
    if (!(eps > 0.0)) {
        throw std::invalid_argument("mollified kernel needs eps > 0");
    }
    PairKernel k;
    k.raw_ = false;
    k.gamma_ = gamma;
    k.eps_ = eps;
    k.m2_ = m.second_moment();
    if (delta > 0.0) {
        k.radius_ = (delta < 1.0) ? 1.0 / delta + eps : 0.0;
        k.table_end_ = k.radius_;
    } else {
        k.table_end_ = std::max(max_radius, 4.0 * eps);
    }
    if (k.table_end_ == 0.0) {
        return k;
    }
    double coarse = eps / 64.0;
    auto const n = static_cast<std::size_t>(std::ceil(k.table_end_ / coarse)) + 1;
    coarse = k.table_end_ / static_cast<double>(n - 1);
    TestFunction const f = TestFunction::from(m, eps);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        values[i] = v_delta(h, f, coarse * static_cast<double>(i), 1e-11);
    }
    boost::math::interpolators::cardinal_cubic_b_spline<double> const spline(
        values.begin(), values.end(), 0.0, coarse, 0.0,
        delta > 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN());
    std::size_t const fine = (n - 1) * 8 + 1;
    k.step_ = coarse / 8.0;
    k.inv_step_ = 1.0 / k.step_;
    auto table = std::make_shared<std::vector<double>>(fine + 1);
    for (std::size_t i = 0; i < fine; ++i) {
        (*table)[i] = spline(std::min(k.step_ * static_cast<double>(i), k.table_end_));
    }
    (*table)[fine] = (*table)[fine - 1];
    k.table_ = std::move(table);
    return k;
}

PairKernel PairKernel::within(double reach) const
{
    if (!(reach > 0.0)) {
        throw std::invalid_argument("reach must be positive");
    }
    PairKernel k = *this;
    k.radius_ = std::min(radius_, reach);
    return k;
}

double PairKernel::operator()(double z) const
{
    double const a = std::abs(z);
    if (a >= radius_) {
        return 0.0;
    }
    if (raw_) {
        return std::pow(std::max(a, floor_), gamma_ - 1.0);
    }
    if (a > table_end_) {
        double const r = eps_ / a;
        return std::pow(a, gamma_ - 1.0)
               * (1.0 + 0.5 * (gamma_ - 1.0) * (gamma_ - 2.0) * m2_ * r * r);
    }
    double const pos = a * inv_step_;
    auto const i = static_cast<std::size_t>(pos);
    double const t = pos - static_cast<double>(i);
    auto const& tab = *table_;
    return tab[i] + t * (tab[i + 1] - tab[i]);
}

}  // namespace hpl
