#pragma once

#include <span>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace hpl::quad {

namespace detail {

template <class F>
double integrate_rec(F& f, double a, double b, double tol_density, double min_width)
{
    double error = 0.0;
    double l1 = 0.0;
    double const value =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &error, &l1);
    double const width = b - a;
    // boost reports the Kronrod-Gauss difference on the reference interval [-1, 1].
    error *= 0.5 * width;
    if (error <= tol_density * width || error <= 1e-15 * l1 || width <= min_width) {
        return value;
    }
    double const mid = a + 0.5 * width;
    return integrate_rec(f, a, mid, tol_density, min_width)
           + integrate_rec(f, mid, b, tol_density, min_width);
}

}  // namespace detail

/// Adaptive 15/31-point Gauss-Kronrod on [a, b] by recursive bisection.
/// Each panel may carry an error estimate proportional to its width, so the
/// total estimate stays below `abs_tol`. Panels narrower than 1e-10 of the
/// range are accepted as is (integrable endpoint cusps such as theta^alpha
/// at 0 would otherwise refine forever under the conservative estimate).
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-12)
{
    if (a == b) {
        return 0.0;
    }
    double const width = b - a;
    return detail::integrate_rec(f, a, b, abs_tol / width, 1e-10 * width);
}

/// Sum of integrals over consecutive breakpoints; each panel gets an equal
/// share of the absolute budget.
template <class F>
double integrate_panels(F&& f, std::span<const double> breaks, double abs_tol = 1e-12)
{
    double total = 0.0;
    if (breaks.size() < 2) {
        return total;
    }
    double const per_panel = abs_tol / static_cast<double>(breaks.size() - 1);
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        total += integrate(f, breaks[i], breaks[i + 1], per_panel);
    }
    return total;
}

}  // namespace hpl::quad
