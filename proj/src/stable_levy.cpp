#include "hpl/stable_levy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "hpl/quadrature.hpp"

namespace hpl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSeriesThreshold = 6.0;
// exp(-theta^alpha) below this is dropped from the Fourier integral.
constexpr double kCutoffExponent = 41.5;  // exp(-41.5) ~ 1e-18

void check_alpha(double alpha)
{
    if (!(alpha > 0.0 && alpha <= 2.0)) {
        throw std::invalid_argument("stable index alpha must lie in (0, 2]");
    }
}

}  // namespace

StableParams::StableParams(double alpha_) : alpha(alpha_)
{
    check_alpha(alpha);
}

TimeGrid TimeGrid::with_step(double t_max, double step)
{
    if (!(step > 0.0) || !std::isfinite(step) || !(t_max >= 0.0) || !std::isfinite(t_max)) {
        throw std::invalid_argument("time grid needs step > 0 and t_max >= 0");
    }
    double const ratio = t_max / step;
    double const n = std::round(ratio);
    if (std::abs(ratio - n) > 1e-9 * std::max(1.0, n)) {
        throw std::invalid_argument("t_max is not a multiple of the grid step");
    }
    return TimeGrid{t_max, step, static_cast<std::size_t>(n)};
}

TimeGrid TimeGrid::with_steps(double t_max, std::size_t n_steps)
{
    if (n_steps == 0) {
        if (t_max != 0.0) {
            throw std::invalid_argument("zero-step grid must have t_max = 0");
        }
        return TimeGrid{0.0, 1.0, 0};
    }
    if (!(t_max > 0.0) || !std::isfinite(t_max)) {
        throw std::invalid_argument("t_max must be positive");
    }
    return TimeGrid{t_max, t_max / static_cast<double>(n_steps), n_steps};
}

std::size_t TimeGrid::nodes_for(double T) const
{
    if (!(T >= 0.0) || T > t_max * (1.0 + 1e-12) + 1e-12) {
        throw std::invalid_argument("horizon exceeds the simulated time grid");
    }
    return static_cast<std::size_t>(std::llround(T / step));
}

double sample_increment(StableParams const& params, double dt, RandomStream& rng)
{
    if (!std::isfinite(dt) || dt < 0.0) {
        throw std::invalid_argument("increment length must be finite and non-negative");
    }
    if (dt == 0.0) {
        return 0.0;
    }
    double const a = params.alpha;
    if (a == 1.0) {
        throw std::invalid_argument("alpha = 1 is not supported by the sampler");
    }
    double const v = kPi * (rng.uniform() - 0.5);
    double const w = rng.exponential();
    double const x = std::sin(a * v) / std::pow(std::cos(v), 1.0 / a)
                     * std::pow(std::cos((1.0 - a) * v) / w, (1.0 - a) / a);
    return std::pow(dt, 1.0 / a) * x;
}

void fill_path(StableParams const& params, double step, double start, std::span<double> out,
               RandomStream& rng)
{
    if (out.empty()) {
        return;
    }
    if (params.alpha == 1.0) {
        throw std::invalid_argument("alpha = 1 is not supported by the sampler");
    }
    out[0] = start;
    for (std::size_t i = 1; i < out.size(); ++i) {
        out[i] = out[i - 1] + sample_increment(params, step, rng);
    }
}

StablePath sample_path(StableParams const& params, TimeGrid const& grid, RandomStream& rng)
{
    StablePath path{params, grid, std::vector<double>(grid.n_steps + 1, 0.0)};
    fill_path(params, grid.step, 0.0, path.values, rng);
    return path;
}

double density_series(double alpha, double x)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("series branch needs alpha in (0, 1)");
    }
    x = std::abs(x);
    if (x == 0.0) {
        throw std::domain_error("series branch diverges at x = 0");
    }
    double const log_x = std::log(x);
    double sum = 0.0;
    for (int n = 1; n < 4000; ++n) {
        double const mag = std::exp(std::lgamma(n * alpha + 1.0) - std::lgamma(n + 1.0)
                                    - (n * alpha + 1.0) * log_x);
        double const term = ((n % 2 == 1) ? 1.0 : -1.0) * mag * std::sin(n * kPi * alpha / 2.0);
        sum += term;
        if (mag < 1e-18 * std::abs(sum) && n > 4) {
            break;
        }
    }
    return sum / kPi;
}

double density_fourier(double alpha, double x)
{
    check_alpha(alpha);
    x = std::abs(x);
    double const theta_max = std::pow(kCutoffExponent, 1.0 / alpha);
    auto integrand = [&](double th) { return std::cos(x * th) * std::exp(-std::pow(th, alpha)); };
    // Panels: geometric near 0 to absorb the theta^alpha cusp, growing by
    // half their start point, but never wider than a half-period of the cosine.
    std::vector<double> breaks{0.0, 1e-6, 1e-4, 1e-2, 0.1, 0.5};
    double const half_period = (x > 0.0) ? kPi / x : theta_max;
    double b = 1.0;
    while (b < theta_max) {
        breaks.push_back(b);
        b += std::min(half_period, 0.5 * b);
    }
    breaks.push_back(theta_max);
    return quad::integrate_panels(integrand, breaks, 1e-11) / kPi;
}

double transition_density(StableParams const& params, double s, double x)
{
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw std::invalid_argument("transition density needs s > 0");
    }
    double const a = params.alpha;
    double const scale = std::pow(s, -1.0 / a);
    double const y = std::abs(scale * x);
    double p1 = 0.0;
    if (a == 1.0) {
        p1 = 1.0 / (kPi * (1.0 + y * y));
    } else if (a == 2.0) {
        p1 = std::exp(-y * y / 4.0) / std::sqrt(4.0 * kPi);
    } else if (a < 1.0 && y >= kSeriesThreshold) {
        p1 = density_series(a, y);
    } else {
        p1 = density_fourier(a, y);
    }
    return scale * p1;
}

double potential_constant(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("potential kernel needs alpha in (0, 1)");
    }
    static std::mutex mutex;
    static std::map<double, double> cache;
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(alpha); it != cache.end()) {
            return it->second;
        }
    }
    // alpha * int_0^inf u^-alpha p_1(u) du, split at 1 and at the series threshold.
    // On [0,1] substitute u = v^m with m = 1/(1-alpha), which removes the
    // u^-alpha singularity: u^-alpha du = m dv.
    double const m = 1.0 / (1.0 - alpha);
    double const head = m * quad::integrate([&](double v) { return density_fourier(alpha, std::pow(v, m)); },
                                            0.0, 1.0, 1e-10);
    double const middle = quad::integrate(
        [&](double u) { return std::pow(u, -alpha) * density_fourier(alpha, u); }, 1.0,
        kSeriesThreshold, 1e-10);
    // Term-by-term integration of the series beyond the threshold.
    double tail = 0.0;
    double const log_c = std::log(kSeriesThreshold);
    for (int n = 1; n < 4000; ++n) {
        double const p = (n + 1) * alpha;
        double const mag = std::exp(std::lgamma(n * alpha + 1.0) - std::lgamma(n + 1.0) - p * log_c) / p;
        tail += ((n % 2 == 1) ? 1.0 : -1.0) * mag * std::sin(n * kPi * alpha / 2.0);
        if (mag < 1e-18 && n > 4) {
            break;
        }
    }
    tail /= kPi;
    double const value = alpha * (head + middle + tail);
    std::lock_guard lock(mutex);
    cache.emplace(alpha, value);
    return value;
}

double potential_kernel(StableParams const& params, double x)
{
    if (!(params.alpha > 0.0 && params.alpha < 1.0)) {
        throw std::invalid_argument("potential kernel is finite only for alpha in (0, 1)");
    }
    if (x == 0.0) {
        throw std::domain_error("potential kernel is singular at x = 0");
    }
    return potential_constant(params.alpha) * std::pow(std::abs(x), params.alpha - 1.0);
}

}  // namespace hpl
