#include "hpl/particle_system.hpp"

#include "hpl/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace hpl {

namespace {

void check_particle_alpha(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("particle system needs alpha in (0, 1)");
    }
}

/// Re[(e^{i theta s} - 1)(e^{-i theta t} - 1)] / theta^2
double indicator_product(double theta, double s, double t)
{
    if (theta * std::max(s, t) < 1e-2) {
        double const d = s - t;
        return s * t + theta * theta * (d * d * d * d - s * s * s * s - t * t * t * t) / 24.0;
    }
    return (1.0 + std::cos(theta * (s - t)) - std::cos(theta * s) - std::cos(theta * t))
           / (theta * theta);
}

void check_indicator_times(double alpha, double s, double t)
{
    check_particle_alpha(alpha);
    if (!(s > 0.0 && t > 0.0)) {
        throw std::invalid_argument("indicator covariance needs s, t > 0");
    }
}

constexpr std::uint64_t kQuantileSeed = 0x5eed0f5ab1eull;
constexpr std::size_t kQuantileDraws = 1000000;

}  // namespace

Window::Window(double L) : half_width(L)
{
    if (!(L > 0.0) || !std::isfinite(L)) {
        throw std::invalid_argument("window half-width must be positive");
    }
}

ParticleSystem sample_system(double alpha, Window const& window, TimeGrid const& grid,
                             RandomStream& rng)
{
    check_particle_alpha(alpha);
    ParticleSystem sys;
    sys.params = StableParams(alpha);
    sys.grid = grid;
    sys.T = grid.t_max;
    sys.window = window;
    auto const n = static_cast<std::size_t>(rng.poisson(window.size()));
    sys.points.reserve(n);
    sys.charges.reserve(n);
    sys.paths.reserve(n);
    double const L = window.half_width;
    for (std::size_t j = 0; j < n; ++j) {
        sys.points.push_back(rng.uniform(-L, L));
        sys.charges.push_back(rng.sign());
        sys.paths.push_back(sample_path(sys.params, grid, rng));
    }
    return sys;
}

ParticleSystem sample_visiting_system(double alpha, Interval region, TimeGrid const& grid, double T,
                                      RandomStream& rng)
{
    check_particle_alpha(alpha);
    if (!(region.hi > region.lo)) {
        throw std::invalid_argument("visiting region must have positive length");
    }
    ParticleSystem sys;
    sys.params = StableParams(alpha);
    sys.T = T;
    std::size_t const m = grid.nodes_for(T);
    sys.grid = TimeGrid{static_cast<double>(m) * grid.step, grid.step, m};
    sys.window = Window(std::max(std::abs(region.lo), std::abs(region.hi)));
    sys.region = region;

    std::vector<double> pos(m + 1);
    for (std::size_t i = 0; i < m; ++i) {
        auto const candidates = rng.poisson(region.length());
        for (std::uint64_t c = 0; c < candidates; ++c) {
            pos[i] = rng.uniform(region.lo, region.hi);
            bool earlier_visit = false;
            for (std::size_t b = i; b > 0; --b) {
                pos[b - 1] = pos[b] + sample_increment(sys.params, grid.step, rng);
                if (region.contains(pos[b - 1])) {
                    earlier_visit = true;
                    break;
                }
            }
            if (earlier_visit) {
                continue;
            }
            int const charge = rng.sign();
            for (std::size_t f = i + 1; f <= m; ++f) {
                pos[f] = pos[f - 1] + sample_increment(sys.params, grid.step, rng);
            }
            double const x0 = pos[0];
            StablePath path{sys.params, sys.grid, std::vector<double>(m + 1)};
            for (std::size_t k = 0; k <= m; ++k) {
                path.values[k] = pos[k] - x0;
            }
            path.values[0] = 0.0;
            sys.points.push_back(x0);
            sys.charges.push_back(charge);
            sys.paths.push_back(std::move(path));
        }
    }
    return sys;
}

double stable_abs_quantile(double alpha, double q)
{
    check_particle_alpha(alpha);
    if (!(q > 0.0 && q < 1.0)) {
        throw std::invalid_argument("quantile level must lie in (0, 1)");
    }
    static std::mutex mutex;
    static std::map<std::pair<double, double>, double> cache;
    std::lock_guard lock(mutex);
    auto const key = std::make_pair(alpha, q);
    if (auto it = cache.find(key); it != cache.end()) {
        return it->second;
    }
    StableParams const params(alpha);
    RandomStream rng(kQuantileSeed, 0);
    std::vector<double> draws(kQuantileDraws);
    for (double& d : draws) {
        d = std::abs(sample_increment(params, 1.0, rng));
    }
    auto const k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(kQuantileDraws))) - 1;
    std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(k), draws.end());
    double const value = draws[k];
    cache.emplace(key, value);
    return value;
}

WindowChoice window_for(double t_max, double T, double alpha, double q)
{
    if (!(t_max > 0.0) || !(T >= 0.0)) {
        throw std::invalid_argument("window_for needs t_max > 0 and T >= 0");
    }
    double const c_q = stable_abs_quantile(alpha, q);
    double const L = t_max + c_q * std::pow(T, 1.0 / alpha);
    return WindowChoice{Window(L), q, c_q};
}

std::vector<double> occupation_field(ParticleSystem const& system,
                                     std::span<std::function<double(double)> const> phis, double T)
{
    if (!(T > 0.0)) {
        throw std::invalid_argument("occupation field needs T > 0");
    }
    if (T > system.T * (1.0 + 1e-12)) {
        throw std::invalid_argument("T exceeds the simulated horizon");
    }
    std::size_t const m = system.grid.nodes_for(T);
    std::vector<double> out(phis.size(), 0.0);
    std::vector<double> particle(phis.size());
    for (std::size_t j = 0; j < system.size(); ++j) {
        std::fill(particle.begin(), particle.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double const x = system.position(j, i);
            for (std::size_t f = 0; f < phis.size(); ++f) {
                particle[f] += phis[f](x);
            }
        }
        for (std::size_t f = 0; f < phis.size(); ++f) {
            out[f] += system.charges[j] * particle[f];
        }
    }
    double const scale = system.grid.step / std::sqrt(T);
    for (double& v : out) {
        v *= scale;
    }
    return out;
}

double occupation_field(ParticleSystem const& system, std::function<double(double)> const& phi,
                        double T)
{
    return occupation_field(system, std::span<std::function<double(double)> const>(&phi, 1), T)[0];
}

double indicator_occupation_covariance(double alpha, double step, double T, double s, double t)
{
    check_indicator_times(alpha, s, t);
    if (!(step > 0.0) || !(T > 0.0)) {
        throw std::invalid_argument("indicator covariance needs step, T > 0");
    }
    auto const m = static_cast<double>(TimeGrid::with_step(T, step).nodes_for(T));
    // sum_{i != l < m} q^|i - l| = 2 q (m x - (1 - q^m)) / x^2 with x = 1 - q
    auto off_diagonal = [&](double theta) {
        double const e = step * std::pow(theta, alpha);
        double const x = -std::expm1(-e);
        double const q = 1.0 - x;
        double const tail = -std::expm1(-m * e);
        return 2.0 * q * (m * x - tail) / (x * x);
    };
    auto integrand = [&](double theta) {
        return indicator_product(theta, s, t) * off_diagonal(theta);
    };
    double const theta_end = std::pow(40.0 / step, 1.0 / alpha);
    double const panel = 3.141592653589793 / std::max(s, t);
    std::vector<double> breaks{0.0};
    while (breaks.back() < theta_end) {
        breaks.push_back(breaks.back() + panel);
    }
    double const off = quad::integrate_panels(integrand, breaks, 1e-9 * m * m) / 3.141592653589793;
    return step * step / T * (m * std::min(s, t) + off);
}

double indicator_occupation_covariance_limit(double alpha, double s, double t)
{
    check_indicator_times(alpha, s, t);
    double const pi = 3.141592653589793;
    double const panel = pi / std::max(s, t);
    // theta = v^(1/(1-alpha)) on the first panel removes theta^(-alpha)
    double const p = 1.0 / (1.0 - alpha);
    double const head = quad::integrate(
        [&](double v) { return p * indicator_product(std::pow(v, p), s, t); }, 0.0,
        std::pow(panel, 1.0 - alpha), 1e-12);
    double const theta_end = 4000.0 * panel;
    std::vector<double> breaks;
    for (double b = panel; b <= theta_end + 0.5 * panel; b += panel) {
        breaks.push_back(b);
    }
    double const body = quad::integrate_panels(
        [&](double theta) { return std::pow(theta, -alpha) * indicator_product(theta, s, t); },
        breaks, 1e-11);
    // beyond the last panel only the non-oscillating 1/theta^2 part matters
    double const tail = std::pow(breaks.back(), -1.0 - alpha) / (1.0 + alpha);
    return 2.0 / pi * (head + body + tail);
}

}  // namespace hpl
