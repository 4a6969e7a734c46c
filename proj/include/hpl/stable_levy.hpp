#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hpl/rng.hpp"

namespace hpl {

/// Stability index of a symmetric alpha-stable law with characteristic
/// function exp(-t |theta|^alpha). Accepts (0, 2]; the particle system
/// further restricts to (0, 1).
struct StableParams
{
    double alpha;

    explicit StableParams(double alpha_);
};

/// Uniform time grid 0, step, 2 step, ..., n_steps * step = t_max.
struct TimeGrid
{
    double t_max = 0.0;
    double step = 1.0;
    std::size_t n_steps = 0;

    /// Grid with the given step; t_max must be (within rounding) a multiple.
    static TimeGrid with_step(double t_max, double step);
    static TimeGrid with_steps(double t_max, std::size_t n_steps);

    double time(std::size_t i) const { return static_cast<double>(i) * step; }
    /// Number of left-endpoint Riemann nodes covering [0, T).
    std::size_t nodes_for(double T) const;
};

/// One trajectory started at 0: values[i] is the position at grid.time(i).
struct StablePath
{
    StableParams params;
    TimeGrid grid;
    std::vector<double> values;
};

/// Increment of a symmetric alpha-stable Levy process over time dt.
///
/// Chambers-Mallows-Stuck with V ~ U(-pi/2, pi/2) and W ~ Exp(1), drawn in
/// that order from `rng` (one uniform each):
///
///   X = sin(alpha V) / cos(V)^(1/alpha) * (cos((1 - alpha) V) / W)^((1 - alpha)/alpha)
///
/// and the increment is dt^(1/alpha) X. dt == 0 returns 0 without consuming
/// randomness. alpha == 1 is rejected.
double sample_increment(StableParams const& params, double dt, RandomStream& rng);

/// Cumulative sum of n_steps independent increments of size grid.step.
StablePath sample_path(StableParams const& params, TimeGrid const& grid, RandomStream& rng);

/// In-place variant used by the particle samplers: fills out[0..n] with a
/// path that starts at `start`.
void fill_path(StableParams const& params, double step, double start, std::span<double> out,
               RandomStream& rng);

/// Transition density p_s(x) = (1/pi) int_0^inf cos(x theta) exp(-s theta^alpha) d theta.
///
/// Evaluated as s^(-1/alpha) p_1(s^(-1/alpha) x). For p_1: closed forms at
/// alpha = 1 (Cauchy) and alpha = 2 (Gaussian); for alpha < 1 and
/// |x| >= 6 the convergent series
///   p_1(x) = (1/pi) sum_{n>=1} (-1)^(n+1) Gamma(n alpha + 1)/n! sin(n pi alpha/2) |x|^(-n alpha - 1);
/// otherwise Gauss-Kronrod over half-period panels of the cosine up to the
/// point where exp(-theta^alpha) < 1e-18. Absolute error <= 1e-8.
double transition_density(StableParams const& params, double s, double x);

/// The Fourier-inversion branch of p_1 only, exposed for cross-checks.
double density_fourier(double alpha, double x);
/// The large-|x| series branch of p_1 only (alpha < 1).
double density_series(double alpha, double x);

/// C(alpha) in int_0^inf p_s(x) ds = C(alpha) |x|^(alpha - 1), computed once
/// per alpha as alpha * int_0^inf u^(-alpha) p_1(u) du and cached.
double potential_constant(double alpha);

/// Green kernel int_0^inf p_s(x) ds for the transient regime alpha in (0,1).
double potential_kernel(StableParams const& params, double x);

}  // namespace hpl
