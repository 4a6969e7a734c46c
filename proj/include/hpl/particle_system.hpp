#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hpl/kernels.hpp"
#include "hpl/rng.hpp"
#include "hpl/stable_levy.hpp"

namespace hpl {

struct Window
{
    double half_width;

    explicit Window(double L);
    double size() const { return 2.0 * half_width; }
};

/// Charged Poisson particles with one stable path each.
///
/// position(j, i) = points[j] + paths[j].values[i] is particle j at grid
/// time i. Systems built by sample_visiting_system hold exactly the
/// particles that sit in `region` at some grid time i < nodes_for(T).
struct ParticleSystem
{
    StableParams params{0.5};
    TimeGrid grid;
    double T = 0.0;
    Window window{1.0};
    std::optional<Interval> region;
    std::vector<double> points;
    std::vector<int> charges;
    std::vector<StablePath> paths;

    std::size_t size() const { return points.size(); }
    double position(std::size_t j, std::size_t i) const { return points[j] + paths[j].values[i]; }
    /// Number of left Riemann nodes up to the horizon.
    std::size_t nodes() const { return grid.nodes_for(T); }
};

/// Poisson(2L) particles uniform on [-L, L], fair charges, independent paths
/// on `grid` (horizon T = grid.t_max). Draw order: count, then for each
/// particle its position, charge and increments.
ParticleSystem sample_system(double alpha, Window const& window, TimeGrid const& grid,
                             RandomStream& rng);

/// Exact sample of the particles of the full (untruncated) system that visit
/// `region` at a grid time i in [0, m), m = nodes_for(T).
///
/// At every grid time the particle positions form a unit-rate Poisson
/// process (Lebesgue measure is invariant for the motion), and a path seen
/// backwards from a fixed time is again a symmetric stable walk. So for each
/// i we draw Poisson(|region|) candidates uniform in the region, walk each
/// backwards i steps and keep it only if it never was in the region before
/// (otherwise it is counted at its first visit); kept particles are then
/// walked forward to m.
ParticleSystem sample_visiting_system(double alpha, Interval region, TimeGrid const& grid, double T,
                                      RandomStream& rng);

/// q-quantile of |X| for X standard symmetric alpha-stable, estimated from
/// 10^6 draws of a dedicated stream and cached per (alpha, q).
double stable_abs_quantile(double alpha, double q);

struct WindowChoice
{
    Window window;
    double q;
    double c_q;
};

/// L = t_max + c_q T^(1/alpha).
WindowChoice window_for(double t_max, double T, double alpha, double q);

/// <X_T, phi> = T^(-1/2) sum_j sigma_j sum_{i<m} phi(position(j, i)) step.
double occupation_field(ParticleSystem const& system, std::function<double(double)> const& phi,
                        double T);

/// Several test functions at once; one value per function.
std::vector<double> occupation_field(ParticleSystem const& system,
                                     std::span<std::function<double(double)> const> phis, double T);

/// Exact Cov(<X_T, 1_[0,s]>, <X_T, 1_[0,t]>) of the Riemann-sum field with
/// left nodes spaced `step`:
///   (step^2 / T) sum_{i,l<m} (1/2pi) int phihat conj(psihat) q^|i-l| d theta,
/// q = exp(-step |theta|^alpha). The i = l part is m step^2 / T min(s, t)
/// by Parseval; the rest is integrated over half-period panels.
double indicator_occupation_covariance(double alpha, double step, double T, double s, double t);

/// The T -> infinity limit (1/pi) int phihat conj(psihat) |theta|^(-alpha) d theta,
/// proportional to the fBm covariance with H = (1 + alpha) / 2.
double indicator_occupation_covariance_limit(double alpha, double s, double t);

}  // namespace hpl
