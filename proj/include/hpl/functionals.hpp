#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hpl/kernels.hpp"
#include "hpl/particle_system.hpp"
#include "hpl/rng.hpp"

namespace hpl {

/// Configuration of the asymmetric pair functional eta^T.
///
/// eps = 0 drops the mollifier and delta = 0 drops the truncation; with
/// eps = 0 the raw kernel |z|^(gamma-1) is used, capped at |z| = delta (or
/// at 1e-9 when delta = 0). kappa = 0 uses the raw indicators 1_[0,t].
struct EtaConfig
{
    double alpha = 0.6;
    double beta = 0.7;
    double T = 10.0;
    std::vector<double> t_grid{0.5, 1.0, 2.0};
    double eps = 0.05;
    double delta = 0.05;
    /// Far cutoff: with reach > 0 the kernel is set to zero beyond |z| = reach.
    /// Only meaningful for delta = 0, where h_delta has no far truncation of its own.
    double reach = 0.0;
    double kappa = 0.01;
    double step = 0.1;
    /// Window quantile for kernels with unbounded support.
    double window_q = 0.999;
    MollifierProfile profile = MollifierProfile::bump;

    double gamma() const { return 0.5 * (beta - alpha); }
    double hurst() const { return 0.5 * (alpha + beta); }
    void validate() const;
    std::string digest() const;
};

/// Configuration of the k-Hermite functional rho^T.
struct RhoConfig
{
    int k = 2;
    double alpha = 0.75;
    double eps = 0.05;
    double T = 10.0;
    std::vector<double> t_grid{0.5, 1.0};
    double kappa = 0.01;
    double step = 0.1;
    MollifierProfile profile = MollifierProfile::bump;

    double hurst() const { return 1.0 - (1.0 - alpha) * k / 2.0; }
    void validate() const;
    std::string digest() const;
};

struct FunctionalSample
{
    std::vector<double> t;
    std::vector<double> values;
    std::uint64_t replica_id = 0;
    std::string config_digest;
    /// Set when the system had fewer particles than the functional's order.
    bool too_few_particles = false;
    std::size_t particles = 0;
};

/// Left-Riemann positions of one particle: x(s_i) for i < m, spaced `step`.
struct Trajectory
{
    std::span<double const> positions;
    double step;
};

/// <Delta(path_i, path_j; T), phi> as the double Riemann sum
///   sum_{r,s < m} phi(x_i(r)) K(x_j(s) - x_i(r)) step^2,  m = round(T / step).
/// Asymmetric in (i, j).
double delta_pair(Trajectory path_i, Trajectory path_j, std::function<double(double)> const& phi,
                  PairKernel const& kernel, double T);

/// Convenience overload building the kernel from (gamma, eps, delta).
double delta_pair(Trajectory path_i, Trajectory path_j, std::function<double(double)> const& phi,
                  double gamma, double T, double eps, double delta);

/// The kernel used by eta^T for a configuration.
PairKernel eta_kernel(EtaConfig const& config);

/// Test functions 1_[0,t] or their smoothings, one per t.
std::vector<std::function<double(double)>> indicator_family(std::span<double const> t_grid,
                                                            double kappa, MollifierProfile profile);

/// eta^T_t for all t on a given system:
///   (1/T) sum_{j != k} sigma_j sigma_k delta_pair(j, k, phi_t).
/// Every particle-time point within the kernel radius of a query point is
/// visited once; the j = k contribution is removed exactly.
std::vector<double> eta_on_system(EtaConfig const& config, ParticleSystem const& system,
                                  PairKernel const& kernel);

/// Samples one system (exact visiting sampler when the kernel has bounded
/// support, otherwise a window from window_for) and evaluates eta^T.
FunctionalSample eta_T(EtaConfig const& config, PairKernel const& kernel, RandomStream& rng);
FunctionalSample eta_T(EtaConfig const& config, RandomStream& rng);

/// Approximate k-intersection local time
///   sum_{s_1} phi(x_1(s_1)) prod_{i>=2} (sum_{s_i} f_eps(x_i(s_i) - x_1(s_1)) step) step,
/// evaluated in the factorized form (O(k n^2)).
double approx_k_ilt(std::span<Trajectory const> paths, std::function<double(double)> const& phi,
                    Mollifier const& f, double eps, double T, double alpha);

/// rho^T_t for all t on a given system:
///   T^(-k/2) sum over ordered distinct (j_1..j_k) of sigma products times
///   approx_k_ilt. For each query point (j_1, s_1) the sums over the other
///   particles' neighbour points give values v_j = sigma_j O_j; the sum over
///   ordered distinct tuples avoiding j_1 is (k-1)! e_{k-1}(v), with e the
///   elementary symmetric polynomial (exact for every k).
std::vector<double> rho_on_system(RhoConfig const& config, ParticleSystem const& system,
                                  Mollifier const& f);

FunctionalSample rho_T(RhoConfig const& config, RandomStream& rng);

/// Charge-occupation field <X_T, 1_[0,t]> (kappa = 0) or <X_T, psi_kappa>.
struct FieldConfig
{
    double alpha = 0.7;
    double T = 25.0;
    std::vector<double> t_grid{0.25, 0.5, 1.0, 2.0};
    double kappa = 0.0;
    double step = 0.1;
    MollifierProfile profile = MollifierProfile::bump;
    double hurst() const { return 0.5 * (1.0 + alpha); }
    void validate() const;
    std::string digest() const;
};

/// Exact visiting-particle sample of the field on the grid.
FunctionalSample indicator_field(FieldConfig const& config, RandomStream& rng);

}  // namespace hpl
