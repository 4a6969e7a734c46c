#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hpl/rng.hpp"

namespace hpl {

/// R(s, t) = (s^2H + t^2H - |s - t|^2H) / 2.
double target_covariance(double H, double s, double t);

/// Exact fractional Brownian motion on `t_grid` (at most 4096 points,
/// distinct, nonnegative). Points with t = 0 get 0; the Cholesky factor of R
/// on the positive times is cached per (H, grid).
std::vector<double> fbm_sample(double H, std::span<double const> t_grid, RandomStream& rng);

/// Probabilists' Hermite polynomial He_j by He_{j+1} = x He_j - j He_{j-1}.
double hermite_polynomial(int j, double x);

/// Unit-variance stationary Gaussian sequence with correlation
/// r(n) = (1 + n)^((2H - 2)/k), a convex decreasing (hence positive
/// definite) sequence with r(n) ~ n^((2H - 2)/k).
class LrdSampler
{
  public:
    enum class Method
    {
        cholesky,
        circulant,
    };

    /// Cholesky for n <= 4096 (with a nearest-PD projection if the plain
    /// factorization fails, allowed only below a 1e-8 Frobenius
    /// perturbation), circulant embedding above.
    LrdSampler(double H, int k, std::size_t n);

    std::vector<double> sample(RandomStream& rng) const;

    Method method() const { return method_; }
    /// Frobenius norm of the nearest-PD correction (0 when none was needed).
    double perturbation() const { return perturbation_; }
    std::size_t size() const { return n_; }

  private:
    double H_;
    int k_;
    std::size_t n_;
    Method method_;
    double perturbation_ = 0.0;
    std::vector<double> factor_;       // row-major lower triangle (Cholesky)
    std::vector<double> eigen_sqrt_;   // sqrt(lambda / M) (circulant)
};

/// Correlation r(lag) = (1 + lag)^((2H - 2)/k) of the sequence above.
double lrd_correlation(double H, int k, std::size_t lag);

/// Cached LrdSampler per (H, k, n).
std::vector<double> lrd_gaussian_sequence(double H, int k, std::size_t n, RandomStream& rng);

struct OracleConfig
{
    int k = 2;
    double H = 0.75;
    /// Partial-sum length per unit time.
    std::size_t n = 4096;
    std::vector<double> t_grid{0.25, 0.5, 1.0, 2.0};

    double d() const { return (H - 1.0) / k + 0.5; }
    void validate() const;
    std::string digest() const;
};

/// Z(t) = n^(-H) sum_{l=1}^{floor(n t)} He_k(xi_l) on the grid, with xi the
/// long-range dependent sequence of length floor(n t_max).
std::vector<double> hermite_partial_sum(OracleConfig const& config, RandomStream& rng);

/// Symmetric frequency lattice: bins [b dw, (b+1) dw] and their mirrors for
/// b = 0..bins-1, dw = omega / bins. Bin centers u_b = (b + 1/2) dw are
/// never 0.
struct SpectralGrid
{
    double omega = 100.0;
    std::size_t bins = 2000;
    /// For k = 2, add the independent Brownian term that carries the
    /// covariance of the cut-off anti-diagonal |u_1|, |u_2| > omega.
    bool compensate_tail = true;

    enum class Diagonal
    {
        /// Wick-ordered sum over all bin tuples (pairings of mirrored bins
        /// subtracted at their expectation); midpoint-consistent on the
        /// diagonal bins.
        wick,
        /// Drop every tuple in which two slots share |u|.
        exclude,
    };
    Diagonal diagonal = Diagonal::wick;

    double dw() const { return omega / static_cast<double>(bins); }
    double center(std::size_t b) const { return (static_cast<double>(b) + 0.5) * dw(); }
    void validate() const;
};

struct SpectralSample
{
    std::vector<double> values;
    /// Imaginary parts of the same sums (zero up to rounding).
    std::vector<double> imaginary;
};

/// Discretized multiple Wiener-Ito integral
///   sum'' K_t(u_1 + ... + u_k) prod_i Z_i(u_i),  K_t(s) = (e^{ist} - 1)/(is),
/// with one complex Gaussian weight Z(b) with E|Z|^2 = dw per positive bin,
/// conjugated on the mirror, and Z_i(u) = sqrt(M_i(b) / dw) Z(u) with M_i(b)
/// the exact mass of |u|^(-a_i) over the bin. Diagonal::exclude keeps the
/// tuples with pairwise distinct |u| (inclusion-exclusion over which slots
/// share |u|); Diagonal::wick Wick-orders the full sum. Every piece is a
/// lattice convolution. k <= 3.
///
/// Exponents must satisfy 1 - k/2 + sum(a_i)/2 in (1/2, 1) (the Hurst index).
/// Exponents: symmetric order-k Hermite process a_i = 2d = 2(H - 1)/k + 1;
/// the non-symmetric Rosenblatt process uses (alpha, beta).
SpectralSample spectral_hermite_sample(std::span<double const> exponents,
                                       std::span<double const> t_grid, SpectralGrid const& grid,
                                       RandomStream& rng);

/// Spectral exponents of the symmetric order-k Hermite process with Hurst H.
std::vector<double> symmetric_exponents(int k, double H);

}  // namespace hpl
