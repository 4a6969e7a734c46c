#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace hpl {

struct Interval
{
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

enum class MollifierProfile
{
    bump,    // exp(-1/(1 - x^2)) on (-1, 1)
    cosine,  // (1 + cos(pi x)) / 2 on [-1, 1]
};

/// Normalized symmetric probability density supported in [-1, 1].
///
/// The bump profile is the canonical smooth mollifier. Its CDF is tabulated
/// once on 4096 cells and interpolated with cubic Hermite segments whose
/// slopes are the density itself.
class Mollifier
{
  public:
    explicit Mollifier(MollifierProfile profile = MollifierProfile::bump);

    MollifierProfile profile() const { return profile_; }
    double norm_const() const { return norm_const_; }
    double sup_norm() const { return sup_norm_; }
    /// int x^2 f(x) dx
    double second_moment() const { return second_moment_; }

    double operator()(double x) const;
    /// int_{-1}^{x} f
    double cdf(double x) const;
    /// int f(x) e^{izx} dx (real since f is even).
    double fourier(double z) const;

  private:
    double raw(double x) const;

    MollifierProfile profile_;
    double norm_const_ = 1.0;
    double sup_norm_ = 1.0;
    double second_moment_ = 0.0;
    std::vector<double> cdf_table_;
};

/// f_eps(x) = f(x / eps) / eps.
double mollifier_eval(Mollifier const& m, double eps, double x);

/// sum_j a_j 1_{I_j}
struct StepFunction
{
    std::vector<double> coefficients;
    std::vector<Interval> intervals;

    static StepFunction indicator(double lo, double hi);

    double operator()(double x) const;
    std::complex<double> fourier(double theta) const;
    double integral() const;
    Interval support() const;
};

/// psi * g_kappa, evaluated through the mollifier CDF:
///   psi_kappa(x) = sum_j a_j [G((x - l_j)/kappa) - G((x - r_j)/kappa)].
class SmoothedIndicator
{
  public:
    SmoothedIndicator(StepFunction psi, Mollifier g, double kappa);

    double operator()(double x) const;
    std::complex<double> fourier(double theta) const;
    Interval support() const;
    double kappa() const { return kappa_; }
    StepFunction const& step() const { return psi_; }
    Mollifier const& mollifier() const { return g_; }

  private:
    StepFunction psi_;
    Mollifier g_;
    double kappa_;
};

SmoothedIndicator smoothed_indicator(StepFunction psi, Mollifier g, double kappa);

/// h_delta(x) = |x|^(gamma - 1) on delta < |x| < 1/delta.
///
/// delta = 0 means no truncation; delta >= 1 gives an empty annulus and the
/// zero kernel.
struct RieszKernel
{
    double gamma;
    double delta;

    RieszKernel(double gamma_, double delta_);
    double operator()(double x) const;
};

/// Bounded integrable function with known support, plus interior points
/// where it is not smooth (jumps, kinks, edges of pieces).
struct TestFunction
{
    std::function<double(double)> f;
    Interval support;
    std::vector<double> breaks;

    static TestFunction from(Mollifier const& m, double eps);
    static TestFunction from(SmoothedIndicator const& s);
    static TestFunction from(StepFunction const& s);
};

/// V^delta phi(x) = int h_delta(x - y) phi(y) dy.
///
/// Each side of x is integrated in w = |x - y|^gamma, which turns
/// |x - y|^(gamma-1) dy into dw / gamma and removes the singularity at y = x.
double v_delta(RieszKernel const& kernel, TestFunction const& phi, double x,
               double abs_tol = 1e-8);

/// Convolution kernel K(z) for the pair functional.
///
/// mollified: K = V^delta f_eps, computed on [0, radius] at spacing eps / 64,
/// fitted with a cubic B-spline and resampled at spacing eps / 512 for
/// linear interpolation (relative error about 1e-6 for |z| > 2 eps, absolute error below
/// 1e-5 of the peak value inside); with delta = 0 the table extends to
/// `max_radius` and beyond it the two-term expansion
/// |z|^(gamma-1) (1 + (gamma-1)(gamma-2) eps^2 m2 / (2 z^2)) is used.
///
/// raw: K = |z|^(gamma-1), floored at |z| = `floor` so that coincident
/// positions get the kernel value at the floor.
class PairKernel
{
  public:
    static PairKernel mollified(double gamma, double eps, double delta, Mollifier const& m,
                                double max_radius = 64.0);
    static PairKernel raw(double gamma, double floor);

    /// Copy with K(z) = 0 for |z| > reach.
    PairKernel within(double reach) const;

    double operator()(double z) const;
    /// K(z) = 0 for |z| > radius(); infinity when the kernel has full support.
    double radius() const { return radius_; }
    double gamma() const { return gamma_; }
    bool is_raw() const { return raw_; }

  private:
    PairKernel() = default;

    bool raw_ = true;
    double gamma_ = 0.0;
    double floor_ = 0.0;
    double eps_ = 0.0;
    double m2_ = 0.0;
    double radius_ = std::numeric_limits<double>::infinity();
    double table_end_ = 0.0;
    double step_ = 0.0;
    double inv_step_ = 0.0;
    std::shared_ptr<std::vector<double> const> table_;
};

}  // namespace hpl
