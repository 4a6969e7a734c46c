#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hpl/functionals.hpp"
#include "hpl/kernels.hpp"
#include "hpl/rng.hpp"

namespace hpl {

/// Set of disjoint unordered pairs over the slots {0, ..., k-1}.
struct PairSet
{
    /// Each pair stored as (s, t) with s < t, pairs sorted by s.
    std::vector<std::pair<int, int>> pairs;

    std::size_t size() const { return pairs.size(); }
    /// True when `slot` belongs to some pair.
    bool covers(int slot) const;
};

/// Every set of disjoint pairs over k slots, the empty set first.
/// There are sum_j C(k, 2j) (2j - 1)!! of them.
std::vector<PairSet> enumerate_pair_sets(int k);

/// One-dimensional factor of a tensor test function.
struct TensorFactor
{
    std::function<double(double)> f;
    Interval support;
};

/// Phi = sum over terms of factor[terms[j][0]] (x) ... (x) factor[terms[j][k-1]].
///
/// Factors are stored once and referenced by index, so the covariance table
/// is indexed by factor ids.
struct TensorTestFunction
{
    std::vector<TensorFactor> factors;
    std::vector<std::vector<std::size_t>> terms;

    int order() const;
    void validate() const;
    /// Smallest interval holding every factor's support.
    Interval support_hull() const;
};

/// Symmetric table of E<X_T, phi_a><X_T, phi_b> indexed by factor ids.
class CovarianceTable
{
  public:
    explicit CovarianceTable(std::size_t factors);

    void set(std::size_t a, std::size_t b, double value);
    bool has(std::size_t a, std::size_t b) const;
    /// Throws std::invalid_argument when the entry was never set.
    double at(std::size_t a, std::size_t b) const;
    std::size_t factors() const { return n_; }

  private:
    std::size_t n_;
    std::vector<std::optional<double>> values_;
};

/// <:X_T (x) ... (x) X_T:, Phi> from field evaluations <X_T, phi_f> (one per
/// factor id) and second moments:
///   sum_terms sum_A (-1)^|A| prod_{(s,t) in A} C(f_s, f_t) prod_{n not in A} X(f_n).
double wick_product(std::span<double const> evaluations, CovarianceTable const& covariance,
                    TensorTestFunction const& phi);

/// Signed count of one non-normal pairing across (A, A') with A subset of B,
/// A' subset of B', |B| = |B'| = n: sum of (-1)^(|A| + |A'|) over all
/// explicitly enumerated subset pairs. Zero for every n >= 1.
std::int64_t cancellation_identity(int n);

/// sum over ordered k-tuples of pairwise distinct indices of
/// prod_s values[s][j_s], all rows of equal length.
///
/// Computed by Moebius inversion over set partitions of the slots:
///   sum_pi prod_{B in pi} (-1)^(|B|-1) (|B|-1)! sum_j prod_{s in B} values[s][j].
double distinct_tuple_sum(std::span<std::vector<double> const> values);

struct IdentityReport
{
    double lhs = 0.0;
    double rhs = 0.0;
    double se = 0.0;
    double z = 0.0;
    std::size_t replicas = 0;
    std::uint64_t seed = 0;
    /// Named auxiliary estimates (for example the three second moments).
    std::vector<std::pair<std::string, double>> details;

    bool passes(double z_max) const { return std::abs(z) <= z_max; }
};

/// Mecke-Palm check for a unit-rate Poisson process on `window`:
/// MC mean of sum_{j_1..j_k distinct} F(x^{j_1}, ..., x^{j_k}) against the
/// k-fold adaptive quadrature of F over window^k. Replica r draws from
/// rng.substream(r).
IdentityReport mecke_palm_check(std::function<double(std::span<double const>)> const& F,
                                Interval window, int k, std::size_t replicas,
                                RandomStream const& rng, unsigned threads = 1);

/// Functional of k particle trajectories.
using PathFunctional = std::function<double(std::span<Trajectory const>)>;

struct PermutationCheckConfig
{
    int k = 1;
    double alpha = 0.7;
    /// Particles start uniformly in [-half_width, half_width].
    double half_width = 6.0;
    double T = 1.0;
    double step = 0.1;
};

/// Permutation second-moment check:
///   lhs = E (sum_{distinct} sigma_{j_1}..sigma_{j_k} F(x^{j} + xi^{j}))^2
///   rhs = int_{W^k} E sum_pi F(x + xi) F(x_pi + xi_pi) dx
/// Both sides by MC from independent substreams; the rhs draws the starting
/// points uniformly in W^k and weights by |W|^k.
IdentityReport second_moment_permutation_check(PathFunctional const& F,
                                               PermutationCheckConfig const& config,
                                               std::size_t replicas, RandomStream const& rng,
                                               unsigned threads = 1);

struct WickSystemConfig
{
    double alpha = 0.75;
    double T = 10.0;
    double step = 0.1;
    /// Calibration replicas per evaluation replica.
    std::size_t calibration_factor = 10;
};

/// Per-system field values and the distinct-index functional rho_Phi.
struct WickEvaluation
{
    std::vector<double> fields;
    double rho = 0.0;
    std::size_t particles = 0;
};

/// Samples the particles visiting the support hull of Phi on [0, T) and
/// evaluates <X_T, phi_f> for every factor and
///   rho_Phi = T^(-k/2) sum_terms sum_{distinct} prod_s sigma_{j_s} int phi_s(x^{j_s}).
WickEvaluation evaluate_wick_system(TensorTestFunction const& phi, WickSystemConfig const& config,
                                    RandomStream& rng);

/// E(W - rho)^2 against E W^2 - E rho^2 with W the Wick product built from
/// covariances of a disjoint calibration batch (rng.substream(1)); the
/// evaluation batch uses rng.substream(0). se is the standard error of the
/// per-replica difference of the two sides.
IdentityReport wick_vs_rho_second_moment(TensorTestFunction const& phi,
                                         WickSystemConfig const& config, std::size_t replicas,
                                         RandomStream const& rng, unsigned threads = 1);

/// Second moments E<X_T, phi_a><X_T, phi_b> estimated from `replicas`
/// systems drawn from rng.substream(r).
CovarianceTable calibrate_covariance(TensorTestFunction const& phi, WickSystemConfig const& config,
                                     std::size_t replicas, RandomStream const& rng,
                                     unsigned threads = 1);

}  // namespace hpl
