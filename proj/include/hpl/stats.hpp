#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hpl/rng.hpp"

namespace hpl {

/// Replicas of a process observed on a common time grid: rows[r][i] is
/// replica r at time t[i].
struct Ensemble
{
    std::vector<double> t;
    std::vector<std::vector<double>> rows;

    std::size_t replicas() const { return rows.size(); }
    std::size_t times() const { return t.size(); }
    std::vector<double> column(std::size_t i) const;
    /// Index of the grid time equal to `time` (within 1e-12); throws if absent.
    std::size_t index_of(double time) const;
    /// Throws std::invalid_argument on empty grids, ragged rows or non-finite values.
    void validate() const;
};

struct Estimate
{
    double value = 0.0;
    double se = 0.0;
};

struct CovEstimate
{
    std::vector<double> t;
    /// estimate[i][j] and se[i][j] for times t[i], t[j].
    std::vector<std::vector<double>> estimate;
    std::vector<std::vector<double>> se;
    std::size_t replicas = 0;

    double at(std::size_t i, std::size_t j) const { return estimate[i][j]; }
};

struct TestReport
{
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t replicas = 0;
    std::size_t permutations = 0;
    std::uint64_t seed = 0;
};

/// Unbiased sample covariance with jackknife standard errors (leave-one-out
/// covariances in closed form). Needs at least 2 replicas; with exactly 2
/// the jackknife is undefined and every SE is +infinity.
CovEstimate estimate_covariance(Ensemble const& ensemble);

/// Sample standard deviation (n - 1 denominator) at grid time `time`.
double standard_deviation_at(Ensemble const& ensemble, double time);

/// Every value divided by the sample standard deviation at t = 1.
Ensemble normalize(Ensemble const& ensemble);

/// Cov(Z(s), Z(t)) / Var(Z(t_ref)) with a jackknife SE that accounts for the
/// random normalizer.
Estimate normalized_covariance(Ensemble const& ensemble, double s, double t, double t_ref = 1.0);

/// Half the least-squares slope of log Var Z(t) against log t over
/// `t_subset` (at least 3 distinct positive grid times). The SE is the delta
/// method with the joint covariance of the variance estimates.
Estimate hurst_from_variance(Ensemble const& ensemble, std::span<double const> t_subset);

/// Two-sample energy test on the rows (Euclidean distance over the grid):
/// statistic (n m / (n + m)) (2 E|X - Y| - E|X - X'| - E|Y - Y'|) with
/// V-statistic means, exactly 0 for identical multisets. The p-value is
/// (1 + #{permuted >= observed}) / (1 + permutations); permutation p uses
/// rng.substream(p).
TestReport energy_distance_test(Ensemble const& a, Ensemble const& b, std::size_t permutations,
                                RandomStream const& rng, unsigned threads = 1);

/// Sample mean with its standard error.
Estimate mean_estimate(std::span<double const> x);
/// Sample skewness m3 / m2^(3/2) with a jackknife SE.
Estimate skewness(std::span<double const> x);
/// Pearson correlation with a jackknife SE.
Estimate correlation(std::span<double const> x, std::span<double const> y);

}  // namespace hpl
