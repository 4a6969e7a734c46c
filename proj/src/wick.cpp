#include "hpl/wick.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "hpl/parallel.hpp"
#include "hpl/particle_system.hpp"
#include "hpl/quadrature.hpp"

namespace hpl {

namespace {

void pair_sets_rec(int k, int next, std::vector<bool>& used, PairSet& current,
                   std::vector<PairSet>& out)
{
    out.push_back(current);
    for (int s = next; s < k; ++s) {
        if (used[s]) {
            continue;
        }
        for (int t = s + 1; t < k; ++t) {
            if (used[t]) {
                continue;
            }
            used[s] = used[t] = true;
            current.pairs.emplace_back(s, t);
            pair_sets_rec(k, s + 1, used, current, out);
            current.pairs.pop_back();
            used[s] = used[t] = false;
        }
    }
}

struct MeanSe
{
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(std::span<double const> x)
{
    MeanSe out;
    auto const n = static_cast<double>(x.size());
    if (x.empty()) {
        return out;
    }
    out.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    if (x.size() < 2) {
        return out;
    }
    double ss = 0.0;
    for (double v : x) {
        ss += (v - out.mean) * (v - out.mean);
    }
    out.se = std::sqrt(ss / (n - 1.0) / n);
    return out;
}

double z_score(double diff, double se)
{
    if (se > 0.0) {
        return diff / se;
    }
    return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
}

/// Calls visit(indices) for every ordered tuple of k distinct indices below n.
template <class Visit>
void for_each_distinct_tuple(std::size_t n, int k, std::vector<std::size_t>& tuple, int depth,
                             Visit&& visit)
{
    if (depth == k) {
        visit(std::span<std::size_t const>(tuple));
        return;
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (std::find(tuple.begin(), tuple.begin() + depth, j) != tuple.begin() + depth) {
            continue;
        }
        tuple[depth] = j;
        for_each_distinct_tuple(n, k, tuple, depth + 1, visit);
    }
}

double nested_integral(std::function<double(std::span<double const>)> const& F, Interval w,
                       std::vector<double>& point, std::size_t depth)
{
    if (depth == point.size()) {
        return F(point);
    }
    auto inner = [&](double x) {
        point[depth] = x;
        return nested_integral(F, w, point, depth + 1);
    };
    return quad::integrate(inner, w.lo, w.hi, 1e-10);
}

/// Adds slot `s` to each existing block or to a new one; at the leaves
/// returns the Moebius-weighted product of the block sums.
double partition_sum(std::span<std::vector<double> const> values, std::size_t s,
                     std::vector<std::vector<double>>& blocks, std::vector<std::size_t>& sizes)
{
    if (s == values.size()) {
        double term = 1.0;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            double weight = sizes[b] % 2 == 1 ? 1.0 : -1.0;
            for (std::size_t f = 2; f < sizes[b]; ++f) {
                weight *= static_cast<double>(f);
            }
            term *= weight * std::accumulate(blocks[b].begin(), blocks[b].end(), 0.0);
        }
        return term;
    }
    auto const& row = values[s];
    double total = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        std::vector<double> const saved = blocks[b];
        for (std::size_t j = 0; j < row.size(); ++j) {
            blocks[b][j] *= row[j];
        }
        ++sizes[b];
        total += partition_sum(values, s + 1, blocks, sizes);
        --sizes[b];
        blocks[b] = saved;
    }
    blocks.push_back(row);
    sizes.push_back(1);
    total += partition_sum(values, s + 1, blocks, sizes);
    blocks.pop_back();
    sizes.pop_back();
    return total;
}

std::vector<double> trajectory_positions(ParticleSystem const& sys, std::size_t j, std::size_t m)
{
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        out[i] = sys.position(j, i);
    }
    return out;
}

}  // namespace

bool PairSet::covers(int slot) const
{
    return std::any_of(pairs.begin(), pairs.end(),
                       [slot](auto const& p) { return p.first == slot || p.second == slot; });
}

std::vector<PairSet> enumerate_pair_sets(int k)
{
    if (k < 1) {
        throw std::invalid_argument("pair sets need k >= 1");
    }
    std::vector<PairSet> out;
    std::vector<bool> used(static_cast<std::size_t>(k), false);
    PairSet current;
    pair_sets_rec(k, 0, used, current, out);
    return out;
}

int TensorTestFunction::order() const
{
    return terms.empty() ? 0 : static_cast<int>(terms.front().size());
}

void TensorTestFunction::validate() const
{
    if (factors.empty() || terms.empty()) {
        throw std::invalid_argument("tensor test function needs factors and terms");
    }
    std::size_t const k = terms.front().size();
    if (k == 0) {
        throw std::invalid_argument("tensor terms must have at least one factor");
    }
    for (auto const& term : terms) {
        if (term.size() != k) {
            throw std::invalid_argument("all tensor terms must have the same order");
        }
        for (std::size_t id : term) {
            if (id >= factors.size()) {
                throw std::invalid_argument("tensor term references an unknown factor");
            }
        }
    }
    for (auto const& factor : factors) {
        if (!factor.f || !(factor.support.hi >= factor.support.lo)) {
            throw std::invalid_argument("tensor factor needs a function and a support");
        }
    }
}

Interval TensorTestFunction::support_hull() const
{
    Interval hull{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (auto const& factor : factors) {
        hull.lo = std::min(hull.lo, factor.support.lo);
        hull.hi = std::max(hull.hi, factor.support.hi);
    }
    return hull;
}

CovarianceTable::CovarianceTable(std::size_t factors) : n_(factors), values_(factors * factors) {}

void CovarianceTable::set(std::size_t a, std::size_t b, double value)
{
    if (a >= n_ || b >= n_) {
        throw std::out_of_range("covariance index out of range");
    }
    values_[a * n_ + b] = value;
    values_[b * n_ + a] = value;
}

bool CovarianceTable::has(std::size_t a, std::size_t b) const
{
    return a < n_ && b < n_ && values_[a * n_ + b].has_value();
}

double CovarianceTable::at(std::size_t a, std::size_t b) const
{
    if (!has(a, b)) {
        throw std::invalid_argument("missing covariance entry for factors " + std::to_string(a)
                                    + " and " + std::to_string(b));
    }
    return *values_[a * n_ + b];
}

double wick_product(std::span<double const> evaluations, CovarianceTable const& covariance,
                    TensorTestFunction const& phi)
{
    phi.validate();
    if (evaluations.size() != phi.factors.size()) {
        throw std::invalid_argument("one evaluation per factor is required");
    }
    int const k = phi.order();
    auto const pair_sets = enumerate_pair_sets(k);
    double total = 0.0;
    for (auto const& term : phi.terms) {
        for (auto const& A : pair_sets) {
            double value = A.size() % 2 == 0 ? 1.0 : -1.0;
            for (auto const& [s, t] : A.pairs) {
                value *= covariance.at(term[s], term[t]);
            }
            for (int n = 0; n < k; ++n) {
                if (!A.covers(n)) {
                    value *= evaluations[term[n]];
                }
            }
            total += value;
        }
    }
    return total;
}

std::int64_t cancellation_identity(int n)
{
    if (n < 1 || n > 30) {
        throw std::invalid_argument("cancellation identity needs 1 <= n <= 30");
    }
    std::uint64_t const subsets = std::uint64_t{1} << n;
    std::int64_t total = 0;
    for (std::uint64_t a = 0; a < subsets; ++a) {
        for (std::uint64_t a_prime = 0; a_prime < subsets; ++a_prime) {
            int const size = std::popcount(a) + std::popcount(a_prime);
            total += size % 2 == 0 ? 1 : -1;
        }
    }
    return total;
}

double distinct_tuple_sum(std::span<std::vector<double> const> values)
{
    if (values.empty()) {
        return 1.0;
    }
    std::size_t const n = values.front().size();
    for (auto const& row : values) {
        if (row.size() != n) {
            throw std::invalid_argument("distinct tuple sum needs rows of equal length");
        }
    }
    std::vector<std::vector<double>> blocks;
    std::vector<std::size_t> sizes;
    return partition_sum(values, 0, blocks, sizes);
}

IdentityReport mecke_palm_check(std::function<double(std::span<double const>)> const& F,
                                Interval window, int k, std::size_t replicas,
                                RandomStream const& rng, unsigned threads)
{
    if (k < 1) {
        throw std::invalid_argument("Mecke-Palm check needs k >= 1");
    }
    if (!(window.hi > window.lo)) {
        throw std::invalid_argument("Mecke-Palm window must have positive length");
    }
    if (replicas < 2) {
        throw std::invalid_argument("Mecke-Palm check needs at least 2 replicas");
    }
    std::vector<double> sums(replicas, 0.0);
    parallel_for(replicas, resolve_threads(threads), [&](std::size_t r) {
        RandomStream stream = rng.substream(r);
        auto const n = static_cast<std::size_t>(stream.poisson(window.length()));
        std::vector<double> points(n);
        for (double& x : points) {
            x = stream.uniform(window.lo, window.hi);
        }
        std::vector<std::size_t> tuple(static_cast<std::size_t>(k));
        std::vector<double> args(static_cast<std::size_t>(k));
        double total = 0.0;
        for_each_distinct_tuple(n, k, tuple, 0, [&](std::span<std::size_t const> idx) {
            for (int s = 0; s < k; ++s) {
                args[s] = points[idx[s]];
            }
            total += F(args);
        });
        sums[r] = total;
    });
    auto const est = mean_se(sums);
    std::vector<double> point(static_cast<std::size_t>(k));
    IdentityReport report;
    report.lhs = est.mean;
    report.rhs = nested_integral(F, window, point, 0);
    report.se = est.se;
    report.z = z_score(report.lhs - report.rhs, report.se);
    report.replicas = replicas;
    report.seed = rng.seed();
    return report;
}

IdentityReport second_moment_permutation_check(PathFunctional const& F,
                                               PermutationCheckConfig const& config,
                                               std::size_t replicas, RandomStream const& rng,
                                               unsigned threads)
{
    if (config.k < 1 || config.k > 6) {
        throw std::invalid_argument("permutation check supports 1 <= k <= 6");
    }
    if (replicas < 2) {
        throw std::invalid_argument("permutation check needs at least 2 replicas");
    }
    int const k = config.k;
    auto const grid = TimeGrid::with_step(config.T, config.step);
    std::size_t const m = grid.nodes_for(config.T);
    Window const window(config.half_width);
    StableParams const params(config.alpha);
    unsigned const workers = resolve_threads(threads);

    RandomStream const lhs_rng = rng.substream(0);
    std::vector<double> lhs(replicas, 0.0);
    parallel_for(replicas, workers, [&](std::size_t r) {
        RandomStream stream = lhs_rng.substream(r);
        ParticleSystem const sys = sample_system(config.alpha, window, grid, stream);
        std::vector<std::vector<double>> positions(sys.size());
        for (std::size_t j = 0; j < sys.size(); ++j) {
            positions[j] = trajectory_positions(sys, j, m);
        }
        std::vector<std::size_t> tuple(static_cast<std::size_t>(k));
        std::vector<Trajectory> paths(static_cast<std::size_t>(k));
        double total = 0.0;
        for_each_distinct_tuple(sys.size(), k, tuple, 0, [&](std::span<std::size_t const> idx) {
            double sign = 1.0;
            for (int s = 0; s < k; ++s) {
                paths[s] = Trajectory{positions[idx[s]], config.step};
                sign *= sys.charges[idx[s]];
            }
            total += sign * F(paths);
        });
        lhs[r] = total * total;
    });

    RandomStream const rhs_rng = rng.substream(1);
    double const volume = std::pow(window.size(), k);
    std::vector<double> rhs(replicas, 0.0);
    parallel_for(replicas, workers, [&](std::size_t r) {
        RandomStream stream = rhs_rng.substream(r);
        std::vector<std::vector<double>> positions(static_cast<std::size_t>(k),
                                                   std::vector<double>(grid.n_steps + 1));
        for (auto& p : positions) {
            double const start = stream.uniform(-window.half_width, window.half_width);
            fill_path(params, config.step, start, p, stream);
        }
        std::vector<Trajectory> base(static_cast<std::size_t>(k));
        for (int s = 0; s < k; ++s) {
            base[s] = Trajectory{std::span<double const>(positions[s]).first(m), config.step};
        }
        double const f_base = F(base);
        std::vector<int> perm(static_cast<std::size_t>(k));
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<Trajectory> permuted(static_cast<std::size_t>(k));
        double total = 0.0;
        do {
            for (int s = 0; s < k; ++s) {
                permuted[s] = base[perm[s]];
            }
            total += f_base * F(permuted);
        } while (std::next_permutation(perm.begin(), perm.end()));
        rhs[r] = volume * total;
    });

    auto const l = mean_se(lhs);
    auto const h = mean_se(rhs);
    IdentityReport report;
    report.lhs = l.mean;
    report.rhs = h.mean;
    report.se = std::hypot(l.se, h.se);
    report.z = z_score(report.lhs - report.rhs, report.se);
    report.replicas = replicas;
    report.seed = rng.seed();
    report.details = {{"lhs_se", l.se}, {"rhs_se", h.se}};
    return report;
}

WickEvaluation evaluate_wick_system(TensorTestFunction const& phi, WickSystemConfig const& config,
                                    RandomStream& rng)
{
    phi.validate();
    if (!(config.T > 0.0)) {
        throw std::invalid_argument("Wick system needs T > 0");
    }
    auto const grid = TimeGrid::with_step(config.T, config.step);
    Interval region = phi.support_hull();
    if (!(region.hi > region.lo)) {
        region = Interval{region.lo - 0.5, region.lo + 0.5};
    }
    ParticleSystem const sys = sample_visiting_system(config.alpha, region, grid, config.T, rng);
    std::size_t const m = sys.nodes();
    std::size_t const n = sys.size();
    std::size_t const factors = phi.factors.size();

    // occupation[f][j] = sigma_j * step * sum_i phi_f(x_j(i))
    std::vector<std::vector<double>> occupation(factors, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            double const x = sys.position(j, i);
            for (std::size_t f = 0; f < factors; ++f) {
                auto const& factor = phi.factors[f];
                if (factor.support.contains(x)) {
                    occupation[f][j] += factor.f(x);
                }
            }
        }
        for (std::size_t f = 0; f < factors; ++f) {
            occupation[f][j] *= sys.charges[j] * config.step;
        }
    }

    WickEvaluation out;
    out.particles = n;
    out.fields.resize(factors);
    double const root_t = std::sqrt(config.T);
    for (std::size_t f = 0; f < factors; ++f) {
        out.fields[f] = std::accumulate(occupation[f].begin(), occupation[f].end(), 0.0) / root_t;
    }
    int const k = phi.order();
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(k));
    for (auto const& term : phi.terms) {
        for (int s = 0; s < k; ++s) {
            rows[s] = occupation[term[s]];
        }
        out.rho += distinct_tuple_sum(rows);
    }
    out.rho /= std::pow(config.T, 0.5 * k);
    return out;
}

CovarianceTable calibrate_covariance(TensorTestFunction const& phi, WickSystemConfig const& config,
                                     std::size_t replicas, RandomStream const& rng,
                                     unsigned threads)
{
    if (replicas < 1) {
        throw std::invalid_argument("calibration needs at least one replica");
    }
    std::size_t const factors = phi.factors.size();
    std::vector<std::vector<double>> fields(replicas);
    parallel_for(replicas, resolve_threads(threads), [&](std::size_t r) {
        RandomStream stream = rng.substream(r);
        fields[r] = evaluate_wick_system(phi, config, stream).fields;
    });
    CovarianceTable table(factors);
    for (std::size_t a = 0; a < factors; ++a) {
        for (std::size_t b = a; b < factors; ++b) {
            double sum = 0.0;
            for (auto const& v : fields) {
                sum += v[a] * v[b];
            }
            table.set(a, b, sum / static_cast<double>(replicas));
        }
    }
    return table;
}

IdentityReport wick_vs_rho_second_moment(TensorTestFunction const& phi,
                                         WickSystemConfig const& config, std::size_t replicas,
                                         RandomStream const& rng, unsigned threads)
{
    phi.validate();
    if (replicas < 2) {
        throw std::invalid_argument("Wick identity check needs at least 2 replicas");
    }
    std::size_t const calibration = std::max<std::size_t>(1, config.calibration_factor * replicas);
    CovarianceTable const covariance =
        calibrate_covariance(phi, config, calibration, rng.substream(1), threads);

    RandomStream const eval_rng = rng.substream(0);
    std::vector<double> wick(replicas);
    std::vector<double> rho(replicas);
    parallel_for(replicas, resolve_threads(threads), [&](std::size_t r) {
        RandomStream stream = eval_rng.substream(r);
        auto const eval = evaluate_wick_system(phi, config, stream);
        wick[r] = wick_product(eval.fields, covariance, phi);
        rho[r] = eval.rho;
    });

    std::vector<double> cross(replicas);
    std::vector<double> w2(replicas);
    std::vector<double> r2(replicas);
    std::vector<double> diff(replicas);
    for (std::size_t r = 0; r < replicas; ++r) {
        cross[r] = (wick[r] - rho[r]) * (wick[r] - rho[r]);
        w2[r] = wick[r] * wick[r];
        r2[r] = rho[r] * rho[r];
        diff[r] = cross[r] - w2[r] + r2[r];
    }
    auto const c = mean_se(cross);
    auto const w = mean_se(w2);
    auto const p = mean_se(r2);
    auto const d = mean_se(diff);
    auto const mean_wick = mean_se(wick);
    IdentityReport report;
    report.lhs = c.mean;
    report.rhs = w.mean - p.mean;
    report.se = d.se;
    report.z = z_score(d.mean, d.se);
    report.replicas = replicas;
    report.seed = rng.seed();
    report.details = {{"second_moment_difference", c.mean},
                      {"second_moment_wick", w.mean},
                      {"second_moment_rho", p.mean},
                      {"mean_wick", mean_wick.mean},
                      {"mean_wick_se", mean_wick.se},
                      {"calibration_replicas", static_cast<double>(calibration)}};
    return report;
}

}  // namespace hpl
