#include "hpl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "hpl/parallel.hpp"

namespace hpl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Rows minus the column means.
std::vector<std::vector<double>> centered(Ensemble const& e)
{
    std::size_t const n = e.replicas();
    std::size_t const p = e.times();
    std::vector<double> mean(p, 0.0);
    for (auto const& row : e.rows) {
        for (std::size_t i = 0; i < p; ++i) {
            mean[i] += row[i];
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(n);
    }
    std::vector<std::vector<double>> d(n, std::vector<double>(p));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < p; ++i) {
            d[r][i] = e.rows[r][i] - mean[i];
        }
    }
    return d;
}

double jackknife_se(std::span<double const> loo)
{
    auto const n = static_cast<double>(loo.size());
    double const mean = std::accumulate(loo.begin(), loo.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : loo) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt((n - 1.0) / n * ss);
}

std::vector<double> shifted(std::span<double const> x)
{
    double const mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    std::vector<double> out(x.begin(), x.end());
    for (double& v : out) {
        v -= mean;
    }
    return out;
}

double skewness_from_sums(double n, double s1, double s2, double s3)
{
    double const mean = s1 / n;
    double const m2 = s2 / n - mean * mean;
    double const m3 = s3 / n - 3.0 * mean * s2 / n + 2.0 * mean * mean * mean;
    if (!(m2 > 0.0)) {
        return 0.0;
    }
    return m3 / std::pow(m2, 1.5);
}

double correlation_from_sums(double n, double sx, double sy, double sxx, double syy, double sxy)
{
    double const cxy = sxy / n - sx * sy / (n * n);
    double const cxx = sxx / n - sx * sx / (n * n);
    double const cyy = syy / n - sy * sy / (n * n);
    if (!(cxx > 0.0 && cyy > 0.0)) {
        return 0.0;
    }
    return cxy / std::sqrt(cxx * cyy);
}

bool same_multiset(Ensemble const& a, Ensemble const& b)
{
    if (a.replicas() != b.replicas()) {
        return false;
    }
    auto ra = a.rows;
    auto rb = b.rows;
    std::sort(ra.begin(), ra.end());
    std::sort(rb.begin(), rb.end());
    return ra == rb;
}

}  // namespace

std::vector<double> Ensemble::column(std::size_t i) const
{
    std::vector<double> out;
    out.reserve(rows.size());
    for (auto const& row : rows) {
        out.push_back(row.at(i));
    }
    return out;
}

std::size_t Ensemble::index_of(double time) const
{
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (std::abs(t[i] - time) <= 1e-12 * std::max(1.0, std::abs(time))) {
            return i;
        }
    }
    throw std::invalid_argument("time " + std::to_string(time) + " is not on the ensemble grid");
}

void Ensemble::validate() const
{
    if (t.empty()) {
        throw std::invalid_argument("ensemble has an empty time grid");
    }
    for (auto const& row : rows) {
        if (row.size() != t.size()) {
            throw std::invalid_argument("ensemble rows must match the time grid");
        }
        for (double v : row) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("ensemble holds non-finite values");
            }
        }
    }
}

CovEstimate estimate_covariance(Ensemble const& ensemble)
{
    ensemble.validate();
    std::size_t const n = ensemble.replicas();
    if (n < 2) {
        throw std::invalid_argument("covariance estimation needs at least 2 replicas");
    }
    std::size_t const p = ensemble.times();
    auto const d = centered(ensemble);
    auto const nd = static_cast<double>(n);
    CovEstimate out;
    out.t = ensemble.t;
    out.replicas = n;
    out.estimate.assign(p, std::vector<double>(p, 0.0));
    out.se.assign(p, std::vector<double>(p, 0.0));
    std::vector<double> e(n);
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a; b < p; ++b) {
            double S = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                e[r] = d[r][a] * d[r][b];
                S += e[r];
            }
            double const c = S / (nd - 1.0);
            double se = kInf;
            if (n > 2) {
                // leave-one-out: (S - e_r n/(n-1)) / (n-2)
                double const f = nd / (nd - 1.0) / (nd - 2.0);
                double const mean_e = S / nd;
                double ss = 0.0;
                for (double v : e) {
                    ss += (v - mean_e) * (v - mean_e);
                }
                se = std::sqrt((nd - 1.0) / nd * ss) * f;
            }
            out.estimate[a][b] = out.estimate[b][a] = c;
            out.se[a][b] = out.se[b][a] = se;
        }
    }
    return out;
}

double standard_deviation_at(Ensemble const& ensemble, double time)
{
    ensemble.validate();
    if (ensemble.replicas() < 2) {
        throw std::invalid_argument("standard deviation needs at least 2 replicas");
    }
    auto const col = ensemble.column(ensemble.index_of(time));
    auto const x = shifted(col);
    double ss = 0.0;
    for (double v : x) {
        ss += v * v;
    }
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

Ensemble normalize(Ensemble const& ensemble)
{
    double const sd = standard_deviation_at(ensemble, 1.0);
    if (!(sd > 0.0)) {
        throw std::invalid_argument("cannot normalize: zero variance at t = 1");
    }
    Ensemble out = ensemble;
    for (auto& row : out.rows) {
        for (double& v : row) {
            v /= sd;
        }
    }
    return out;
}

Estimate normalized_covariance(Ensemble const& ensemble, double s, double t, double t_ref)
{
    ensemble.validate();
    std::size_t const n = ensemble.replicas();
    if (n < 3) {
        throw std::invalid_argument("normalized covariance needs at least 3 replicas");
    }
    std::size_t const is = ensemble.index_of(s);
    std::size_t const it = ensemble.index_of(t);
    std::size_t const ir = ensemble.index_of(t_ref);
    auto const d = centered(ensemble);
    double S_st = 0.0;
    double S_rr = 0.0;
    for (auto const& row : d) {
        S_st += row[is] * row[it];
        S_rr += row[ir] * row[ir];
    }
    if (!(S_rr > 0.0)) {
        throw std::invalid_argument("zero variance at the reference time");
    }
    auto const nd = static_cast<double>(n);
    double const f = nd / (nd - 1.0);
    std::vector<double> loo(n);
    for (std::size_t r = 0; r < n; ++r) {
        loo[r] = (S_st - f * d[r][is] * d[r][it]) / (S_rr - f * d[r][ir] * d[r][ir]);
    }
    return Estimate{S_st / S_rr, jackknife_se(loo)};
}

Estimate hurst_from_variance(Ensemble const& ensemble, std::span<double const> t_subset)
{
    ensemble.validate();
    std::size_t const n = ensemble.replicas();
    if (n < 2) {
        throw std::invalid_argument("Hurst estimation needs at least 2 replicas");
    }
    std::vector<double> times(t_subset.begin(), t_subset.end());
    std::sort(times.begin(), times.end());
    if (times.size() < 3 || std::adjacent_find(times.begin(), times.end()) != times.end()) {
        throw std::invalid_argument("Hurst estimation needs at least 3 distinct times");
    }
    if (!(times.front() > 0.0)) {
        throw std::invalid_argument("Hurst estimation needs positive times");
    }
    std::size_t const q = times.size();
    std::vector<std::size_t> idx(q);
    for (std::size_t j = 0; j < q; ++j) {
        idx[j] = ensemble.index_of(times[j]);
    }
    auto const d = centered(ensemble);
    auto const nd = static_cast<double>(n);
    std::vector<double> v(q, 0.0);
    for (auto const& row : d) {
        for (std::size_t j = 0; j < q; ++j) {
            v[j] += row[idx[j]] * row[idx[j]];
        }
    }
    for (double& x : v) {
        x /= nd - 1.0;
        if (!(x > 0.0)) {
            throw std::invalid_argument("nonpositive variance estimate");
        }
    }
    std::vector<double> x(q);
    std::vector<double> y(q);
    for (std::size_t j = 0; j < q; ++j) {
        x[j] = std::log(times[j]);
        y[j] = std::log(v[j]);
    }
    double const xbar = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(q);
    double sxx = 0.0;
    for (double xi : x) {
        sxx += (xi - xbar) * (xi - xbar);
    }
    std::vector<double> w(q);
    double slope = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
        w[j] = (x[j] - xbar) / sxx;
        slope += w[j] * y[j];
    }
    // Cov(log v_j, log v_l) ~ (E d_j^2 d_l^2 - v_j v_l) / (n v_j v_l)
    double var = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
        for (std::size_t l = 0; l < q; ++l) {
            double m4 = 0.0;
            for (auto const& row : d) {
                m4 += row[idx[j]] * row[idx[j]] * row[idx[l]] * row[idx[l]];
            }
            m4 /= nd;
            double const cov = (m4 - v[j] * v[l]) / (nd * v[j] * v[l]);
            var += w[j] * w[l] * cov;
        }
    }
    return Estimate{0.5 * slope, 0.5 * std::sqrt(std::max(0.0, var))};
}

TestReport energy_distance_test(Ensemble const& a, Ensemble const& b, std::size_t permutations,
                                RandomStream const& rng, unsigned threads)
{
    a.validate();
    b.validate();
    if (a.replicas() == 0 || b.replicas() == 0) {
        throw std::invalid_argument("energy test needs two nonempty samples");
    }
    if (a.times() != b.times()) {
        throw std::invalid_argument("energy test samples must share the time grid");
    }
    std::size_t const n = a.replicas();
    std::size_t const m = b.replicas();
    std::size_t const N = n + m;
    std::size_t const p = a.times();
    std::vector<std::vector<double> const*> pooled;
    pooled.reserve(N);
    for (auto const& row : a.rows) {
        pooled.push_back(&row);
    }
    for (auto const& row : b.rows) {
        pooled.push_back(&row);
    }
    std::vector<float> dist(N * N, 0.0f);
    unsigned const workers = resolve_threads(threads);
    parallel_for(N, workers, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < N; ++j) {
            double ss = 0.0;
            for (std::size_t k = 0; k < p; ++k) {
                double const diff = (*pooled[i])[k] - (*pooled[j])[k];
                ss += diff * diff;
            }
            dist[i * N + j] = static_cast<float>(std::sqrt(ss));
        }
    });
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = i + 1; j < N; ++j) {
            dist[j * N + i] = dist[i * N + j];
        }
    }
    double total = 0.0;
    for (float v : dist) {
        total += v;
    }
    auto const nd = static_cast<double>(n);
    auto const md = static_cast<double>(m);
    auto statistic = [&](std::span<std::size_t const> order) {
        double within_a = 0.0;
        double within_b = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            float const* row = &dist[order[x] * N];
            for (std::size_t y = 0; y < n; ++y) {
                within_a += row[order[y]];
            }
        }
        for (std::size_t x = n; x < N; ++x) {
            float const* row = &dist[order[x] * N];
            for (std::size_t y = n; y < N; ++y) {
                within_b += row[order[y]];
            }
        }
        double const cross = 0.5 * (total - within_a - within_b);
        double const e = 2.0 * cross / (nd * md) - within_a / (nd * nd) - within_b / (md * md);
        return std::max(0.0, nd * md / (nd + md) * e);
    };
    std::vector<std::size_t> identity(N);
    std::iota(identity.begin(), identity.end(), 0);
    double const observed = same_multiset(a, b) ? 0.0 : statistic(identity);

    std::vector<char> exceed(permutations, 0);
    parallel_for(permutations, workers, [&](std::size_t k) {
        RandomStream stream = rng.substream(k);
        std::vector<std::size_t> order = identity;
        for (std::size_t i = N - 1; i > 0; --i) {
            std::size_t const j = stream.below(i + 1);
            std::swap(order[i], order[j]);
        }
        exceed[k] = statistic(order) >= observed ? 1 : 0;
    });
    std::size_t const count = std::accumulate(exceed.begin(), exceed.end(), std::size_t{0});
    TestReport report;
    report.statistic = observed;
    report.p_value = static_cast<double>(1 + count) / static_cast<double>(1 + permutations);
    report.replicas = N;
    report.permutations = permutations;
    report.seed = rng.seed();
    return report;
}

Estimate mean_estimate(std::span<double const> x)
{
    if (x.size() < 2) {
        throw std::invalid_argument("mean estimate needs at least 2 values");
    }
    auto const nd = static_cast<double>(x.size());
    double const mean = std::accumulate(x.begin(), x.end(), 0.0) / nd;
    double ss = 0.0;
    for (double v : x) {
        ss += (v - mean) * (v - mean);
    }
    return Estimate{mean, std::sqrt(ss / (nd - 1.0) / nd)};
}

Estimate skewness(std::span<double const> x)
{
    if (x.size() < 3) {
        throw std::invalid_argument("skewness needs at least 3 values");
    }
    auto const y = shifted(x);
    auto const nd = static_cast<double>(y.size());
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;
    for (double v : y) {
        s1 += v;
        s2 += v * v;
        s3 += v * v * v;
    }
    std::vector<double> loo(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        double const v = y[i];
        loo[i] = skewness_from_sums(nd - 1.0, s1 - v, s2 - v * v, s3 - v * v * v);
    }
    return Estimate{skewness_from_sums(nd, s1, s2, s3), jackknife_se(loo)};
}

Estimate correlation(std::span<double const> x, std::span<double const> y)
{
    if (x.size() != y.size() || x.size() < 3) {
        throw std::invalid_argument("correlation needs two samples of equal size >= 3");
    }
    auto const a = shifted(x);
    auto const b = shifted(y);
    auto const nd = static_cast<double>(a.size());
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sx += a[i];
        sy += b[i];
        sxx += a[i] * a[i];
        syy += b[i] * b[i];
        sxy += a[i] * b[i];
    }
    std::vector<double> loo(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        loo[i] = correlation_from_sums(nd - 1.0, sx - a[i], sy - b[i], sxx - a[i] * a[i],
                                       syy - b[i] * b[i], sxy - a[i] * b[i]);
    }
    return Estimate{correlation_from_sums(nd, sx, sy, sxx, syy, sxy), jackknife_se(loo)};
}

}  // namespace hpl
