#include "hpl/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "hpl/digest.hpp"

namespace hpl {

namespace {

struct PointSet
{
    std::vector<double> pos;
    std::vector<double> charge;
    std::vector<std::uint32_t> particle;
};

// All (particle, grid time < m) positions inside [lo, hi], sorted by position.
PointSet collect_points(ParticleSystem const& system, std::size_t m, double lo, double hi)
{
    struct Entry
    {
        double pos;
        std::uint32_t particle;
    };
    std::vector<Entry> entries;
    for (std::size_t j = 0; j < system.size(); ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            double const x = system.position(j, i);
            if (x >= lo && x <= hi) {
                entries.push_back({x, static_cast<std::uint32_t>(j)});
            }
        }
    }
    std::sort(entries.begin(), entries.end(), [](Entry const& a, Entry const& b) {
        return a.pos < b.pos || (a.pos == b.pos && a.particle < b.particle);
    });
    PointSet out;
    out.pos.reserve(entries.size());
    out.charge.reserve(entries.size());
    out.particle.reserve(entries.size());
    for (auto const& e : entries) {
        out.pos.push_back(e.pos);
        out.charge.push_back(static_cast<double>(system.charges[e.particle]));
        out.particle.push_back(e.particle);
    }
    return out;
}

Interval query_support(std::span<double const> t_grid, double kappa)
{
    double const t_max = *std::max_element(t_grid.begin(), t_grid.end());
    return Interval{-kappa, t_max + kappa};
}

void check_t_grid(std::vector<double> const& t_grid)
{
    if (t_grid.empty()) {
        throw std::invalid_argument("t_grid must not be empty");
    }
    for (double t : t_grid) {
        if (!(t > 0.0) || !std::isfinite(t)) {
            throw std::invalid_argument("t_grid values must be positive");
        }
    }
}

void check_horizon(double T, double step)
{
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw std::invalid_argument("horizon T must be positive");
    }
    if (!(step > 0.0) || step > T) {
        throw std::invalid_argument("time step must lie in (0, T]");
    }
}

std::size_t riemann_nodes(double T, double step)
{
    return static_cast<std::size_t>(std::llround(T / step));
}

}  // namespace

void EtaConfig::validate() const
{
    if (!(alpha > 0.0 && alpha < beta && beta < 1.0)) {
        throw std::invalid_argument("eta needs 0 < alpha < beta < 1");
    }
    if (!(alpha + beta > 1.0)) {
        throw std::invalid_argument("eta needs alpha + beta > 1");
    }
    check_horizon(T, step);
    check_t_grid(t_grid);
    if (!(eps >= 0.0) || !(delta >= 0.0) || !(kappa >= 0.0 && kappa < 1.0)) {
        throw std::invalid_argument("eps, delta >= 0 and kappa in [0, 1) required");
    }
    if (!(reach >= 0.0) || (reach > 0.0 && delta > 0.0)) {
        throw std::invalid_argument("reach must be >= 0 and needs delta = 0");
    }
    if (!(window_q > 0.0 && window_q < 1.0)) {
        throw std::invalid_argument("window quantile must lie in (0, 1)");
    }
}

std::string EtaConfig::digest() const
{
    Digest d;
    d.add("eta").add(alpha).add(beta).add(T).add(t_grid).add(eps).add(delta).add(kappa).add(step)
        .add(window_q).add(reach).add(static_cast<int>(profile));
    return d.hex();
}

void RhoConfig::validate() const
{
    if (k < 2) {
        throw std::invalid_argument("rho needs order k >= 2");
    }
    if (!(alpha > 1.0 - 1.0 / k && alpha < 1.0)) {
        throw std::invalid_argument("rho needs alpha in (1 - 1/k, 1)");
    }
    check_horizon(T, step);
    check_t_grid(t_grid);
    if (!(eps > 0.0) || !(kappa >= 0.0 && kappa < 1.0)) {
        throw std::invalid_argument("rho needs eps > 0 and kappa in [0, 1)");
    }
}

std::string RhoConfig::digest() const
{
    Digest d;
    d.add("rho").add(k).add(alpha).add(eps).add(T).add(t_grid).add(kappa).add(step)
        .add(static_cast<int>(profile));
    return d.hex();
}

double delta_pair(Trajectory path_i, Trajectory path_j, std::function<double(double)> const& phi,
                  PairKernel const& kernel, double T)
{
    if (!(T >= 0.0)) {
        throw std::invalid_argument("horizon must be non-negative");
    }
    if (path_i.step != path_j.step) {
        throw std::invalid_argument("paths must share the time grid");
    }
    std::size_t const m = riemann_nodes(T, path_i.step);
    if (m > path_i.positions.size() || m > path_j.positions.size()) {
        throw std::invalid_argument("T exceeds the path horizon");
    }
    double total = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        double const x = path_i.positions[r];
        double const w = phi(x);
        if (w == 0.0) {
            continue;
        }
        double inner = 0.0;
        for (std::size_t s = 0; s < m; ++s) {
            inner += kernel(path_j.positions[s] - x);
        }
        total += w * inner;
    }
    return total * path_i.step * path_i.step;
}

double delta_pair(Trajectory path_i, Trajectory path_j, std::function<double(double)> const& phi,
                  double gamma, double T, double eps, double delta)
{
    EtaConfig probe;
    probe.eps = eps;
    probe.delta = delta;
    probe.alpha = 0.5 - gamma;
    probe.beta = 0.5 + gamma;
    if (!(gamma > 0.0 && gamma < 0.5)) {
        throw std::invalid_argument("gamma must lie in (0, 1/2)");
    }
    return delta_pair(path_i, path_j, phi, eta_kernel(probe), T);
}

PairKernel eta_kernel(EtaConfig const& config)
{
    double const gamma = config.gamma();
    PairKernel const k = config.eps > 0.0
        ? PairKernel::mollified(gamma, config.eps, config.delta, Mollifier(config.profile))
        : PairKernel::raw(gamma, config.delta > 0.0 ? config.delta : 1e-9);
    return config.reach > 0.0 ? k.within(config.reach) : k;
}

std::vector<std::function<double(double)>> indicator_family(std::span<double const> t_grid,
                                                            double kappa, MollifierProfile profile)
{
    std::vector<std::function<double(double)>> out;
    out.reserve(t_grid.size());
    if (kappa > 0.0) {
        Mollifier const g(profile);
        for (double t : t_grid) {
            out.emplace_back(SmoothedIndicator(StepFunction::indicator(0.0, t), g, kappa));
        }
    } else {
        for (double t : t_grid) {
            out.emplace_back([t](double x) { return (x >= 0.0 && x <= t) ? 1.0 : 0.0; });
        }
    }
    return out;
}

std::vector<double> eta_on_system(EtaConfig const& config, ParticleSystem const& system,
                                  PairKernel const& kernel)
{
    double const h = system.grid.step;
    std::size_t const m = system.grid.nodes_for(config.T);
    auto const phis = indicator_family(config.t_grid, config.kappa, config.profile);
    Interval const q = query_support(config.t_grid, config.kappa);
    double const R = kernel.radius();
    double const lo = std::isfinite(R) ? q.lo - R : -std::numeric_limits<double>::infinity();
    double const hi = std::isfinite(R) ? q.hi + R : std::numeric_limits<double>::infinity();
    PointSet const pts = collect_points(system, m, lo, hi);

    std::vector<double> out(phis.size(), 0.0);
    std::vector<double> weights(phis.size());
    for (std::size_t j = 0; j < system.size(); ++j) {
        double const sigma_j = system.charges[j];
        for (std::size_t r = 0; r < m; ++r) {
            double const x = system.position(j, r);
            if (x < q.lo || x > q.hi) {
                continue;
            }
            bool any = false;
            for (std::size_t f = 0; f < phis.size(); ++f) {
                weights[f] = phis[f](x);
                any = any || weights[f] != 0.0;
            }
            if (!any) {
                continue;
            }
            std::size_t begin = 0;
            std::size_t end = pts.pos.size();
            if (std::isfinite(R)) {
                begin = static_cast<std::size_t>(
                    std::lower_bound(pts.pos.begin(), pts.pos.end(), x - R) - pts.pos.begin());
                end = static_cast<std::size_t>(
                    std::upper_bound(pts.pos.begin(), pts.pos.end(), x + R) - pts.pos.begin());
            }
            double all = 0.0;
            for (std::size_t p = begin; p < end; ++p) {
                all += pts.charge[p] * kernel(pts.pos[p] - x);
            }
            double self = 0.0;
            for (std::size_t s = 0; s < m; ++s) {
                double const y = system.position(j, s);
                if (y >= lo && y <= hi) {
                    self += kernel(y - x);
                }
            }
            double const others = all - sigma_j * self;
            for (std::size_t f = 0; f < phis.size(); ++f) {
                out[f] += sigma_j * weights[f] * others;
            }
        }
    }
    double const scale = h * h / config.T;
    for (double& v : out) {
        v *= scale;
    }
    return out;
}

FunctionalSample eta_T(EtaConfig const& config, PairKernel const& kernel, RandomStream& rng)
{
    config.validate();
    TimeGrid const grid = TimeGrid::with_step(config.T, config.step);
    Interval const q = query_support(config.t_grid, config.kappa);
    ParticleSystem system;
    double const R = kernel.radius();
    if (std::isfinite(R)) {
        system = sample_visiting_system(config.alpha, Interval{q.lo - R, q.hi + R}, grid, config.T,
                                        rng);
    } else {
        auto const choice = window_for(q.hi, config.T, config.alpha, config.window_q);
        system = sample_system(config.alpha, choice.window, grid, rng);
    }
    FunctionalSample sample;
    sample.t = config.t_grid;
    sample.config_digest = config.digest();
    sample.replica_id = rng.stream_id();
    sample.particles = system.size();
    sample.too_few_particles = system.size() < 2;
    sample.values = eta_on_system(config, system, kernel);
    return sample;
}

FunctionalSample eta_T(EtaConfig const& config, RandomStream& rng)
{
    config.validate();
    return eta_T(config, eta_kernel(config), rng);
}

double approx_k_ilt(std::span<Trajectory const> paths, std::function<double(double)> const& phi,
                    Mollifier const& f, double eps, double T, double alpha)
{
    auto const k = paths.size();
    if (k < 2) {
        throw std::invalid_argument("k-intersection local time needs at least two paths");
    }
    if (!(alpha > 1.0 - 1.0 / static_cast<double>(k) && alpha < 1.0)) {
        throw std::invalid_argument("k-intersection local time needs alpha in (1 - 1/k, 1)");
    }
    double const h = paths[0].step;
    std::size_t const m = riemann_nodes(T, h);
    for (auto const& p : paths) {
        if (p.step != h) {
            throw std::invalid_argument("paths must share the time grid");
        }
        if (m > p.positions.size()) {
            throw std::invalid_argument("T exceeds the path horizon");
        }
    }
    double total = 0.0;
    for (std::size_t s1 = 0; s1 < m; ++s1) {
        double const x = paths[0].positions[s1];
        double const w = phi(x);
        if (w == 0.0) {
            continue;
        }
        double prod = w;
        for (std::size_t i = 1; i < k && prod != 0.0; ++i) {
            double sum = 0.0;
            for (std::size_t s = 0; s < m; ++s) {
                sum += mollifier_eval(f, eps, paths[i].positions[s] - x);
            }
            prod *= sum * h;
        }
        total += prod;
    }
    return total * h;
}

std::vector<double> rho_on_system(RhoConfig const& config, ParticleSystem const& system,
                                  Mollifier const& f)
{
    double const h = system.grid.step;
    std::size_t const m = system.grid.nodes_for(config.T);
    auto const phis = indicator_family(config.t_grid, config.kappa, config.profile);
    Interval const q = query_support(config.t_grid, config.kappa);
    double const eps = config.eps;
    PointSet const pts = collect_points(system, m, q.lo - eps, q.hi + eps);
    int const order = config.k - 1;

    double factorial = 1.0;
    for (int i = 2; i <= order; ++i) {
        factorial *= i;
    }

    std::vector<double> out(phis.size(), 0.0);
    std::vector<double> weights(phis.size());
    std::vector<double> occupation(system.size(), 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<double> e(static_cast<std::size_t>(order) + 1);
    for (std::size_t j = 0; j < system.size(); ++j) {
        double const sigma_j = system.charges[j];
        for (std::size_t r = 0; r < m; ++r) {
            double const x = system.position(j, r);
            if (x < q.lo || x > q.hi) {
                continue;
            }
            bool any = false;
            for (std::size_t t = 0; t < phis.size(); ++t) {
                weights[t] = phis[t](x);
                any = any || weights[t] != 0.0;
            }
            if (!any) {
                continue;
            }
            auto const begin = static_cast<std::size_t>(
                std::upper_bound(pts.pos.begin(), pts.pos.end(), x - eps) - pts.pos.begin());
            auto const end = static_cast<std::size_t>(
                std::lower_bound(pts.pos.begin(), pts.pos.end(), x + eps) - pts.pos.begin());
            touched.clear();
            for (std::size_t p = begin; p < end; ++p) {
                std::uint32_t const other = pts.particle[p];
                if (other == j) {
                    continue;
                }
                if (occupation[other] == 0.0) {
                    touched.push_back(other);
                }
                occupation[other] += mollifier_eval(f, eps, pts.pos[p] - x);
            }
            if (touched.size() < static_cast<std::size_t>(order)) {
                for (auto o : touched) {
                    occupation[o] = 0.0;
                }
                continue;
            }
            // Elementary symmetric polynomials of v_o = sigma_o * O_o.
            std::fill(e.begin(), e.end(), 0.0);
            e[0] = 1.0;
            for (auto o : touched) {
                double const v = system.charges[o] * occupation[o] * h;
                for (int d = order; d >= 1; --d) {
                    e[static_cast<std::size_t>(d)] += v * e[static_cast<std::size_t>(d - 1)];
                }
                occupation[o] = 0.0;
            }
            double const tuples = factorial * e[static_cast<std::size_t>(order)];
            for (std::size_t t = 0; t < phis.size(); ++t) {
                out[t] += sigma_j * weights[t] * tuples;
            }
        }
    }
    double const scale = h * std::pow(config.T, -0.5 * config.k);
    for (double& v : out) {
        v *= scale;
    }
    return out;
}

FunctionalSample rho_T(RhoConfig const& config, RandomStream& rng)
{
    config.validate();
    TimeGrid const grid = TimeGrid::with_step(config.T, config.step);
    Interval const q = query_support(config.t_grid, config.kappa);
    ParticleSystem const system = sample_visiting_system(
        config.alpha, Interval{q.lo - config.eps, q.hi + config.eps}, grid, config.T, rng);
    FunctionalSample sample;
    sample.t = config.t_grid;
    sample.config_digest = config.digest();
    sample.replica_id = rng.stream_id();
    sample.particles = system.size();
    if (system.size() < static_cast<std::size_t>(config.k)) {
        sample.too_few_particles = true;
        sample.values.assign(config.t_grid.size(), 0.0);
        return sample;
    }
    sample.values = rho_on_system(config, system, Mollifier(config.profile));
    return sample;
}

void FieldConfig::validate() const
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("field needs alpha in (0, 1)");
    }
    check_horizon(T, step);
    check_t_grid(t_grid);
    if (!(kappa >= 0.0 && kappa < 1.0)) {
        throw std::invalid_argument("field needs kappa in [0, 1)");
    }
}

std::string FieldConfig::digest() const
{
    Digest d;
    d.add("field").add(alpha).add(T).add(t_grid).add(kappa).add(step).add(static_cast<int>(profile));
    return d.hex();
}

FunctionalSample indicator_field(FieldConfig const& config, RandomStream& rng)
{
    config.validate();
    TimeGrid const grid = TimeGrid::with_step(config.T, config.step);
    ParticleSystem const system = sample_visiting_system(
        config.alpha, query_support(config.t_grid, config.kappa), grid, config.T, rng);
    auto const phis = indicator_family(config.t_grid, config.kappa, config.profile);
    FunctionalSample sample;
    sample.t = config.t_grid;
    sample.config_digest = config.digest();
    sample.replica_id = rng.stream_id();
    sample.particles = system.size();
    sample.values = occupation_field(system, phis, config.T);
    return sample;
}

}  // namespace hpl
