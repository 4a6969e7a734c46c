#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

#include "config.hpp"
#include "hpl/functionals.hpp"
#include "hpl/hermite_oracle.hpp"
#include "hpl/io.hpp"
#include "hpl/parallel.hpp"
#include "hpl/stats.hpp"

namespace hpl::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

/// Child-stream tags: reference ensembles draw replica r from
/// replica_stream(seed, r).substream(reference_tag); the energy test draws
/// permutation p from RandomStream(seed, energy_stream).substream(p).
constexpr std::uint64_t reference_tag = 0x7265666572656e63ull;
constexpr std::uint64_t energy_stream = 0x656e65726779ull;

json number(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

Config load_config(Options const& options)
{
    Config config = options.config ? Config::load(*options.config) : Config{};
    for (auto const& assignment : options.sets) {
        auto const eq = assignment.find('=');
        if (eq == std::string::npos || assignment.find('.') > eq) {
            throw ConfigError({"--set expects section.key=value, got '" + assignment + "'"});
        }
        config.set(assignment.substr(0, eq), assignment.substr(eq + 1));
    }
    if (options.seed) {
        config.set("run.seed", std::to_string(*options.seed));
    }
    if (options.replicas) {
        config.set("run.replicas", std::to_string(*options.replicas));
    }
    if (options.threads) {
        config.set("run.threads", std::to_string(*options.threads));
    }
    if (options.out) {
        config.set("run.out", options.out->string());
    }
    return config;
}

struct Run
{
    std::string kind;
    std::uint64_t seed = 1;
    std::size_t replicas = 100;
    unsigned threads = 1;
    fs::path out;
    std::vector<double> t_grid;
};

Run read_run(Config& config, bool need_kind)
{
    Run run;
    run.kind = need_kind ? config.required("run.kind") : config.text("run.kind", "");
    std::string const seed = config.text("run.seed", "1");
    try {
        std::size_t used = 0;
        run.seed = std::stoull(seed, &used);
        if (used != seed.size() || seed.front() == '-') {
            throw std::invalid_argument(seed);
        }
    } catch (std::exception const&) {
        config.problem("run.seed: expected an unsigned 64-bit integer, got '" + seed + "'");
    }
    long const replicas = config.integer("run.replicas", 100);
    if (replicas < 1) {
        config.problem("run.replicas: must be at least 1");
    }
    run.replicas = static_cast<std::size_t>(std::max(1L, replicas));
    long const threads = config.integer("run.threads", 0, false);
    if (threads < 0) {
        config.problem("run.threads: must be non-negative");
    }
    run.threads = resolve_threads(static_cast<unsigned>(std::max(0L, threads)));
    run.out = config.text("run.out", "hpl-out", false);
    run.t_grid = config.numbers("run.t_grid", {0.25, 0.5, 1.0, 2.0});
    if (run.t_grid.empty()) {
        config.problem("run.t_grid: must not be empty");
    }
    for (std::size_t i = 0; i < run.t_grid.size(); ++i) {
        if (!(run.t_grid[i] >= 0.0)) {
            config.problem("run.t_grid: times must be non-negative");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (run.t_grid[i] == run.t_grid[j]) {
                config.problem("run.t_grid: duplicate time " + format_number(run.t_grid[i]));
            }
        }
    }
    return run;
}

MollifierProfile read_profile(Config& config, std::string const& key)
{
    std::string const name = config.text(key, "bump");
    if (name == "cosine") {
        return MollifierProfile::cosine;
    }
    if (name != "bump") {
        config.problem(key + ": expected bump or cosine, got '" + name + "'");
    }
    return MollifierProfile::bump;
}

/// Records a failed precondition instead of throwing; false when one failed.
template <class F>
bool validate_into(Config& config, std::string const& section, F&& validate)
{
    try {
        validate();
        return true;
    } catch (std::invalid_argument const& e) {
        config.problem(section + ": " + e.what());
        return false;
    }
}

/// One replica's output plus per-replica diagnostics.
struct Draw
{
    std::vector<double> values;
    double particles = nan;
    bool too_few = false;
    double imaginary = 0.0;
};

struct Plan
{
    std::string kind;
    std::function<Draw(RandomStream&)> sample;
    json info = json::object();
};

std::string section_for(std::string const& kind)
{
    if (kind == "partial-sum") {
        return "partial_sum";
    }
    return kind;
}

bool is_kind(std::string const& kind)
{
    return kind == "eta" || kind == "rho" || kind == "field" || kind == "fbm"
           || kind == "partial-sum" || kind == "spectral";
}

Plan plan_for(Config& config, std::string const& kind, std::vector<double> const& t_grid)
{
    Plan plan;
    plan.kind = kind;
    if (kind == "eta") {
        EtaConfig c;
        c.alpha = config.number("eta.alpha", c.alpha);
        c.beta = config.number("eta.beta", c.beta);
        c.T = config.number("eta.T", c.T);
        c.eps = config.number("eta.eps", c.eps);
        c.delta = config.number("eta.delta", c.delta);
        c.reach = config.number("eta.reach", c.reach);
        c.kappa = config.number("eta.kappa", c.kappa);
        c.step = config.number("eta.step", c.step);
        c.window_q = config.number("eta.window_q", c.window_q);
        c.profile = read_profile(config, "eta.profile");
        c.t_grid = t_grid;
        if (validate_into(config, "eta", [&] { c.validate(); })) {
            auto kernel = std::make_shared<PairKernel const>(eta_kernel(c));
            plan.info["kernel_radius"] = number(kernel->radius());
            plan.sample = [c, kernel](RandomStream& rng) {
                auto s = eta_T(c, *kernel, rng);
                return Draw{s.values, static_cast<double>(s.particles), s.too_few_particles, 0.0};
            };
        }
        plan.info["hurst"] = c.hurst();
    } else if (kind == "rho") {
        RhoConfig c;
        c.k = static_cast<int>(config.integer("rho.k", c.k));
        c.alpha = config.number("rho.alpha", c.alpha);
        c.eps = config.number("rho.eps", c.eps);
        c.T = config.number("rho.T", c.T);
        c.kappa = config.number("rho.kappa", c.kappa);
        c.step = config.number("rho.step", c.step);
        c.profile = read_profile(config, "rho.profile");
        c.t_grid = t_grid;
        validate_into(config, "rho", [&] { c.validate(); });
        plan.info["hurst"] = c.hurst();
        plan.sample = [c](RandomStream& rng) {
            auto s = rho_T(c, rng);
            return Draw{s.values, static_cast<double>(s.particles), s.too_few_particles, 0.0};
        };
    } else if (kind == "field") {
        FieldConfig c;
        c.alpha = config.number("field.alpha", c.alpha);
        c.T = config.number("field.T", c.T);
        c.kappa = config.number("field.kappa", c.kappa);
        c.step = config.number("field.step", c.step);
        c.profile = read_profile(config, "field.profile");
        c.t_grid = t_grid;
        validate_into(config, "field", [&] { c.validate(); });
        plan.info["hurst"] = c.hurst();
        plan.sample = [c](RandomStream& rng) {
            auto s = indicator_field(c, rng);
            return Draw{s.values, static_cast<double>(s.particles), false, 0.0};
        };
    } else if (kind == "fbm") {
        double const H = config.number("fbm.H", 0.75);
        if (!(H > 0.0 && H < 1.0)) {
            config.problem("fbm: H must lie in (0, 1)");
        }
        if (t_grid.size() > 4096) {
            config.problem("fbm: at most 4096 grid times");
        }
        plan.info["hurst"] = H;
        plan.sample = [H, t_grid](RandomStream& rng) {
            return Draw{fbm_sample(H, t_grid, rng)};
        };
    } else if (kind == "partial-sum") {
        OracleConfig c;
        c.k = static_cast<int>(config.integer("partial_sum.k", c.k));
        c.H = config.number("partial_sum.H", c.H);
        long const n = config.integer("partial_sum.n", static_cast<long>(c.n));
        if (n < 1) {
            config.problem("partial_sum.n: must be positive");
        }
        c.n = static_cast<std::size_t>(std::max(1L, n));
        c.t_grid = t_grid;
        validate_into(config, "partial_sum", [&] { c.validate(); });
        plan.info["hurst"] = c.H;
        plan.sample = [c](RandomStream& rng) { return Draw{hermite_partial_sum(c, rng)}; };
    } else if (kind == "spectral") {
        int const k = static_cast<int>(config.integer("spectral.k", 2));
        double const H = config.number("spectral.H", 0.75);
        std::vector<double> exponents;
        if (config.has("spectral.exponents")) {
            exponents = config.numbers("spectral.exponents", {});
        } else {
            validate_into(config, "spectral", [&] { exponents = symmetric_exponents(k, H); });
        }
        SpectralGrid grid;
        grid.omega = config.number("spectral.omega", grid.omega);
        long const bins = config.integer("spectral.bins", static_cast<long>(grid.bins));
        if (bins < 1) {
            config.problem("spectral.bins: must be positive");
        }
        grid.bins = static_cast<std::size_t>(std::max(1L, bins));
        grid.compensate_tail = config.flag("spectral.compensate_tail", grid.compensate_tail);
        std::string const diagonal = config.text("spectral.diagonal", "wick");
        if (diagonal == "exclude") {
            grid.diagonal = SpectralGrid::Diagonal::exclude;
        } else if (diagonal != "wick") {
            config.problem("spectral.diagonal: expected wick or exclude, got '" + diagonal + "'");
        }
        validate_into(config, "spectral", [&] {
            grid.validate();
            if (exponents.empty() || exponents.size() > 3) {
                throw std::invalid_argument("between 1 and 3 exponents are supported");
            }
            double sum = 0.0;
            for (double a : exponents) {
                if (!(a >= 0.0 && a < 1.0)) {
                    throw std::invalid_argument("exponents must lie in [0, 1)");
                }
                sum += a;
            }
            double const hurst = 1.0 - 0.5 * static_cast<double>(exponents.size()) + 0.5 * sum;
            if (!(hurst > 0.5 && hurst < 1.0)) {
                throw std::invalid_argument("exponents must give a Hurst index in (1/2, 1)");
            }
        });
        double sum = 0.0;
        for (double a : exponents) {
            sum += a;
        }
        plan.info["hurst"] = 1.0 - 0.5 * static_cast<double>(exponents.size()) + 0.5 * sum;
        plan.info["exponents"] = exponents;
        plan.sample = [exponents, t_grid, grid](RandomStream& rng) {
            auto s = spectral_hermite_sample(exponents, t_grid, grid, rng);
            double imaginary = 0.0;
            for (double v : s.imaginary) {
                imaginary = std::max(imaginary, std::abs(v));
            }
            return Draw{s.values, nan, false, imaginary};
        };
    } else {
        config.problem("run.kind: expected one of eta, rho, field, fbm, partial-sum, spectral, got '"
                       + kind + "'");
    }
    return plan;
}

struct Simulated
{
    Ensemble ensemble;
    json info;
};

Simulated simulate(Plan const& plan, std::vector<double> const& t_grid, std::uint64_t seed,
                   std::size_t replicas, unsigned threads, std::uint64_t tag)
{
    std::vector<Draw> draws(replicas);
    parallel_for(replicas, threads, [&](std::size_t r) {
        RandomStream rng = replica_stream(seed, r);
        if (tag != 0) {
            rng = rng.substream(tag);
        }
        draws[r] = plan.sample(rng);
    });
    Simulated out;
    out.ensemble.t = t_grid;
    out.ensemble.rows.reserve(replicas);
    double particles = 0.0;
    std::size_t too_few = 0;
    double imaginary = 0.0;
    for (auto& d : draws) {
        particles += d.particles;
        too_few += d.too_few ? 1 : 0;
        imaginary = std::max(imaginary, d.imaginary);
        out.ensemble.rows.push_back(std::move(d.values));
    }
    out.info = plan.info;
    if (std::isfinite(particles)) {
        out.info["mean_particles"] = particles / static_cast<double>(replicas);
    }
    if (plan.kind == "eta" || plan.kind == "rho") {
        out.info["too_few_particles"] = too_few;
    }
    if (plan.kind == "spectral") {
        out.info["max_abs_imaginary"] = imaginary;
    }
    return out;
}

json metadata(std::string const& command, Run const& run, std::string const& kind,
              std::size_t replicas, Config const& config, json const& info)
{
    return json{{"command", command},
                {"version", version_string()},
                {"kind", kind},
                {"seed", run.seed},
                {"replicas", replicas},
                {"config", config.effective()},
                {"info", info},
                {"files", {{"ensemble", "ensemble.csv"}}}};
}

void write_run(fs::path const& dir, Simulated const& sim, json const& meta)
{
    fs::create_directories(dir);
    write_ensemble_csv(dir / "ensemble.csv", sim.ensemble);
    write_json(dir / "metadata.json", meta);
}

struct VerifySpec
{
    std::optional<double> target_H;
    std::vector<std::pair<double, double>> pairs;
    double cov_rel_tol = 0.1;
    std::vector<double> hurst_times;
    std::optional<double> hurst_target;
    double hurst_tol = 0.1;
    std::string reference;
    long reference_replicas = 0;
    double energy_p_min = 0.01;
    long permutations = 999;
    std::optional<double> skew_time;
    double skew_z_min = 3.0;
};

std::vector<std::pair<double, double>> parse_pairs(Config& config, std::string const& key)
{
    std::string const text = config.text(key, "0.5:1");
    std::vector<std::pair<double, double>> out;
    std::stringstream items(text);
    std::string item;
    while (std::getline(items, item, ',')) {
        auto const colon = item.find(':');
        try {
            if (colon == std::string::npos) {
                throw std::invalid_argument(item);
            }
            out.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
        } catch (std::exception const&) {
            config.problem(key + ": expected s:t pairs, got '" + item + "'");
        }
    }
    return out;
}

VerifySpec read_verify(Config& config)
{
    VerifySpec spec;
    if (config.has("verify.target_H")) {
        spec.target_H = config.number("verify.target_H", 0.75);
        if (!(*spec.target_H > 0.0 && *spec.target_H < 1.0)) {
            config.problem("verify.target_H: must lie in (0, 1)");
        }
        spec.pairs = parse_pairs(config, "verify.pairs");
    }
    spec.cov_rel_tol = config.number("verify.cov_rel_tol", spec.cov_rel_tol);
    if (config.has("verify.hurst_times") || config.has("verify.hurst_target")) {
        spec.hurst_times = config.numbers("verify.hurst_times", {0.5, 1.0, 2.0});
        spec.hurst_target = config.number("verify.hurst_target", 0.75);
        spec.hurst_tol = config.number("verify.hurst_tol", spec.hurst_tol);
    }
    spec.reference = config.text("verify.reference", "");
    if (!spec.reference.empty()) {
        spec.reference_replicas = config.integer("verify.reference_replicas", 0);
        spec.energy_p_min = config.number("verify.energy_p_min", spec.energy_p_min);
        spec.permutations = config.integer("verify.permutations", spec.permutations);
        if (spec.permutations < 1) {
            config.problem("verify.permutations: must be positive");
        }
        if (spec.reference_replicas < 0) {
            config.problem("verify.reference_replicas: must be non-negative");
        }
    }
    if (config.has("verify.skew_time")) {
        spec.skew_time = config.number("verify.skew_time", 1.0);
        spec.skew_z_min = config.number("verify.skew_z_min", spec.skew_z_min);
    }
    if (!spec.target_H && !spec.hurst_target && spec.reference.empty() && !spec.skew_time) {
        config.problem("verify: no checks configured (set target_H, hurst_target, reference or "
                       "skew_time)");
    }
    return spec;
}

struct Check
{
    std::string name;
    double estimate = nan;
    double se = nan;
    double target = nan;
    double discrepancy = nan;
    double tolerance = nan;
    double p_value = nan;
    bool pass = false;
};

json to_json(Check const& c)
{
    json out{{"name", c.name},
             {"estimate", number(c.estimate)},
             {"se", number(c.se)},
             {"target", number(c.target)},
             {"discrepancy", number(c.discrepancy)},
             {"tolerance", number(c.tolerance)},
             {"pass", c.pass}};
    if (std::isfinite(c.p_value)) {
        out["p_value"] = c.p_value;
    }
    return out;
}

std::string pair_name(char const* prefix, double s, double t)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s(%g,%g)", prefix, s, t);
    return buf;
}

/// Evaluates every configured check; throws std::invalid_argument when the
/// ensemble cannot support one (missing grid time, too few replicas).
std::vector<Check> evaluate(VerifySpec const& spec, Ensemble const& ensemble,
                            Ensemble const* reference, std::uint64_t seed, unsigned threads,
                            json& energy_report)
{
    ensemble.validate();
    std::vector<Check> checks;
    if (spec.target_H) {
        double const H = *spec.target_H;
        for (auto const& [s, t] : spec.pairs) {
            Check c;
            c.name = pair_name("cov", s, t);
            Estimate const e = normalized_covariance(ensemble, s, t, 1.0);
            c.estimate = e.value;
            c.se = e.se;
            c.target = target_covariance(H, s, t) / target_covariance(H, 1.0, 1.0);
            c.discrepancy = c.estimate / c.target - 1.0;
            c.tolerance = spec.cov_rel_tol;
            c.pass = std::abs(c.discrepancy) <= c.tolerance;
            checks.push_back(c);
        }
    }
    if (spec.hurst_target) {
        Check c;
        c.name = "hurst";
        Estimate const e = hurst_from_variance(ensemble, spec.hurst_times);
        c.estimate = e.value;
        c.se = e.se;
        c.target = *spec.hurst_target;
        c.discrepancy = c.estimate - c.target;
        c.tolerance = spec.hurst_tol;
        c.pass = std::abs(c.discrepancy) <= c.tolerance;
        checks.push_back(c);
    }
    if (reference != nullptr) {
        if (reference->t != ensemble.t) {
            throw std::invalid_argument("reference ensemble has a different time grid");
        }
        TestReport const r =
            energy_distance_test(normalize(ensemble), normalize(*reference),
                                 static_cast<std::size_t>(spec.permutations),
                                 RandomStream(seed, energy_stream), threads);
        energy_report = hpl::to_json(r);
        Check c;
        c.name = "energy";
        c.estimate = r.statistic;
        c.target = 0.0;
        c.discrepancy = r.statistic;
        c.tolerance = spec.energy_p_min;
        c.p_value = r.p_value;
        c.pass = r.p_value > spec.energy_p_min;
        checks.push_back(c);
    }
    if (spec.skew_time) {
        Check c;
        char buf[64];
        std::snprintf(buf, sizeof buf, "skew(%g)", *spec.skew_time);
        c.name = buf;
        auto const column = ensemble.column(ensemble.index_of(*spec.skew_time));
        Estimate const e = skewness(column);
        c.estimate = e.value;
        c.se = e.se;
        c.target = 0.0;
        c.discrepancy = e.se > 0.0 ? e.value / e.se : nan;
        c.tolerance = spec.skew_z_min;
        c.pass = std::isfinite(c.discrepancy) && c.discrepancy >= spec.skew_z_min;
        checks.push_back(c);
    }
    return checks;
}

bool all_pass(std::vector<Check> const& checks)
{
    return std::all_of(checks.begin(), checks.end(), [](Check const& c) { return c.pass; });
}

json checks_json(std::vector<Check> const& checks)
{
    json out = json::array();
    for (auto const& c : checks) {
        out.push_back(to_json(c));
    }
    return out;
}

void print_checks(std::vector<Check> const& checks, std::string const& prefix = "")
{
    for (auto const& c : checks) {
        std::printf("%s%-14s estimate %-12.6g se %-10.4g target %-10.6g discrepancy %-11.4g %s\n",
                    prefix.c_str(), c.name.c_str(), c.estimate, c.se, c.target, c.discrepancy,
                    c.pass ? "PASS" : "FAIL");
    }
}

/// Reference ensemble named by verify.reference: a generator kind (simulated
/// from its config section) or a CSV path.
struct ReferenceSource
{
    std::optional<Plan> plan;
    fs::path path;
};

ReferenceSource read_reference(Config& config, VerifySpec const& spec,
                               std::vector<double> const& t_grid)
{
    ReferenceSource source;
    if (spec.reference.empty()) {
        return source;
    }
    if (is_kind(spec.reference)) {
        source.plan = plan_for(config, spec.reference, t_grid);
    } else {
        source.path = spec.reference;
    }
    return source;
}

std::optional<Ensemble> load_reference(ReferenceSource const& source, Run const& run,
                                       std::size_t replicas, fs::path const& dir,
                                       Config const& config)
{
    if (source.plan) {
        Simulated sim = simulate(*source.plan, run.t_grid, run.seed, replicas, run.threads,
                                 reference_tag);
        json meta = metadata("reference", run, source.plan->kind, replicas, config, sim.info);
        meta["stream_tag"] = reference_tag;
        write_run(dir, sim, meta);
        return std::move(sim.ensemble);
    }
    if (!source.path.empty()) {
        return read_ensemble_csv(source.path);
    }
    return std::nullopt;
}

std::size_t reference_replicas(VerifySpec const& spec, std::size_t fallback)
{
    return spec.reference_replicas > 0 ? static_cast<std::size_t>(spec.reference_replicas)
                                       : fallback;
}

}  // namespace

int cmd_simulate(Options const& options)
{
    Config config = load_config(options);
    Run const run = read_run(config, true);
    Plan const plan = plan_for(config, run.kind, run.t_grid);
    config.check();

    Simulated const sim = simulate(plan, run.t_grid, run.seed, run.replicas, run.threads, 0);
    write_run(run.out, sim, metadata("simulate", run, run.kind, run.replicas, config, sim.info));
    std::printf("simulate: %zu replicas x %zu times of %s -> %s\n", run.replicas,
                run.t_grid.size(), run.kind.c_str(), (run.out / "ensemble.csv").c_str());
    return exit_ok;
}

int cmd_verify(Options const& options)
{
    Config config = load_config(options);
    Run const run = read_run(config, false);
    std::string const ensemble_path = config.required("verify.ensemble");
    VerifySpec const spec = read_verify(config);
    if (!ensemble_path.empty() && !fs::exists(ensemble_path)) {
        config.problem("verify.ensemble: file not found: " + ensemble_path);
    }
    if (!spec.reference.empty() && !is_kind(spec.reference) && !fs::exists(spec.reference)) {
        config.problem("verify.reference: file not found: " + spec.reference);
    }
    Ensemble const ensemble =
        fs::exists(ensemble_path) ? read_ensemble_csv(ensemble_path) : Ensemble{};
    ReferenceSource const source = read_reference(config, spec, ensemble.t);
    config.check();

    Run ref_run = run;
    ref_run.t_grid = ensemble.t;
    auto const reference = load_reference(source, ref_run,
                                          reference_replicas(spec, ensemble.replicas()),
                                          run.out / "reference", config);
    json energy = nullptr;
    auto const checks =
        evaluate(spec, ensemble, reference ? &*reference : nullptr, run.seed, run.threads, energy);
    bool const pass = all_pass(checks);
    json report{{"command", "verify"},
                {"version", version_string()},
                {"ensemble", ensemble_path},
                {"replicas", ensemble.replicas()},
                {"seed", run.seed},
                {"config", config.effective()},
                {"checks", checks_json(checks)},
                {"energy", energy},
                {"pass", pass}};
    fs::create_directories(run.out);
    write_json(run.out / "verify.json", report);
    print_checks(checks);
    std::printf("verify: %s\n", pass ? "PASS" : "FAIL");
    return pass ? exit_ok : exit_tolerance;
}

int cmd_convergence_study(Options const& options)
{
    Config base = load_config(options);
    Run const run = read_run(base, true);
    std::string const parameter = base.text("study.parameter", "T");
    std::vector<double> const ladder = base.numbers("study.ladder", {});
    bool const require_monotone = base.flag("study.require_monotone", false);
    if (ladder.empty()) {
        base.problem("study.ladder: at least one rung is required");
    }
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (ladder[i] == ladder[j]) {
                base.problem("study.ladder: duplicate rung " + format_number(ladder[i]));
            }
        }
    }
    VerifySpec const spec = read_verify(base);
    if (!spec.reference.empty() && !is_kind(spec.reference) && !fs::exists(spec.reference)) {
        base.problem("verify.reference: file not found: " + spec.reference);
    }
    ReferenceSource const source = read_reference(base, spec, run.t_grid);
    std::string const key = section_for(run.kind) + "." + parameter;

    std::vector<Config> rung_configs;
    std::vector<Plan> plans;
    std::vector<std::string> problems;
    try {
        base.check();
    } catch (ConfigError const& e) {
        problems = e.problems;
    }
    for (double value : ladder) {
        Config rung = base;
        rung.set(key, format_number(value));
        plans.push_back(plan_for(rung, run.kind, run.t_grid));
        try {
            rung.check();
        } catch (ConfigError const& e) {
            for (auto const& p : e.problems) {
                if (std::find(problems.begin(), problems.end(), p) == problems.end()) {
                    problems.push_back("rung " + format_number(value) + ": " + p);
                }
            }
        }
        rung_configs.push_back(std::move(rung));
    }
    if (!problems.empty()) {
        throw ConfigError(problems);
    }

    auto const reference = load_reference(source, run, reference_replicas(spec, run.replicas),
                                          run.out / "reference", base);
    json rungs = json::array();
    std::vector<std::vector<Check>> results;
    std::string csv = "rung,value,check,estimate,se,target,discrepancy,pass\n";
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        fs::path const dir = run.out / ("rung_" + std::to_string(i));
        Simulated const sim =
            simulate(plans[i], run.t_grid, run.seed, run.replicas, run.threads, 0);
        write_run(dir, sim,
                  metadata("simulate", run, run.kind, run.replicas, rung_configs[i], sim.info));
        json energy = nullptr;
        auto const checks = evaluate(spec, sim.ensemble, reference ? &*reference : nullptr,
                                     run.seed, run.threads, energy);
        bool const pass = all_pass(checks);
        write_json(dir / "verify.json", json{{"command", "verify"},
                                             {"version", version_string()},
                                             {"ensemble", (dir / "ensemble.csv").string()},
                                             {"replicas", run.replicas},
                                             {"seed", run.seed},
                                             {"config", rung_configs[i].effective()},
                                             {"checks", checks_json(checks)},
                                             {"energy", energy},
                                             {"pass", pass}});
        rungs.push_back(json{{"value", ladder[i]},
                             {"dir", dir.filename().string()},
                             {"checks", checks_json(checks)},
                             {"pass", pass}});
        for (auto const& c : checks) {
            csv += std::to_string(i) + "," + format_number(ladder[i]) + "," + c.name + ","
                   + format_number(c.estimate) + "," + format_number(c.se) + ","
                   + format_number(c.target) + "," + format_number(c.discrepancy) + ","
                   + (c.pass ? "true" : "false") + "\n";
        }
        std::printf("rung %zu (%s = %g)\n", i, key.c_str(), ladder[i]);
        print_checks(checks, "  ");
        results.push_back(checks);
    }

    json trends = json::array();
    bool monotone_all = true;
    for (std::size_t c = 0; c < results.front().size(); ++c) {
        json discrepancies = json::array();
        bool monotone = true;
        for (std::size_t i = 0; i < results.size(); ++i) {
            double const d = std::abs(results[i][c].discrepancy);
            discrepancies.push_back(number(results[i][c].discrepancy));
            if (i > 0 && !(d <= std::abs(results[i - 1][c].discrepancy))) {
                monotone = false;
            }
        }
        monotone_all = monotone_all && monotone;
        trends.push_back(json{{"check", results.front()[c].name},
                              {"discrepancies", discrepancies},
                              {"monotone", monotone}});
        std::printf("trend %-14s monotone=%s\n", results.front()[c].name.c_str(),
                    monotone ? "true" : "false");
    }
    bool const final_pass = all_pass(results.back());
    bool const pass = final_pass && (!require_monotone || monotone_all);
    write_json(run.out / "summary.json", json{{"command", "convergence-study"},
                                              {"version", version_string()},
                                              {"kind", run.kind},
                                              {"parameter", key},
                                              {"ladder", ladder},
                                              {"seed", run.seed},
                                              {"replicas", run.replicas},
                                              {"rungs", rungs},
                                              {"trends", trends},
                                              {"require_monotone", require_monotone},
                                              {"final_pass", final_pass},
                                              {"pass", pass}});
    {
        std::ofstream file(run.out / "summary.csv", std::ios::binary);
        file << csv;
    }
    std::printf("convergence-study: %s\n", pass ? "PASS" : "FAIL");
    return pass ? exit_ok : exit_tolerance;
}

int cmd_report(Options const& options)
{
    Config config = load_config(options);
    Run const run = read_run(config, false);
    config.check();
    fs::path const dir = run.out;
    std::string csv = "source,value,check,estimate,se,target,discrepancy,pass\n";
    auto add_checks = [&](std::string const& source, json const& value, json const& checks) {
        for (auto const& c : checks) {
            auto text = [](json const& v) {
                return v.is_null() ? std::string("nan") : format_number(v.get<double>());
            };
            csv += source + "," + (value.is_null() ? std::string("") : text(value)) + ","
                   + c["name"].get<std::string>() + "," + text(c["estimate"]) + ","
                   + text(c["se"]) + "," + text(c["target"]) + "," + text(c["discrepancy"])
                   + "," + (c["pass"].get<bool>() ? "true" : "false") + "\n";
            std::printf("%-10s %-10s %-14s estimate %-12s discrepancy %-12s %s\n", source.c_str(),
                        value.is_null() ? "" : text(value).substr(0, 10).c_str(),
                        c["name"].get<std::string>().c_str(),
                        text(c["estimate"]).substr(0, 12).c_str(),
                        text(c["discrepancy"]).substr(0, 12).c_str(),
                        c["pass"].get<bool>() ? "PASS" : "FAIL");
        }
    };
    if (fs::exists(dir / "summary.json")) {
        json const summary = read_json(dir / "summary.json");
        for (auto const& rung : summary["rungs"]) {
            add_checks(rung["dir"].get<std::string>(), rung["value"], rung["checks"]);
        }
        for (auto const& trend : summary["trends"]) {
            std::printf("trend %-14s monotone=%s\n", trend["check"].get<std::string>().c_str(),
                        trend["monotone"].get<bool>() ? "true" : "false");
        }
    } else if (fs::exists(dir / "verify.json")) {
        json const verify = read_json(dir / "verify.json");
        add_checks("verify", nullptr, verify["checks"]);
    } else if (fs::exists(dir / "ensemble.csv")) {
        Ensemble const ensemble = read_ensemble_csv(dir / "ensemble.csv");
        CovEstimate const cov = estimate_covariance(ensemble);
        csv = "s,t,covariance,se\n";
        for (std::size_t i = 0; i < cov.t.size(); ++i) {
            for (std::size_t j = 0; j < cov.t.size(); ++j) {
                csv += format_number(cov.t[i]) + "," + format_number(cov.t[j]) + ","
                       + format_number(cov.estimate[i][j]) + "," + format_number(cov.se[i][j])
                       + "\n";
            }
            std::printf("Var(t=%g) = %.6g +- %.3g\n", cov.t[i], cov.estimate[i][i], cov.se[i][i]);
        }
    } else {
        throw ConfigError({"report: nothing to report in " + dir.string()
                           + " (expected summary.json, verify.json or ensemble.csv)"});
    }
    std::ofstream file(dir / "report.csv", std::ios::binary);
    file << csv;
    std::printf("report: %s\n", (dir / "report.csv").c_str());
    return exit_ok;
}

}  // namespace hpl::cli
