#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"

namespace {

void add_common(CLI::App* command, hpl::cli::Options& options)
{
    command->add_option("--config", options.config, "INI config file or a run's metadata.json");
    command->add_option("--seed", options.seed, "master seed");
    command->add_option("--replicas", options.replicas, "replica count");
    command->add_option("--threads", options.threads,
                        "worker threads (default: HPL_THREADS, else 1)");
    command->add_option("--out", options.out, "output directory");
    command->add_option("--set", options.sets, "override one value: section.key=value");
}

}  // namespace

int main(int argc, char** argv)
{
    using namespace hpl::cli;
    CLI::App app{"Charged stable particle functionals and Hermite-process oracles"};
    app.require_subcommand(1);
    Options options;
    int (*handler)(Options const&) = nullptr;
    struct Entry
    {
        char const* name;
        char const* help;
        int (*fn)(Options const&);
    };
    Entry const entries[] = {
        {"simulate", "write an ensemble CSV and metadata sidecar", cmd_simulate},
        {"verify", "covariance, Hurst, skewness and energy-distance checks", cmd_verify},
        {"convergence-study", "simulate and verify along a parameter ladder",
         cmd_convergence_study},
        {"report", "tabulate a run, verify or study directory as CSV", cmd_report},
    };
    for (auto const& entry : entries) {
        auto* command = app.add_subcommand(entry.name, entry.help);
        add_common(command, options);
        command->callback([&handler, fn = entry.fn] { handler = fn; });
    }
    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int const code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }
    try {
        return handler(options);
    } catch (ConfigError const& e) {
        for (auto const& problem : e.problems) {
            std::fprintf(stderr, "config error: %s\n", problem.c_str());
        }
        return exit_config;
    } catch (std::exception const& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_config;
    }
}
