#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hpl::cli {

/// Exit codes of every command.
enum Exit : int
{
    exit_ok = 0,
    exit_tolerance = 1,
    exit_config = 2,
};

/// Command-line overrides; each takes precedence over the config file.
struct Options
{
    std::optional<std::filesystem::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<long> replicas;
    std::optional<long> threads;
    std::optional<std::filesystem::path> out;
    /// "section.key=value" assignments.
    std::vector<std::string> sets;
};

int cmd_simulate(Options const& options);
int cmd_verify(Options const& options);
int cmd_convergence_study(Options const& options);
int cmd_report(Options const& options);

}  // namespace hpl::cli
