#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

namespace hpl::cli {

/// Raised for any invalid configuration; carries every violation found.
struct ConfigError : std::runtime_error
{
    explicit ConfigError(std::vector<std::string> problems);
    std::vector<std::string> problems;
};

/// Sectioned key/value configuration (INI file, or the "config" object of a
/// metadata sidecar). Keys are "section.name". Every value read is recorded
/// with its effective (default-applied) text so that the sidecar reproduces
/// the run. Malformed values are collected rather than thrown; call check()
/// before computing anything.
class Config
{
  public:
    Config() = default;
    static Config load(std::filesystem::path const& path);
    static Config from_json(nlohmann::json const& sections);

    /// "section.name=value" override (flags and --set).
    void set(std::string const& key, std::string const& value);
    bool has(std::string const& key) const;

    double number(std::string const& key, double fallback);
    /// `record = false` keeps execution-only settings (thread count, output
    /// directory) out of the effective configuration.
    long integer(std::string const& key, long fallback, bool record = true);
    std::string text(std::string const& key, std::string const& fallback, bool record = true);
    bool flag(std::string const& key, bool fallback);
    std::vector<double> numbers(std::string const& key, std::vector<double> const& fallback);
    /// Required value; records a problem when absent.
    std::string required(std::string const& key);

    void problem(std::string message) { problems_.push_back(std::move(message)); }
    /// Throws ConfigError listing malformed values, unknown keys and recorded
    /// problems.
    void check() const;

    /// Effective configuration, one object per section, values as text.
    nlohmann::json effective() const;

  private:
    std::string raw(std::string const& key) const;
    void record(std::string const& key, std::string const& value);

    boost::property_tree::ptree source_;
    boost::property_tree::ptree effective_;
    std::vector<std::string> problems_;
};

/// Text form used for recorded doubles (17 significant digits).
std::string format_number(double v);
std::string format_numbers(std::vector<double> const& v);

}  // namespace hpl::cli
