#include "config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "hpl/io.hpp"

namespace hpl::cli {

namespace {

namespace pt = boost::property_tree;

/// Every accepted section and key.
std::map<std::string, std::set<std::string>> const& schema()
{
    static std::map<std::string, std::set<std::string>> const keys{
        {"run", {"kind", "seed", "replicas", "threads", "out", "t_grid"}},
        {"eta", {"alpha", "beta", "T", "eps", "delta", "reach", "kappa", "step", "window_q", "profile"}},
        {"rho", {"k", "alpha", "eps", "T", "kappa", "step", "profile"}},
        {"field", {"alpha", "T", "kappa", "step", "profile"}},
        {"fbm", {"H"}},
        {"partial_sum", {"k", "H", "n"}},
        {"spectral",
         {"k", "H", "exponents", "omega", "bins", "compensate_tail", "diagonal"}},
        {"verify",
         {"ensemble", "target_H", "pairs", "cov_rel_tol", "hurst_times", "hurst_target",
          "hurst_tol", "reference", "reference_replicas", "energy_p_min", "permutations",
          "skew_time", "skew_z_min"}},
        {"study", {"parameter", "ladder", "require_monotone"}},
    };
    return keys;
}

std::string trim(std::string s)
{
    auto const first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    auto const last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool parse_double(std::string const& text, double& out)
{
    std::string const s = trim(text);
    if (s.empty()) {
        return false;
    }
    char* end = nullptr;
    errno = 0;
    out = std::strtod(s.c_str(), &end);
    return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems_)
    : std::runtime_error(problems_.empty() ? "invalid configuration" : problems_.front()),
      problems(std::move(problems_))
{
}

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_numbers(std::vector<double> const& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? "," : "") + format_number(v[i]);
    }
    return out;
}

Config Config::load(std::filesystem::path const& path)
{
    if (!std::filesystem::exists(path)) {
        throw ConfigError({"config file not found: " + path.string()});
    }
    if (path.extension() == ".json") {
        auto const doc = read_json(path);
        if (!doc.contains("config") || !doc["config"].is_object()) {
            throw ConfigError({path.string() + ": metadata has no config object"});
        }
        return from_json(doc["config"]);
    }
    Config config;
    try {
        pt::read_ini(path.string(), config.source_);
    } catch (pt::ini_parser_error const& e) {
        throw ConfigError({e.what()});
    }
    return config;
}

Config Config::from_json(nlohmann::json const& sections)
{
    Config config;
    for (auto const& [section, body] : sections.items()) {
        if (!body.is_object()) {
            throw ConfigError({"config section " + section + " must be an object"});
        }
        for (auto const& [name, value] : body.items()) {
            config.set(section + "." + name,
                       value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    return config;
}

void Config::set(std::string const& key, std::string const& value)
{
    source_.put(pt::ptree::path_type(key, '.'), trim(value));
}

bool Config::has(std::string const& key) const
{
    return source_.get_optional<std::string>(pt::ptree::path_type(key, '.')).has_value();
}

std::string Config::raw(std::string const& key) const
{
    return trim(source_.get<std::string>(pt::ptree::path_type(key, '.')));
}

void Config::record(std::string const& key, std::string const& value)
{
    effective_.put(pt::ptree::path_type(key, '.'), value);
}

double Config::number(std::string const& key, double fallback)
{
    double value = fallback;
    if (has(key) && !parse_double(raw(key), value)) {
        problem(key + ": expected a finite number, got '" + raw(key) + "'");
        value = fallback;
    }
    record(key, format_number(value));
    return value;
}

long Config::integer(std::string const& key, long fallback, bool record_value)
{
    long value = fallback;
    if (has(key)) {
        std::string const s = raw(key);
        char* end = nullptr;
        errno = 0;
        long const parsed = std::strtol(s.c_str(), &end, 10);
        if (s.empty() || errno != 0 || end != s.c_str() + s.size()) {
            problem(key + ": expected an integer, got '" + s + "'");
        } else {
            value = parsed;
        }
    }
    if (record_value) {
        record(key, std::to_string(value));
    }
    return value;
}

std::string Config::text(std::string const& key, std::string const& fallback, bool record_value)
{
    std::string const value = has(key) ? raw(key) : fallback;
    if (record_value) {
        record(key, value);
    }
    return value;
}

bool Config::flag(std::string const& key, bool fallback)
{
    bool value = fallback;
    if (has(key)) {
        std::string const s = raw(key);
        if (s == "true" || s == "1" || s == "yes") {
            value = true;
        } else if (s == "false" || s == "0" || s == "no") {
            value = false;
        } else {
            problem(key + ": expected true or false, got '" + s + "'");
        }
    }
    record(key, value ? "true" : "false");
    return value;
}

std::vector<double> Config::numbers(std::string const& key, std::vector<double> const& fallback)
{
    std::vector<double> values = fallback;
    if (has(key)) {
        values.clear();
        std::string s = raw(key);
        if (s.size() >= 2 && s.front() == '[' && s.back() == ']') {
            s = s.substr(1, s.size() - 2);
        }
        std::stringstream items(s);
        std::string item;
        while (std::getline(items, item, ',')) {
            double v = 0.0;
            if (trim(item).empty()) {
                continue;
            }
            if (!parse_double(item, v)) {
                problem(key + ": '" + trim(item) + "' is not a finite number");
                continue;
            }
            values.push_back(v);
        }
    }
    record(key, format_numbers(values));
    return values;
}

std::string Config::required(std::string const& key)
{
    if (!has(key)) {
        problem(key + ": required");
        return "";
    }
    return text(key, "");
}

void Config::check() const
{
    std::vector<std::string> all;
    for (auto const& [section, body] : source_) {
        auto const it = schema().find(section);
        if (it == schema().end()) {
            all.push_back("unknown section [" + section + "]");
            continue;
        }
        for (auto const& [name, value] : body) {
            if (!it->second.contains(name)) {
                all.push_back("unknown key " + section + "." + name);
            }
        }
    }
    all.insert(all.end(), problems_.begin(), problems_.end());
    if (!all.empty()) {
        throw ConfigError(all);
    }
}

nlohmann::json Config::effective() const
{
    nlohmann::json out = nlohmann::json::object();
    for (auto const& [section, body] : effective_) {
        nlohmann::json values = nlohmann::json::object();
        for (auto const& [name, value] : body) {
            values[name] = value.data();
        }
        out[section] = values;
    }
    return out;
}

}  // namespace hpl::cli
