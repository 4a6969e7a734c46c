#include "hpl/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hpl {

namespace {

void append_number(std::string& out, double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

/// Non-finite values have no JSON literal; they are written as null.
nlohmann::json number(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

std::string version_string()
{
    return HPL_VERSION;
}

std::string ensemble_csv(Ensemble const& ensemble)
{
    std::string out = "replica_id,t,value\n";
    out.reserve(out.size() + ensemble.replicas() * ensemble.times() * 48);
    for (std::size_t r = 0; r < ensemble.replicas(); ++r) {
        for (std::size_t i = 0; i < ensemble.times(); ++i) {
            out += std::to_string(r);
            out += ',';
            append_number(out, ensemble.t[i]);
            out += ',';
            append_number(out, ensemble.rows[r][i]);
            out += '\n';
        }
    }
    return out;
}

void write_ensemble_csv(std::filesystem::path const& path, Ensemble const& ensemble)
{
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    file << ensemble_csv(ensemble);
    if (!file) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

Ensemble read_ensemble_csv(std::filesystem::path const& path)
{
    std::ifstream file(path);
    if (!file) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(file, line) || line != "replica_id,t,value") {
        throw std::runtime_error(path.string() + ": expected header replica_id,t,value");
    }
    Ensemble ensemble;
    std::vector<double> times;
    std::vector<double> values;
    long current = -1;
    std::size_t line_no = 1;
    auto flush = [&] {
        if (current < 0) {
            return;
        }
        if (ensemble.rows.empty()) {
            ensemble.t = times;
        } else if (times != ensemble.t) {
            throw std::runtime_error(path.string() + ": replica " + std::to_string(current)
                                     + " has a different time grid");
        }
        ensemble.rows.push_back(values);
        times.clear();
        values.clear();
    };
    while (std::getline(file, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        std::string id_text;
        std::string t_text;
        std::string value_text;
        if (!std::getline(fields, id_text, ',') || !std::getline(fields, t_text, ',')
            || !std::getline(fields, value_text)) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no)
                                     + ": expected three columns");
        }
        long id = 0;
        double t = 0.0;
        double value = 0.0;
        try {
            id = std::stol(id_text);
            t = std::stod(t_text);
            value = std::stod(value_text);
        } catch (std::exception const&) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no)
                                     + ": malformed number");
        }
        if (id != current) {
            if (id != current + 1) {
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no)
                                         + ": replica ids must be consecutive from 0");
            }
            flush();
            current = id;
        }
        times.push_back(t);
        values.push_back(value);
    }
    flush();
    if (ensemble.rows.empty()) {
        throw std::runtime_error(path.string() + ": no rows");
    }
    return ensemble;
}

void write_json(std::filesystem::path const& path, nlohmann::json const& value)
{
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    file << value.dump(2) << '\n';
}

nlohmann::json read_json(std::filesystem::path const& path)
{
    std::ifstream file(path);
    if (!file) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return nlohmann::json::parse(file);
}

nlohmann::json to_json(IdentityReport const& report)
{
    nlohmann::json out{{"lhs", number(report.lhs)},
                       {"rhs", number(report.rhs)},
                       {"se", number(report.se)},
                       {"z", number(report.z)},
                       {"replicas", report.replicas},
                       {"seed", report.seed}};
    if (!report.details.empty()) {
        nlohmann::json details = nlohmann::json::object();
        for (auto const& [name, value] : report.details) {
            details[name] = number(value);
        }
        out["details"] = details;
    }
    return out;
}

nlohmann::json to_json(TestReport const& report)
{
    return {{"statistic", number(report.statistic)},
            {"p_value", number(report.p_value)},
            {"replicas", report.replicas},
            {"permutations", report.permutations},
            {"seed", report.seed}};
}

nlohmann::json to_json(CovEstimate const& estimate)
{
    nlohmann::json est = nlohmann::json::array();
    nlohmann::json se = nlohmann::json::array();
    for (std::size_t i = 0; i < estimate.t.size(); ++i) {
        nlohmann::json est_row = nlohmann::json::array();
        nlohmann::json se_row = nlohmann::json::array();
        for (std::size_t j = 0; j < estimate.t.size(); ++j) {
            est_row.push_back(number(estimate.estimate[i][j]));
            se_row.push_back(number(estimate.se[i][j]));
        }
        est.push_back(est_row);
        se.push_back(se_row);
    }
    return {{"t", estimate.t}, {"estimate", est}, {"se", se}, {"replicas", estimate.replicas}};
}

nlohmann::json to_json(Estimate const& estimate)
{
    return {{"value", number(estimate.value)}, {"se", number(estimate.se)}};
}

}  // namespace hpl
