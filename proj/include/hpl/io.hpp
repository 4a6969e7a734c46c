#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "hpl/stats.hpp"
#include "hpl/wick.hpp"

namespace hpl {

/// Library version recorded in every metadata sidecar.
std::string version_string();

/// Ensemble as CSV with header `replica_id,t,value`, one line per
/// (replica, time) in replica-major order; t and value printed with 17
/// significant digits.
void write_ensemble_csv(std::filesystem::path const& path, Ensemble const& ensemble);
std::string ensemble_csv(Ensemble const& ensemble);

/// Inverse of write_ensemble_csv. Replica ids must be 0..n-1 in order and
/// every replica must carry the same time grid; throws std::runtime_error
/// otherwise.
Ensemble read_ensemble_csv(std::filesystem::path const& path);

/// Pretty-printed JSON followed by a newline.
void write_json(std::filesystem::path const& path, nlohmann::json const& value);
nlohmann::json read_json(std::filesystem::path const& path);

/// {lhs, rhs, se, z, replicas, seed} plus the detail entries.
nlohmann::json to_json(IdentityReport const& report);
/// {statistic, p_value, replicas, permutations, seed}
nlohmann::json to_json(TestReport const& report);
nlohmann::json to_json(CovEstimate const& estimate);
nlohmann::json to_json(Estimate const& estimate);

}  // namespace hpl
