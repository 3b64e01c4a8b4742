#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "ttergodic/dist/distributions.hpp"
#include "ttergodic/ergodic/engine.hpp"
#include "ttergodic/fourier/fourier.hpp"
#include "ttergodic/sim/pose.hpp"
#include "ttergodic/sim/sim.hpp"

namespace ttergodic::cli {

using json = nlohmann::json;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised for anything wrong with the configuration or the command line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Defaults for every section. User files are merged over this, so the merged
/// object is also the fully resolved configuration written to the manifest.
const json& default_config();

struct LoadedConfig {
  json resolved;
  std::filesystem::path source;
  std::uint64_t seed = 0;
};

/// Reads a config file (or a manifest written by a previous run, whose
/// resolved config and seed are reused). Unknown keys are an error. The seed
/// precedence is --seed, then the file, then the default.
LoadedConfig load_config(const std::optional<std::filesystem::path>& path,
                         std::optional<std::uint64_t> seed_override);

/// Relative paths in a config are taken relative to the config file.
std::filesystem::path resolve_path(const LoadedConfig& cfg, const std::string& p);

dist::ReferenceDistribution parse_distribution(const LoadedConfig& cfg, const json& j);
fourier::BasisConfig parse_basis(const json& j, std::size_t d);
fourier::PipelineOptions parse_pipeline(const json& j, std::uint64_t seed);
ergodic::ErgodicConfig parse_explore(const json& j, const fourier::BasisConfig& basis,
                                     std::uint64_t seed);
sim::SuiteOptions parse_suite(const json& j, std::uint64_t seed);
sim::BenchOptions parse_bench(const json& j, std::uint64_t seed);
sim::SyntheticPoseOptions parse_synthetic_poses(const json& j, std::uint64_t seed);

}  // namespace ttergodic::cli
