#include "config.hpp"

#include <algorithm>
#include <fstream>

#include "ttergodic/errors.hpp"

namespace ttergodic::cli {

namespace {

const char* kDefaults = R"({
  "seed": 2021,
  "distribution": {"type": "gaussian", "mean": [0.5, 0.5], "variance": 0.015},
  "basis": {"K": 10, "N": 10, "L": 1.0, "half_period": true},
  "pipeline": {"quadrature": "midpoint", "cross_eps": 0.01, "round_eps": 0.01,
               "lambda_eps": 0.01, "lambda_rank": 2},
  "explore": {"T": 100.0, "dt": 0.01, "u_max": 0.1, "x0": null, "w_rank_cap": 0, "w_rank_headroom": 0,
              "metric_interval": 10, "histogram_bins": 30},
  "compare": {"d": 2, "n_gmms": 10, "trials": 10, "components": 6, "variance": 0.01,
              "volume_fraction": 0.005, "time_limit": 1000.0, "u_max": 0.1, "dt": 0.01,
              "K": 10, "N": 10, "workers": 0,
              "strategies": ["ergodic", "sampling", "spiral", "gmm_spiral"],
              "cumulative_attempts": 50, "cumulative_gmm": 0, "cumulative_trial": 0},
  "bench": {"d_list": [2, 3, 4, 5, 6, 7, 8, 9, 10], "K": 5, "N": 10, "variance": 0.015,
            "steps": 1000, "warmup": 100, "repetitions": 5, "dense_max_d": 5},
  "pose": {"dataset": null, "gmm": null, "pad": 0.1, "K": 10, "N": 10, "steps": 10000,
           "dt": 0.01, "u_max": 0.1, "w_rank_cap": 0, "w_rank_headroom": 99,
           "synthetic": {"components": 8, "samples_per_component": 60,
                         "orientation_spread": 0.6, "position_std": 0.04,
                         "orientation_std": 0.06}}
})";

// Every key in `user` must exist in `ref`. The distribution block depends on
// its type and is checked by parse_distribution.
void check_keys(const json& user, const json& ref, const std::string& where) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!ref.contains(it.key())) throw ConfigError("unknown config key '" + path + "'");
    if (it.key() == "distribution") continue;
    if (it->is_object() && ref[it.key()].is_object()) check_keys(*it, ref[it.key()], path);
  }
}

template <class T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing config key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

Vector to_vector(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

const json& default_config() {
  static const json d = json::parse(kDefaults);
  return d;
}

LoadedConfig load_config(const std::optional<std::filesystem::path>& path,
                         std::optional<std::uint64_t> seed_override) {
  LoadedConfig out;
  out.resolved = default_config();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file " + path->string());
    json user;
    try {
      user = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
      throw ConfigError(path->string() + ": " + e.what());
    }
    if (!user.is_object()) throw ConfigError(path->string() + ": top level must be an object");
    if (user.contains("resolved_config") && user.contains("tool")) {
      // a manifest from an earlier run
      out.source = user.value("config_path", std::string());
      user = user["resolved_config"];
    } else {
      out.source = *path;
    }
    check_keys(user, default_config(), "");
    if (user.contains("distribution")) out.resolved["distribution"] = user["distribution"];
    user.erase("distribution");
    out.resolved.merge_patch(user);
  }
  out.seed = seed_override ? *seed_override : get<std::uint64_t>(out.resolved, "seed");
  out.resolved["seed"] = out.seed;
  return out;
}

std::filesystem::path resolve_path(const LoadedConfig& cfg, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !cfg.source.empty()) path = cfg.source.parent_path() / path;
  return path;
}

dist::ReferenceDistribution parse_distribution(const LoadedConfig& cfg, const json& j) {
  const auto type = get<std::string>(j, "type");
  const auto allow = [&](std::initializer_list<const char*> keys) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() == "type") continue;
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
        throw ConfigError("unknown config key 'distribution." + it.key() + "' for type " + type);
      }
    }
  };
  if (type == "uniform") {
    allow({"d", "L"});
    return dist::Uniform{get<std::size_t>(j, "d"), j.value("L", 1.0)};
  }
  if (type == "gaussian") {
    allow({"mean", "variance"});
    return dist::IsotropicGaussian{to_vector(j.at("mean"), "distribution.mean"),
                                   get<double>(j, "variance")};
  }
  if (type == "gmm") {
    if (j.contains("file")) {
      allow({"file"});
      return dist::gmm_from_file(resolve_path(cfg, get<std::string>(j, "file")));
    }
    allow({"weights", "means", "covariances"});
    const auto weights = get<std::vector<double>>(j, "weights");
    std::vector<Vector> means;
    for (const auto& m : j.at("means")) means.push_back(to_vector(m, "distribution.means"));
    std::vector<dist::Matrix> covs;
    for (const auto& c : j.at("covariances")) {
      const auto rows = c.get<std::vector<std::vector<double>>>();
      dist::Matrix m(rows.size(), rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size()) throw ConfigError("covariances must be square");
        for (std::size_t k = 0; k < rows.size(); ++k) m(r, k) = rows[r][k];
      }
      covs.push_back(std::move(m));
    }
    return dist::Gmm(weights, std::move(means), std::move(covs));
  }
  throw ConfigError("distribution.type must be uniform, gaussian or gmm, not '" + type + "'");
}

fourier::BasisConfig parse_basis(const json& j, std::size_t d) {
  fourier::BasisConfig b;
  b.d = d;
  b.K = get<Index>(j, "K");
  b.N = get<Index>(j, "N");
  b.L = get<double>(j, "L");
  b.half_period = get<bool>(j, "half_period");
  b.validate();
  return b;
}

fourier::PipelineOptions parse_pipeline(const json& j, std::uint64_t seed) {
  fourier::PipelineOptions p;
  const auto q = get<std::string>(j, "quadrature");
  if (q == "midpoint") {
    p.quadrature = fourier::QuadratureFamily::midpoint;
  } else if (q == "gauss_legendre") {
    p.quadrature = fourier::QuadratureFamily::gauss_legendre;
  } else {
    throw ConfigError("pipeline.quadrature must be midpoint or gauss_legendre");
  }
  p.cross_eps = get<double>(j, "cross_eps");
  p.round_eps = get<double>(j, "round_eps");
  p.lambda.eps = get<double>(j, "lambda_eps");
  p.lambda.rank_cap = get<Index>(j, "lambda_rank");
  p.seed = seed;
  p.lambda.seed = seed ^ 0x1a3bdaULL;
  return p;
}

ergodic::ErgodicConfig parse_explore(const json& j, const fourier::BasisConfig& basis,
                                     std::uint64_t seed) {
  ergodic::ErgodicConfig c;
  c.basis = basis;
  c.u_max = get<double>(j, "u_max");
  c.dt = get<double>(j, "dt");
  c.w_rank_cap = get<Index>(j, "w_rank_cap");
  c.w_rank_headroom = get<Index>(j, "w_rank_headroom");
  c.metric_interval = get<int>(j, "metric_interval");
  c.seed = seed;
  c.validate();
  return c;
}

sim::SuiteOptions parse_suite(const json& j, std::uint64_t seed) {
  sim::SuiteOptions o;
  o.d = get<std::size_t>(j, "d");
  o.n_gmms = get<std::size_t>(j, "n_gmms");
  o.trials = get<std::size_t>(j, "trials");
  o.components = get<std::size_t>(j, "components");
  o.variance = get<double>(j, "variance");
  o.volume_fraction = get<double>(j, "volume_fraction");
  o.time_limit = get<double>(j, "time_limit");
  o.u_max = get<double>(j, "u_max");
  o.dt = get<double>(j, "dt");
  o.K = get<Index>(j, "K");
  o.N = get<Index>(j, "N");
  o.workers = get<std::size_t>(j, "workers");
  o.seed = seed;
  o.strategies.clear();
  for (const auto& s : get<std::vector<std::string>>(j, "strategies")) {
    o.strategies.push_back(sim::parse_strategy(s));
  }
  return o;
}

sim::BenchOptions parse_bench(const json& j, std::uint64_t seed) {
  sim::BenchOptions o;
  o.d_list = get<std::vector<std::size_t>>(j, "d_list");
  o.K = get<Index>(j, "K");
  o.N = get<Index>(j, "N");
  o.variance = get<double>(j, "variance");
  o.steps = get<std::size_t>(j, "steps");
  o.warmup = get<std::size_t>(j, "warmup");
  o.repetitions = get<std::size_t>(j, "repetitions");
  o.dense_max_d = get<std::size_t>(j, "dense_max_d");
  o.seed = seed;
  return o;
}

sim::SyntheticPoseOptions parse_synthetic_poses(const json& j, std::uint64_t seed) {
  sim::SyntheticPoseOptions o;
  o.components = get<std::size_t>(j, "components");
  o.samples_per_component = get<std::size_t>(j, "samples_per_component");
  o.orientation_spread = get<double>(j, "orientation_spread");
  o.position_std = get<double>(j, "position_std");
  o.orientation_std = get<double>(j, "orientation_std");
  o.seed = seed;
  return o;
}

}  // namespace ttergodic::cli
