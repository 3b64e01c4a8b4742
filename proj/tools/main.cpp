// ttergodic command line: coeffs, explore, compare, bench, pose-explore.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "ttergodic/errors.hpp"
#include "ttergodic/ergodic/engine.hpp"
#include "ttergodic/fourier/fourier.hpp"
#include "ttergodic/manifold/quaternion.hpp"
#include "ttergodic/sim/pose.hpp"
#include "ttergodic/sim/sim.hpp"

namespace fs = std::filesystem;
using namespace ttergodic;
using cli::ConfigError;
using cli::json;
using cli::Vector;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit : int { kOk = 0, kFailure = 1, kConfig = 2, kConvergence = 3 };

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Common {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  fs::path out = "out";
  std::optional<fs::path> cache;
  std::vector<std::string> overrides;
};

// Output directory bookkeeping. Every file goes through here, which keeps
// writes inside --out and lists them in the manifest.
class Outputs {
 public:
  explicit Outputs(const fs::path& dir) {
    fs::create_directories(dir);
    dir_ = fs::weakly_canonical(fs::absolute(dir));
  }

  bool contains(const fs::path& p) const {
    const fs::path abs = fs::weakly_canonical(fs::absolute(p));
    const auto rel = abs.lexically_relative(dir_);
    return !rel.empty() && *rel.begin() != "..";
  }

  fs::path path(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
  }

  std::ofstream open(const std::string& name) {
    std::ofstream f(path(name));
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << std::setprecision(12);
    return f;
  }

  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

// --set a.b=value, with value parsed as JSON when it parses and taken as a
// string otherwise.
void apply_overrides(json& cfg, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key.path=value, got '" + s + "'");
    std::string key = s.substr(0, eq);
    const std::string raw = s.substr(eq + 1);
    std::string ptr = "/";
    for (char c : key) ptr += c == '.' ? '/' : c;
    const json::json_pointer jp(ptr);
    if (key.rfind("distribution", 0) != 0 && !cli::default_config().contains(jp)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    json v = json::parse(raw, nullptr, false);
    if (v.is_discarded()) v = raw;
    cfg[jp] = v;
  }
}

cli::LoadedConfig load(const Common& c) {
  auto cfg = cli::load_config(c.config, c.seed);
  apply_overrides(cfg.resolved, c.overrides);
  if (!c.seed && cfg.resolved["seed"].is_number_unsigned()) {
    cfg.seed = cfg.resolved["seed"].get<std::uint64_t>();
  }
  cfg.resolved["seed"] = cfg.seed;
  return cfg;
}

void write_manifest(Outputs& out, const std::string& sub, const cli::LoadedConfig& cfg,
                    const Common& c, const json& timing, const json& extra = json::object()) {
  json m;
  m["tool"] = "ttergodic";
  m["version"] = kVersion;
  m["subcommand"] = sub;
  m["config_path"] = c.config ? fs::absolute(*c.config).string() : std::string();
  m["seed"] = cfg.seed;
  m["out"] = out.dir().string();
  m["cache"] = c.cache ? fs::absolute(*c.cache).string() : std::string();
  m["resolved_config"] = cfg.resolved;
  m["outputs"] = out.files();
  m["timing_seconds"] = timing;
  m["results"] = extra;
  std::ofstream f(out.dir() / "manifest.json");
  f << std::setw(2) << m << '\n';
}

// ---- coefficients with the on-disk cache ---------------------------------

// Every parameter of the distribution, at full precision, so a cache built
// for one density is never reused for another.
std::string fingerprint(const dist::ReferenceDistribution& p) {
  std::ostringstream s;
  s << std::setprecision(17);
  if (const auto* u = std::get_if<dist::Uniform>(&p)) {
    s << "uniform " << u->d << ' ' << u->L;
  } else if (const auto* g = std::get_if<dist::IsotropicGaussian>(&p)) {
    s << "gaussian " << g->variance << ' ' << g->mean.transpose();
  } else {
    dist::write_gmm(s, std::get<dist::Gmm>(p));
  }
  return s.str();
}

struct Coeffs {
  std::shared_ptr<const fourier::CoefficientSet> set;
  fourier::PipelineReport report;
  bool from_cache = false;
  double seconds = 0.0;
};

Coeffs coefficients(const cli::LoadedConfig& cfg, const Common& c, Outputs& out,
                    const dist::ReferenceDistribution& p, const fourier::BasisConfig& basis,
                    const fourier::PipelineOptions& popt) {
  const fs::path cache = c.cache ? *c.cache : out.dir() / "coefficients.ttc";
  fs::path key_path = cache;
  key_path += ".key";
  json key;
  key["distribution"] = fingerprint(p);
  key["basis"] = {basis.d, basis.K, basis.N, basis.L, basis.half_period};
  key["pipeline"] = cfg.resolved["pipeline"];
  key["seed"] = popt.seed;

  Coeffs r;
  const auto t0 = Clock::now();
  if (fs::exists(cache) && fs::exists(key_path)) {
    std::ifstream kf(key_path);
    const json stored = json::parse(kf, nullptr, false);
    if (!stored.is_discarded() && stored == key) {
      r.set = std::make_shared<fourier::CoefficientSet>(fourier::load_coefficients(cache));
      r.from_cache = true;
      r.seconds = seconds_since(t0);
      return r;
    }
  }
  if (!out.contains(cache)) {
    throw ConfigError("cache " + cache.string() +
                      " is missing or stale and lies outside --out; refusing to write it");
  }
  r.set = std::make_shared<fourier::CoefficientSet>(fourier::compute_coefficients(p, basis, popt, &r.report));
  r.seconds = seconds_since(t0);
  fs::create_directories(fs::absolute(cache).parent_path());
  fourier::save_coefficients(cache, *r.set);
  std::ofstream(key_path) << key.dump() << '\n';
  const auto rel = fs::weakly_canonical(fs::absolute(cache)).lexically_relative(out.dir()).string();
  out.path(rel);
  out.path(rel + ".key");
  return r;
}

std::string ranks_string(const std::vector<tt::Index>& ranks) {
  std::ostringstream s;
  for (std::size_t i = 0; i < ranks.size(); ++i) s << (i ? "," : "") << ranks[i];
  return s.str();
}

// ---- subcommands ----------------------------------------------------------

int cmd_coeffs(const Common& c) {
  const auto cfg = load(c);
  Outputs out(c.out);
  const auto p = cli::parse_distribution(cfg, cfg.resolved["distribution"]);
  const auto basis = cli::parse_basis(cfg.resolved["basis"], dist::dimension(p));
  const auto popt = cli::parse_pipeline(cfg.resolved["pipeline"], cfg.seed);
  const auto co = coefficients(cfg, c, out, p, basis, popt);

  const tt::Index grad_phi = static_cast<tt::Index>(basis.d) * basis.K;
  auto f = out.open("coeffs_report.tsv");
  f << "# tensor ranks parameters\n";
  f << "w_hat " << ranks_string(co.set->w_hat.ranks()) << ' ' << co.set->w_hat.parameter_count() << '\n';
  f << "lambda " << ranks_string(co.set->lambda.ranks()) << ' ' << co.set->lambda.parameter_count() << '\n';
  f << "grad_phi " << ranks_string(std::vector<tt::Index>(basis.d + 1, 1)) << ' ' << grad_phi << '\n';

  std::cout << describe(p) << "  d=" << basis.d << " K=" << basis.K << " N=" << basis.N << '\n'
            << (co.from_cache ? "loaded from cache" : "computed") << " in " << co.seconds << " s\n"
            << "  W-hat   ranks " << ranks_string(co.set->w_hat.ranks()) << "  params "
            << co.set->w_hat.parameter_count() << '\n'
            << "  Lambda  ranks " << ranks_string(co.set->lambda.ranks()) << "  params "
            << co.set->lambda.parameter_count() << '\n'
            << "  grad Phi (rank 1) params " << grad_phi << '\n';
  if (!co.from_cache) std::cout << "  cross error estimate " << co.report.p_error << '\n';

  json timing{{"coefficients", co.seconds}};
  json results{{"from_cache", co.from_cache},
               {"params_w_hat", co.set->w_hat.parameter_count()},
               {"params_lambda", co.set->lambda.parameter_count()},
               {"params_grad_phi", grad_phi}};
  write_manifest(out, "coeffs", cfg, c, timing, results);
  return kOk;
}

int cmd_explore(const Common& c) {
  const auto cfg = load(c);
  Outputs out(c.out);
  const auto p = cli::parse_distribution(cfg, cfg.resolved["distribution"]);
  const auto basis = cli::parse_basis(cfg.resolved["basis"], dist::dimension(p));
  const auto popt = cli::parse_pipeline(cfg.resolved["pipeline"], cfg.seed);
  const json& ex = cfg.resolved["explore"];
  const auto ecfg = cli::parse_explore(ex, basis, cfg.seed);
  const double T = ex.at("T").get<double>();
  if (!(T > 0.0)) throw ConfigError("explore.T must be positive");

  Vector x0 = Vector::Constant(static_cast<tt::Index>(basis.d), 0.5 * basis.L);
  if (ex.contains("x0") && !ex["x0"].is_null()) {
    const auto v = ex["x0"].get<std::vector<double>>();
    if (v.size() != basis.d) throw ConfigError("explore.x0 must have d entries");
    x0 = Eigen::Map<const Vector>(v.data(), static_cast<tt::Index>(v.size()));
  }

  const auto co = coefficients(cfg, c, out, p, basis, popt);
  const auto t0 = Clock::now();
  const auto traj = ergodic::run(ecfg, co.set, x0, T);
  const double seconds = seconds_since(t0);

  {
    auto f = out.open("trajectory.tsv");
    ergodic::write_trajectory(f, traj);
  }
  {
    auto f = out.open("metric.tsv");
    f << "# t[s] xi\n";
    for (const auto& s : traj) {
      if (!std::isnan(s.xi)) f << s.t << ' ' << s.xi << '\n';
    }
  }

  json corr = json::array();
  const auto bins = ex.at("histogram_bins").get<std::size_t>();
  if (basis.d >= 2 && bins > 0) {
    std::vector<Vector> xs;
    xs.reserve(traj.size());
    for (const auto& s : traj) xs.push_back(s.x);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < basis.d; ++i) {
      for (std::size_t j = i + 1; j < basis.d; ++j) {
        if (basis.d <= 6 || j == i + 1) pairs.emplace_back(i, j);
      }
    }
    auto f = out.open("coverage.tsv");
    f << "# dim_i dim_j occupancy_mass_correlation\n";
    for (const auto& [i, j] : pairs) {
      const auto occ = sim::occupancy_histogram(xs, i, j, bins, basis.L);
      const auto mass = sim::marginal_mass(p, i, j, bins, basis.L);
      const double r = sim::grid_correlation(occ, mass);
      const std::string tag = std::to_string(i) + "_" + std::to_string(j);
      auto fo = out.open("occupancy_" + tag + ".tsv");
      sim::write_grid(fo, occ, "occupancy_fraction");
      auto fm = out.open("mass_" + tag + ".tsv");
      sim::write_grid(fm, mass, "probability_mass");
      f << i << ' ' << j << ' ' << r << '\n';
      corr.push_back({{"i", i}, {"j", j}, {"correlation", r}});
      std::cout << "occupancy/mass correlation (" << i << "," << j << "): " << r << '\n';
    }
  }

  double xi_last = NAN;
  for (const auto& s : traj) {
    if (!std::isnan(s.xi)) xi_last = s.xi;
  }
  std::cout << traj.size() << " steps, t = " << traj.back().t << " s, last xi = " << xi_last << ", loop " << seconds
            << " s\n";
  json timing{{"coefficients", co.seconds}, {"loop", seconds}};
  json results{{"steps", traj.size()}, {"coverage", corr}};
  write_manifest(out, "explore", cfg, c, timing, results);
  return kOk;
}

int cmd_compare(const Common& c) {
  const auto cfg = load(c);
  Outputs out(c.out);
  const json& cj = cfg.resolved["compare"];
  const auto opt = cli::parse_suite(cj, cfg.seed);
  const auto report = sim::run_suite(opt);
  {
    auto f = out.open("suite_rows.tsv");
    sim::write_suite_rows(f, report);
  }
  {
    auto f = out.open("suite_summary.tsv");
    sim::write_suite_summary(f, report);
  }
  sim::write_suite_summary(std::cout, report);

  const auto attempts = cj.at("cumulative_attempts").get<std::size_t>();
  json cum = json::object();
  if (attempts > 0) {
    const auto g = cj.at("cumulative_gmm").get<std::size_t>();
    const auto t = cj.at("cumulative_trial").get<std::size_t>();
    if (g >= opt.n_gmms || t >= opt.trials) throw ConfigError("cumulative_gmm/trial out of range");
    const auto cases = sim::make_suite(opt);
    std::vector<sim::CumulativeSeries> series(opt.strategies.size());
    sim::parallel_for(opt.strategies.size(), opt.workers, [&](std::size_t s) {
      auto spec = sim::suite_trial(opt, cases[g], g, t, opt.strategies[s]);
      series[s] = sim::cumulative_average_experiment(spec, attempts);
    });
    auto f = out.open("cumulative_average.tsv");
    f << "# attempt";
    for (auto s : opt.strategies) f << ' ' << sim::strategy_name(s) << "[s]";
    f << '\n';
    for (std::size_t a = 0; a < attempts; ++a) {
      f << a + 1;
      for (const auto& s : series) {
        if (a < s.average.size()) {
          f << ' ' << s.average[a];
        } else {
          f << " nan";
        }
      }
      f << '\n';
    }
    const auto spec0 = sim::suite_trial(opt, cases[g], g, t, sim::Strategy::ergodic);
    cum["straight_line_time"] = (spec0.x0 - spec0.target.center).norm() / opt.u_max;
    for (std::size_t s = 0; s < series.size(); ++s) {
      cum[sim::strategy_name(opt.strategies[s])] = {
          {"final", series[s].average.empty() ? NAN : series[s].average.back()},
          {"timed_out", series[s].timed_out}};
    }
  }

  json summary = json::array();
  for (const auto& s : report.summary) {
    summary.push_back({{"strategy", sim::strategy_name(s.strategy)},
                       {"trials", s.trials},
                       {"successes", s.successes},
                       {"mean_time", s.mean_time},
                       {"stddev_time", s.stddev_time}});
  }
  json timing{{"preprocessing", report.seconds_preprocessing}, {"trials", report.seconds_trials}};
  write_manifest(out, "compare", cfg, c, timing, {{"summary", summary}, {"cumulative", cum}});
  return kOk;
}

int cmd_bench(const Common& c) {
  const auto cfg = load(c);
  Outputs out(c.out);
  const auto opt = cli::parse_bench(cfg.resolved["bench"], cfg.seed);
  const auto rows = sim::bench_timing(opt);
  {
    auto f = out.open("bench.tsv");
    sim::write_bench(f, rows);
  }
  sim::write_bench(std::cout, rows);
  json counts = json::array();
  for (const auto& r : rows) {
    counts.push_back({{"d", r.d},
                      {"params_w_hat", r.params_w_hat},
                      {"params_lambda", r.params_lambda},
                      {"params_grad_phi", r.params_grad_phi}});
  }
  write_manifest(out, "bench", cfg, c, json::object(), {{"counts", counts}});
  return kOk;
}

void write_pose_row(std::ostream& f, double t, const manifold::Pose& p) {
  const auto& q = p.orientation;
  f << t << ' ' << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' ' << q.scalar() << ' '
    << q.vec().x() << ' ' << q.vec().y() << ' ' << q.vec().z() << '\n';
}

int cmd_pose_explore(const Common& c) {
  const auto cfg = load(c);
  Outputs out(c.out);
  const json& pj = cfg.resolved["pose"];

  std::optional<sim::PoseProblem> problem;
  std::vector<manifold::Pose> poses;
  const bool has_data = pj.contains("dataset") && !pj["dataset"].is_null();
  const bool has_gmm = pj.contains("gmm") && !pj["gmm"].is_null();
  if (has_data != has_gmm) throw ConfigError("pose.dataset and pose.gmm must be given together");
  if (has_data) {
    poses = manifold::load_poses(cli::resolve_path(cfg, pj["dataset"].get<std::string>()));
    auto gmm = dist::gmm_from_file(cli::resolve_path(cfg, pj["gmm"].get<std::string>()));
    problem = sim::pose_problem(poses, std::move(gmm), pj.at("pad").get<double>());
  } else {
    auto syn = sim::synthetic_pose_dataset(cli::parse_synthetic_poses(pj["synthetic"], cfg.seed));
    poses = std::move(syn.poses);
    problem = std::move(syn.problem);
    auto fd = out.open("synthetic_poses.txt");
    fd << "# px py pz qw qx qy qz\n";
    manifold::write_poses(fd, poses);
    auto fg = out.open("pose_gmm.txt");
    fg << "# task coordinates [p, Log_anchor(q)]\n";
    dist::write_gmm(fg, problem->task_gmm);
  }

  fourier::BasisConfig basis{6, pj.at("K").get<tt::Index>(), 1.0, pj.at("N").get<tt::Index>()};
  basis.validate();
  const auto popt = cli::parse_pipeline(cfg.resolved["pipeline"], cfg.seed);
  const auto mapped = problem->mapped_gmm();
  const auto co = coefficients(cfg, c, out, mapped, basis, popt);

  ergodic::ErgodicConfig ecfg;
  ecfg.basis = basis;
  ecfg.u_max = pj.at("u_max").get<double>();
  ecfg.dt = pj.at("dt").get<double>();
  ecfg.w_rank_cap = pj.at("w_rank_cap").get<tt::Index>();
  ecfg.w_rank_headroom = pj.at("w_rank_headroom").get<tt::Index>();
  ecfg.metric_interval = 0;
  ecfg.seed = cfg.seed;
  ecfg.validate();

  // start at the first demonstration
  sim::PoseExplorer explorer(*problem, ecfg, co.set, poses.front());
  const auto steps = pj.at("steps").get<std::size_t>();
  auto f = out.open("poses.tsv");
  f << "# t[s] px py pz qw qx qy qz\n";
  write_pose_row(f, 0.0, explorer.pose());
  std::vector<manifold::Pose> trace;
  trace.reserve(steps);
  const auto t0 = Clock::now();
  for (std::size_t i = 0; i < steps; ++i) trace.push_back(explorer.step());
  const double seconds = seconds_since(t0);
  for (std::size_t i = 0; i < trace.size(); ++i) write_pose_row(f, ecfg.dt * static_cast<double>(i + 1), trace[i]);

  const double rate = seconds > 0.0 ? static_cast<double>(steps) / seconds : INFINITY;
  const auto& a = problem->anchor;
  std::cout << "anchor (" << a.scalar() << ", " << a.vec().transpose() << "), " << steps << " steps in " << seconds
            << " s (" << rate << " steps/s), max |q|-1 = " << explorer.max_norm_error() << '\n';
  json timing{{"coefficients", co.seconds}, {"loop", seconds}, {"steps_per_second", rate}};
  json results{{"steps", steps},
               {"max_norm_error", explorer.max_norm_error()},
               {"anchor", {a.scalar(), a.vec().x(), a.vec().y(), a.vec().z()}}};
  write_manifest(out, "pose-explore", cfg, c, timing, results);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor-train ergodic exploration"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON config file, or a manifest.json to replay")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Seed for every random stream (overrides the config)");
    sub->add_option("--out", common.out, "Output directory (created if missing)")->capture_default_str();
    sub->add_option("--cache", common.cache, "Coefficient cache file");
    sub->add_option("--set", common.overrides, "Override a config value, e.g. explore.T=50")->take_all();
  };
  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Common&);
  };
  const Sub subs[] = {
      {"coeffs", "Compute (or load) the Fourier coefficient tensors and report their sizes", cmd_coeffs},
      {"explore", "Run the ergodic controller and write the trajectory, metric and coverage", cmd_explore},
      {"compare", "Run the strategy comparison suite and the cumulative-average experiment", cmd_compare},
      {"bench", "Time preprocessing and the control loop against d", cmd_bench},
      {"pose-explore", "Explore position and orientation from a pose dataset", cmd_pose_explore},
  };
  int (*chosen)(const Common&) = nullptr;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub);
    sub->callback([&chosen, fn = s.fn] { chosen = fn; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    return chosen(common);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << " (error estimate " << e.estimate() << ")\n";
    return kConvergence;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
