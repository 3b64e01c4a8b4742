#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ttergodic/dist/distributions.hpp"
#include "ttergodic/ergodic/engine.hpp"
#include "ttergodic/fourier/fourier.hpp"

namespace ttergodic::sim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class Strategy { ergodic, sampling, spiral, gmm_spiral };

/// Accepts "ergodic", "sampling", "spiral", "gmm_spiral"; ArgumentError otherwise.
Strategy parse_strategy(std::string_view name);
const char* strategy_name(Strategy s);

/// Radius of the d-ball with the given volume.
double ball_radius(std::size_t d, double volume);

struct TargetRegion {
  Vector center;
  double radius = 0.0;

  /// Ball holding `fraction` of vol([0, L]^d); the center is pulled at least
  /// one radius away from every wall.
  static TargetRegion from_volume_fraction(const Vector& center, double fraction, double L);
  bool contains(const Vector& x) const;
};

struct TrialSpec {
  Strategy strategy = Strategy::ergodic;
  dist::ReferenceDistribution distribution = dist::Uniform{};
  TargetRegion target;
  Vector x0;
  double time_limit = 1000.0;
  double u_max = 0.1;
  double dt = 0.01;
  double L = 1.0;
  std::uint64_t seed = 1;
  /// Ergodic strategy only. Coefficients are computed when not supplied.
  fourier::BasisConfig basis{2, 10, 1.0, 10};
  std::shared_ptr<const fourier::CoefficientSet> coeffs;
  /// Positions kept in TrialResult::trajectory (0 keeps none).
  std::size_t trajectory_cap = 0;

  void validate() const;
};

struct TrialResult {
  bool success = false;
  std::optional<double> time_to_reach;
  double path_length = 0.0;
  std::vector<Vector> trajectory;
};

/// Produces successive positions, each at most u_max * dt from the last.
class Mover {
 public:
  virtual ~Mover() = default;
  virtual const Vector& position() const = 0;
  virtual const Vector& step() = 0;
  /// Puts the agent back at x. Ergodic keeps W and the clock, sampling keeps
  /// its RNG stream but draws a fresh goal, and sweeps restart from their
  /// origin.
  virtual void reset(const Vector& x) = 0;
};

std::unique_ptr<Mover> make_mover(const TrialSpec& spec);

/// Walks a polyline at constant speed, returning to the first vertex after the
/// last one and repeating.
class PathFollower {
 public:
  explicit PathFollower(std::vector<Vector> points);
  /// Advances by arclength ds and returns the new position.
  const Vector& advance(double ds);
  const Vector& position() const noexcept { return pos_; }
  const std::vector<Vector>& points() const noexcept { return pts_; }
  void restart();

 private:
  std::vector<Vector> pts_;
  std::size_t seg_ = 0;
  double offset_ = 0.0;
  Vector pos_;
};

/// Archimedean spiral r = gap * theta / (2 pi) around `center`.
struct ArchimedeanSpiral {
  double gap = 0.1;

  double radius(double theta) const;
  /// Vertices from r = 0 out to r_max, `per_turn` per revolution, closed by
  /// one full circle at r_max.
  std::vector<Eigen::Vector2d> vertices(double r_max, int per_turn = 128) const;
};

/// Strategy 3 path. 2D: spiral from the domain center out to the corners.
/// 3D: the same planar spiral around the vertical center line, run in
/// stacked outward passes starting from z = 0 with z rising linearly by one
/// gap per pass, plus a straight return to the center line between passes.
std::vector<Vector> spiral_path(std::size_t d, double gap, double L);

/// Strategy 4 path: components in descending weight, each swept from its mean
/// by a spiral in the principal axes out to `extent` standard deviations with
/// ring gap (in space) at most `gap`; straight transits in between.
std::vector<Vector> gmm_spiral_path(const dist::Gmm& gmm, double gap, double L, double extent = 2.0);

TrialResult run_trial(const TrialSpec& spec);

/// Row-major bins x bins grid over the (i, j) plane of [0, L]^d.
struct Grid2 {
  std::size_t i = 0, j = 1;
  std::size_t bins = 30;
  double L = 1.0;
  std::vector<double> values;

  double& at(std::size_t a, std::size_t b) { return values[a * bins + b]; }
  double at(std::size_t a, std::size_t b) const { return values[a * bins + b]; }
};

/// Fraction of positions per cell of the (i, j) marginal.
Grid2 occupancy_histogram(std::span<const Vector> positions, std::size_t i, std::size_t j,
                          std::size_t bins, double L);
/// Probability mass per cell of the (i, j) marginal, integrated by a
/// sub x sub midpoint rule inside each cell.
Grid2 marginal_mass(const dist::ReferenceDistribution& p, std::size_t i, std::size_t j,
                    std::size_t bins, double L, int sub = 4);
/// Pearson correlation of two equally sized grids.
double grid_correlation(const Grid2& a, const Grid2& b);
/// Header, then one row per cell: x_i center, x_j center, value.
void write_grid(std::ostream& out, const Grid2& g, const char* value_name);

struct CumulativeSeries {
  /// Entry c-1 is T_c / c, the mean time over the first c successful attempts.
  std::vector<double> average;
  /// Set when an attempt exceeded the time limit; the series stops there.
  bool timed_out = false;
};

/// Re-initializes the agent at x0 after every hit (see Mover::reset).
CumulativeSeries cumulative_average_experiment(const TrialSpec& spec, std::size_t n_attempts);

/// Runs fn(0..n-1) on up to `workers` threads (0 = hardware concurrency).
/// The first exception thrown by any task is rethrown after all finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct SuiteOptions {
  std::size_t d = 2;
  std::size_t n_gmms = 10;
  std::size_t trials = 10;
  std::size_t components = 6;
  double variance = 0.01;
  double volume_fraction = 0.005;
  double time_limit = 1000.0;
  double u_max = 0.1;
  double dt = 0.01;
  Index K = 10;
  Index N = 10;
  std::uint64_t seed = 2021;
  std::size_t workers = 0;
  std::vector<Strategy> strategies{Strategy::ergodic, Strategy::sampling, Strategy::spiral,
                                   Strategy::gmm_spiral};
};

struct SuiteCase {
  dist::Gmm gmm;
  std::vector<TargetRegion> targets;
};

/// Equal-weight isotropic GMMs with centers uniform in the domain shrunk by
/// three standard deviations, and per-trial targets sampled from each GMM.
std::vector<SuiteCase> make_suite(const SuiteOptions& opt);

struct SuiteRow {
  Strategy strategy;
  std::size_t gmm = 0;
  std::size_t trial = 0;
  TrialResult result;
};

struct StrategySummary {
  Strategy strategy;
  std::size_t trials = 0;
  std::size_t successes = 0;
  /// Over successful trials only.
  double mean_time = 0.0;
  double stddev_time = 0.0;
};

struct SuiteReport {
  std::vector<SuiteRow> rows;
  std::vector<StrategySummary> summary;
  double seconds_preprocessing = 0.0;
  double seconds_trials = 0.0;
};

/// Trial t of case g: start at the domain center (on the floor in 3-D),
/// seeded from opt.seed, g and t.
TrialSpec suite_trial(const SuiteOptions& opt, const SuiteCase& c, std::size_t g, std::size_t t,
                      Strategy s, std::shared_ptr<const fourier::CoefficientSet> coeffs = nullptr);
SuiteReport run_suite(const SuiteOptions& opt);
std::vector<StrategySummary> summarize(const std::vector<SuiteRow>& rows,
                                       const std::vector<Strategy>& strategies);
void write_suite_rows(std::ostream& out, const SuiteReport& r);
void write_suite_summary(std::ostream& out, const SuiteReport& r);

struct BenchOptions {
  std::vector<std::size_t> d_list{2, 3, 4, 5, 6, 7, 8, 9, 10};
  Index K = 5;
  Index N = 10;
  double variance = 0.015;
  std::size_t steps = 1000;
  std::size_t warmup = 100;
  std::size_t repetitions = 5;
  std::size_t dense_max_d = 5;
  std::uint64_t seed = 7;
};

struct BenchRow {
  std::size_t d = 0;
  double seconds_preprocessing = 0.0;
  /// Medians over repetitions of the mean per-step time.
  double tt_step = 0.0;
  std::optional<double> dense_step;
  Index params_w_hat = 0;
  Index params_lambda = 0;
  Index params_grad_phi = 0;
  Index params_w = 0;
  Index w_rank_cap = 0;
};

/// Single-threaded; the calling thread is pinned to one CPU when possible.
std::vector<BenchRow> bench_timing(const BenchOptions& opt);
void write_bench(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace ttergodic::sim
