#include "ttergodic/sim/sim.hpp"

#include <sched.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "ttergodic/errors.hpp"
#include "ttergodic/tt/ops.hpp"

namespace ttergodic::sim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool inside(const Vector& x, double L) {
  return (x.array() >= 0.0).all() && (x.array() <= L).all();
}

Vector clamped(Vector x, double L) {
  ergodic::clamp_to_domain(x, L);
  return x;
}

}  // namespace

Strategy parse_strategy(std::string_view name) {
  if (name == "ergodic") return Strategy::ergodic;
  if (name == "sampling") return Strategy::sampling;
  if (name == "spiral") return Strategy::spiral;
  if (name == "gmm_spiral") return Strategy::gmm_spiral;
  throw ArgumentError("unknown strategy '" + std::string(name) + "'");
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::ergodic: return "ergodic";
    case Strategy::sampling: return "sampling";
    case Strategy::spiral: return "spiral";
    case Strategy::gmm_spiral: return "gmm_spiral";
  }
  return "?";
}

double ball_radius(std::size_t d, double volume) {
  if (d == 0 || !(volume > 0.0)) throw ArgumentError("ball_radius needs d >= 1 and a positive volume");
  const double h = 0.5 * static_cast<double>(d);
  const double unit = std::exp(h * std::log(std::numbers::pi) - std::lgamma(h + 1.0));
  return std::pow(volume / unit, 1.0 / static_cast<double>(d));
}

TargetRegion TargetRegion::from_volume_fraction(const Vector& center, double fraction, double L) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ArgumentError("volume fraction must lie in (0, 1)");
  const auto d = static_cast<std::size_t>(center.size());
  TargetRegion t;
  t.radius = ball_radius(d, fraction * std::pow(L, static_cast<double>(d)));
  if (2.0 * t.radius > L) throw ArgumentError("target ball does not fit in the domain");
  t.center = center.cwiseMax(t.radius).cwiseMin(L - t.radius);
  return t;
}

bool TargetRegion::contains(const Vector& x) const { return (x - center).norm() <= radius; }

void TrialSpec::validate() const {
  const std::size_t d = dist::dimension(distribution);
  if (static_cast<std::size_t>(x0.size()) != d || static_cast<std::size_t>(target.center.size()) != d) {
    throw ShapeError("x0, target and distribution disagree on the dimension");
  }
  if (!(time_limit > 0.0)) throw ArgumentError("time_limit must be positive");
  if (!(u_max > 0.0) || !(dt > 0.0)) throw ArgumentError("u_max and dt must be positive");
  if (!(target.radius > 0.0)) throw ArgumentError("target radius must be positive");
  if (!inside(x0, L)) throw DomainError("x0 lies outside the domain");
  if ((strategy == Strategy::spiral || strategy == Strategy::gmm_spiral) && d != 2 && d != 3) {
    throw ArgumentError(std::string(strategy_name(strategy)) + " supports d = 2 or 3 only");
  }
  if (strategy == Strategy::gmm_spiral && !std::holds_alternative<dist::Gmm>(distribution)) {
    throw ArgumentError("gmm_spiral needs a GMM distribution");
  }
  if (strategy == Strategy::ergodic && basis.d != d) {
    throw ShapeError("basis dimension does not match the distribution");
  }
}

PathFollower::PathFollower(std::vector<Vector> points) : pts_(std::move(points)) {
  if (pts_.empty()) throw ArgumentError("path needs at least one point");
  pos_ = pts_.front();
}

void PathFollower::restart() {
  seg_ = 0;
  offset_ = 0.0;
  pos_ = pts_.front();
}

const Vector& PathFollower::advance(double ds) {
  const std::size_t n = pts_.size();
  // Guard against a path whose vertices all coincide.
  std::size_t idle = 0;
  while (ds > 0.0 && idle <= n) {
    const Vector& a = pts_[seg_];
    const Vector& b = pts_[(seg_ + 1) % n];
    const double len = (b - a).norm();
    const double left = len - offset_;
    if (ds < left) {
      offset_ += ds;
      pos_ = a + (offset_ / len) * (b - a);
      return pos_;
    }
    idle = len == 0.0 ? idle + 1 : 0;
    ds -= left;
    seg_ = (seg_ + 1) % n;
    offset_ = 0.0;
    pos_ = b;
  }
  return pos_;
}

double ArchimedeanSpiral::radius(double theta) const { return gap * theta / (2.0 * std::numbers::pi); }

std::vector<Eigen::Vector2d> ArchimedeanSpiral::vertices(double r_max, int per_turn) const {
  if (!(gap > 0.0) || r_max < 0.0 || per_turn < 4) throw ArgumentError("bad spiral parameters");
  const double step = 2.0 * std::numbers::pi / per_turn;
  const double theta_end = 2.0 * std::numbers::pi * r_max / gap;
  std::vector<Eigen::Vector2d> out;
  const auto at = [](double r, double th) { return Eigen::Vector2d(r * std::cos(th), r * std::sin(th)); };
  long k = 0;
  for (; k * step < theta_end; ++k) out.push_back(at(radius(k * step), k * step));
  out.push_back(at(r_max, theta_end));
  if (r_max == 0.0) return out;
  // Closing circle on the grid angles so the principal directions are hit
  // exactly.
  for (long j = k; j <= k + per_turn; ++j) out.push_back(at(r_max, j * step));
  return out;
}

std::vector<Vector> spiral_path(std::size_t d, double gap, double L) {
  if (d != 2 && d != 3) throw ArgumentError("spiral supports d = 2 or 3 only");
  const Eigen::Vector2d c(0.5 * L, 0.5 * L);
  const auto plane = ArchimedeanSpiral{gap}.vertices(L / std::sqrt(2.0));
  // Out-of-domain vertices are dropped; the chord between the neighbours that
  // remain stays inside the box by convexity.
  std::vector<Eigen::Vector2d> kept;
  for (const auto& p : plane) {
    const Eigen::Vector2d q = c + p;
    if ((q.array() >= 0.0).all() && (q.array() <= L).all()) kept.push_back(q);
  }
  std::vector<Vector> out;
  if (d == 2) {
    for (const auto& q : kept) out.emplace_back(q);
    return out;
  }
  std::vector<double> s(kept.size(), 0.0);
  for (std::size_t i = 1; i < kept.size(); ++i) s[i] = s[i - 1] + (kept[i] - kept[i - 1]).norm();
  const auto passes = static_cast<long>(std::ceil(L / gap - 1e-12));
  for (long j = 0; j < passes; ++j) {
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const double z = std::min(L, gap * (static_cast<double>(j) + s[i] / s.back()));
      out.emplace_back(Eigen::Vector3d(kept[i].x(), kept[i].y(), z));
    }
  }
  return out;
}

std::vector<Vector> gmm_spiral_path(const dist::Gmm& gmm, double gap, double L, double extent) {
  const std::size_t d = gmm.dim();
  if (d != 2 && d != 3) throw ArgumentError("gmm_spiral supports d = 2 or 3 only");
  if (!(gap > 0.0) || !(extent > 0.0)) throw ArgumentError("gmm_spiral needs positive gap and extent");
  std::vector<std::size_t> order(gmm.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gmm.weights()[a] > gmm.weights()[b]; });
  std::vector<Vector> out;
  for (std::size_t j : order) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gmm.covariances()[j]);
    // Largest axis first so the planar spiral of the 3D case spans the two
    // widest directions.
    const Matrix axes = es.eigenvectors().rowwise().reverse();
    const Vector sigma = es.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
    const double unit_gap = gap / sigma.maxCoeff();
    const ArchimedeanSpiral spiral{unit_gap};
    const auto emit = [&](const Vector& y) {
      const Vector x = gmm.means()[j] + axes * sigma.cwiseProduct(y);
      if (inside(x, L)) out.push_back(x);
    };
    emit(Vector::Zero(static_cast<Index>(d)));
    if (d == 2) {
      for (const auto& p : spiral.vertices(extent)) emit(p);
      continue;
    }
    // 3D: planar spirals on slices of the ellipsoid, alternating above and
    // below the center, ending with the two poles.
    std::vector<double> levels{0.0};
    for (long k = 1; k * unit_gap < extent; ++k) {
      levels.push_back(k * unit_gap);
      levels.push_back(-k * unit_gap);
    }
    levels.push_back(extent);
    levels.push_back(-extent);
    for (double w : levels) {
      const double rho = std::sqrt(std::max(0.0, extent * extent - w * w));
      for (const auto& p : spiral.vertices(rho)) emit(Eigen::Vector3d(p.x(), p.y(), w));
    }
  }
  if (out.empty()) throw DomainError("every GMM sweep lies outside the domain");
  return out;
}

namespace {

class ErgodicMover final : public Mover {
 public:
  explicit ErgodicMover(const TrialSpec& spec) {
    auto coeffs = spec.coeffs;
    if (!coeffs) {
      coeffs = std::make_shared<fourier::CoefficientSet>(
          fourier::compute_coefficients(spec.distribution, spec.basis));
    }
    ergodic::ErgodicConfig cfg;
    cfg.basis = spec.basis;
    cfg.u_max = spec.u_max;
    cfg.dt = spec.dt;
    cfg.seed = spec.seed;
    cfg.metric_interval = 0;
    engine_ = std::make_unique<ergodic::Engine>(cfg, std::move(coeffs), spec.x0);
  }
  const Vector& position() const override { return engine_->position(); }
  const Vector& step() override {
    engine_->step();
    return engine_->position();
  }
  void reset(const Vector& x) override { engine_->reset_position(x); }

 private:
  std::unique_ptr<ergodic::Engine> engine_;
};

class SamplingMover final : public Mover {
 public:
  explicit SamplingMover(const TrialSpec& spec)
      : p_(spec.distribution), L_(spec.L), ds_(spec.u_max * spec.dt), rng_(spec.seed), x_(spec.x0) {
    draw();
  }
  const Vector& position() const override { return x_; }
  const Vector& step() override {
    const Vector gap = goal_ - x_;
    const double n = gap.norm();
    if (n <= ds_) {
      x_ = goal_;
      draw();
    } else {
      x_ += (ds_ / n) * gap;
    }
    return x_;
  }
  void reset(const Vector& x) override {
    x_ = x;
    draw();
  }

 private:
  void draw() { goal_ = clamped(dist::sample(p_, rng_), L_); }

  const dist::ReferenceDistribution& p_;
  double L_;
  double ds_;
  dist::Rng rng_;
  Vector x_;
  Vector goal_;
};

class PathMover final : public Mover {
 public:
  PathMover(std::vector<Vector> path, const Vector& x0, double ds)
      : base_(std::move(path)), ds_(ds), follower_(with_start(x0)) {}
  const Vector& position() const override { return follower_.position(); }
  const Vector& step() override { return follower_.advance(ds_); }
  void reset(const Vector& x) override { follower_ = PathFollower(with_start(x)); }

 private:
  std::vector<Vector> with_start(const Vector& x) const {
    std::vector<Vector> pts;
    pts.reserve(base_.size() + 1);
    if ((x - base_.front()).norm() > 0.0) pts.push_back(x);
    pts.insert(pts.end(), base_.begin(), base_.end());
    return pts;
  }

  std::vector<Vector> base_;
  double ds_;
  PathFollower follower_;
};

}  // namespace

std::unique_ptr<Mover> make_mover(const TrialSpec& spec) {
  spec.validate();
  const double ds = spec.u_max * spec.dt;
  const double gap = 2.0 * spec.target.radius;
  switch (spec.strategy) {
    case Strategy::ergodic: return std::make_unique<ErgodicMover>(spec);
    case Strategy::sampling: return std::make_unique<SamplingMover>(spec);
    case Strategy::spiral:
      return std::make_unique<PathMover>(spiral_path(spec.x0.size(), gap, spec.L), spec.x0, ds);
    case Strategy::gmm_spiral:
      return std::make_unique<PathMover>(
          gmm_spiral_path(std::get<dist::Gmm>(spec.distribution), gap, spec.L), spec.x0, ds);
  }
  throw ArgumentError("unknown strategy");
}

TrialResult run_trial(const TrialSpec& spec) {
  spec.validate();
  TrialResult r;
  const auto keep = [&](const Vector& x) {
    if (r.trajectory.size() < spec.trajectory_cap) r.trajectory.push_back(x);
  };
  keep(spec.x0);
  if (spec.target.contains(spec.x0)) {
    r.success = true;
    r.time_to_reach = 0.0;
    return r;
  }
  auto mover = make_mover(spec);
  const auto n = static_cast<std::int64_t>(std::ceil(spec.time_limit / spec.dt - 1e-9));
  Vector prev = spec.x0;
  for (std::int64_t s = 1; s <= n; ++s) {
    const Vector& x = mover->step();
    r.path_length += (x - prev).norm();
    prev = x;
    keep(x);
    if (spec.target.contains(x)) {
      r.success = true;
      r.time_to_reach = static_cast<double>(s) * spec.dt;
      break;
    }
  }
  return r;
}

CumulativeSeries cumulative_average_experiment(const TrialSpec& spec, std::size_t n_attempts) {
  if (n_attempts < 1) throw ArgumentError("need at least one attempt");
  spec.validate();
  CumulativeSeries out;
  if (spec.target.contains(spec.x0)) {
    out.average.assign(n_attempts, 0.0);
    return out;
  }
  auto mover = make_mover(spec);
  const auto limit = static_cast<std::int64_t>(std::ceil(spec.time_limit / spec.dt - 1e-9));
  std::int64_t total = 0;
  std::int64_t attempt = 0;
  while (out.average.size() < n_attempts) {
    const Vector& x = mover->step();
    ++attempt;
    if (spec.target.contains(x)) {
      total += attempt;
      attempt = 0;
      out.average.push_back(static_cast<double>(total) * spec.dt / static_cast<double>(out.average.size() + 1));
      mover->reset(spec.x0);
    } else if (attempt >= limit) {
      out.timed_out = true;
      break;
    }
  }
  return out;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  const auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
}

std::vector<SuiteCase> make_suite(const SuiteOptions& opt) {
  if (opt.d < 1 || opt.n_gmms < 1 || opt.trials < 1 || opt.components < 1) {
    throw ArgumentError("suite sizes must be positive");
  }
  const double sigma = std::sqrt(opt.variance);
  const double L = 1.0;
  if (6.0 * sigma >= L) throw ArgumentError("variance too large for the 3-sigma wall margin");
  dist::Rng rng(opt.seed);
  std::uniform_real_distribution<double> center(3.0 * sigma, L - 3.0 * sigma);
  const auto d = static_cast<Index>(opt.d);
  std::vector<SuiteCase> out;
  for (std::size_t g = 0; g < opt.n_gmms; ++g) {
    std::vector<Vector> means;
    for (std::size_t j = 0; j < opt.components; ++j) {
      Vector m(d);
      for (auto& v : m) v = center(rng);
      means.push_back(std::move(m));
    }
    dist::Gmm gmm(std::vector<double>(opt.components, 1.0 / static_cast<double>(opt.components)),
                  std::move(means),
                  std::vector<Matrix>(opt.components, opt.variance * Matrix::Identity(d, d)));
    std::vector<TargetRegion> targets;
    for (std::size_t t = 0; t < opt.trials; ++t) {
      targets.push_back(TargetRegion::from_volume_fraction(clamped(gmm.sample(rng), L), opt.volume_fraction, L));
    }
    out.push_back({std::move(gmm), std::move(targets)});
  }
  return out;
}

std::vector<StrategySummary> summarize(const std::vector<SuiteRow>& rows,
                                       const std::vector<Strategy>& strategies) {
  std::vector<StrategySummary> out;
  for (Strategy s : strategies) {
    StrategySummary sum{s};
    std::vector<double> times;
    for (const auto& r : rows) {
      if (r.strategy != s) continue;
      ++sum.trials;
      if (r.result.success) times.push_back(*r.result.time_to_reach);
    }
    sum.successes = times.size();
    if (!times.empty()) {
      double acc = 0.0;
      for (double t : times) acc += t;
      sum.mean_time = acc / static_cast<double>(times.size());
      double var = 0.0;
      for (double t : times) var += (t - sum.mean_time) * (t - sum.mean_time);
      if (times.size() > 1) sum.stddev_time = std::sqrt(var / static_cast<double>(times.size() - 1));
    }
    out.push_back(sum);
  }
  return out;
}

TrialSpec suite_trial(const SuiteOptions& opt, const SuiteCase& c, std::size_t g, std::size_t t,
                      Strategy s, std::shared_ptr<const fourier::CoefficientSet> coeffs) {
  const double L = 1.0;
  TrialSpec spec;
  spec.strategy = s;
  spec.distribution = c.gmm;
  spec.target = c.targets.at(t);
  spec.x0 = Vector::Constant(static_cast<Index>(opt.d), 0.5 * L);
  if (opt.d == 3) spec.x0(2) = 0.0;
  spec.time_limit = opt.time_limit;
  spec.u_max = opt.u_max;
  spec.dt = opt.dt;
  spec.L = L;
  spec.seed = splitmix(opt.seed ^ splitmix(g * 1000003ULL + t));
  spec.basis = fourier::BasisConfig{opt.d, opt.K, L, opt.N};
  spec.coeffs = std::move(coeffs);
  return spec;
}

SuiteReport run_suite(const SuiteOptions& opt) {
  const auto cases = make_suite(opt);
  const double L = 1.0;
  SuiteReport report;
  const fourier::BasisConfig basis{opt.d, opt.K, L, opt.N};
  std::vector<std::shared_ptr<const fourier::CoefficientSet>> coeffs(cases.size());
  const bool ergodic = std::find(opt.strategies.begin(), opt.strategies.end(), Strategy::ergodic) !=
                       opt.strategies.end();
  auto t0 = Clock::now();
  if (ergodic) {
    parallel_for(cases.size(), opt.workers, [&](std::size_t g) {
      coeffs[g] = std::make_shared<fourier::CoefficientSet>(fourier::compute_coefficients(cases[g].gmm, basis));
    });
  }
  report.seconds_preprocessing = seconds_since(t0);

  const std::size_t per_strategy = opt.n_gmms * opt.trials;
  report.rows.resize(opt.strategies.size() * per_strategy);
  t0 = Clock::now();
  parallel_for(report.rows.size(), opt.workers, [&](std::size_t i) {
    const Strategy s = opt.strategies[i / per_strategy];
    const std::size_t g = (i % per_strategy) / opt.trials;
    const std::size_t t = i % opt.trials;
    const TrialSpec spec = suite_trial(opt, cases[g], g, t, s, coeffs[g]);
    report.rows[i] = {s, g, t, run_trial(spec)};
  });
  report.seconds_trials = seconds_since(t0);
  report.summary = summarize(report.rows, opt.strategies);
  return report;
}

void write_suite_rows(std::ostream& out, const SuiteReport& r) {
  out << "# strategy gmm trial success time_to_reach[s] path_length[m]\n" << std::setprecision(10);
  for (const auto& row : r.rows) {
    out << strategy_name(row.strategy) << ' ' << row.gmm << ' ' << row.trial << ' ' << (row.result.success ? 1 : 0)
        << ' ';
    if (row.result.time_to_reach) {
      out << *row.result.time_to_reach;
    } else {
      out << "nan";
    }
    out << ' ' << row.result.path_length << '\n';
  }
}

void write_suite_summary(std::ostream& out, const SuiteReport& r) {
  out << "# strategy trials successes success_rate mean_time[s] stddev_time[s]\n" << std::setprecision(6);
  for (const auto& s : r.summary) {
    out << strategy_name(s.strategy) << ' ' << s.trials << ' ' << s.successes << ' '
        << (s.trials ? static_cast<double>(s.successes) / static_cast<double>(s.trials) : 0.0) << ' '
        << s.mean_time << ' ' << s.stddev_time << '\n';
  }
}

namespace {

void pin_to_current_cpu() {
  const int cpu = sched_getcpu();
  if (cpu < 0) return;
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(cpu, &set);
  (void)sched_setaffinity(0, sizeof(set), &set);
}

template <class E>
double mean_step_seconds(E& engine, std::size_t warmup, std::size_t steps) {
  for (std::size_t s = 0; s < warmup; ++s) engine.step();
  const auto t0 = Clock::now();
  for (std::size_t s = 0; s < steps; ++s) engine.step();
  return seconds_since(t0) / static_cast<double>(steps);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<BenchRow> bench_timing(const BenchOptions& opt) {
  if (opt.repetitions < 1 || opt.steps < 1) throw ArgumentError("bench needs repetitions and steps >= 1");
  pin_to_current_cpu();
  std::vector<BenchRow> rows;
  for (std::size_t d : opt.d_list) {
    if (d < 2) throw ArgumentError("bench dimensions must be >= 2");
    BenchRow row;
    row.d = d;
    const fourier::BasisConfig basis{d, opt.K, 1.0, opt.N};
    const dist::IsotropicGaussian p{Vector::Constant(static_cast<Index>(d), 0.5), opt.variance};
    fourier::PipelineOptions popt;
    popt.seed = opt.seed;
    auto t0 = Clock::now();
    auto coeffs = std::make_shared<fourier::CoefficientSet>(fourier::compute_coefficients(p, basis, popt));
    row.seconds_preprocessing = seconds_since(t0);

    ergodic::ErgodicConfig cfg;
    cfg.basis = basis;
    cfg.seed = opt.seed;
    cfg.metric_interval = 0;
    const Vector x0 = Vector::Constant(static_cast<Index>(d), 0.25);
    std::vector<double> tt_times;
    std::vector<double> dense_times;
    const bool dense = d <= opt.dense_max_d;
    tt::DenseTensor w_hat;
    tt::DenseTensor lambda;
    if (dense) {
      w_hat = tt::tt_to_dense(coeffs->w_hat);
      lambda = tt::tt_to_dense(coeffs->lambda);
    }
    // Interleaved so slow drift in machine load hits both loops alike.
    for (std::size_t rep = 0; rep < opt.repetitions; ++rep) {
      ergodic::Engine e(cfg, coeffs, x0);
      tt_times.push_back(mean_step_seconds(e, opt.warmup, opt.steps));
      row.params_w = e.w().parameter_count();
      row.w_rank_cap = e.rank_cap();
      if (dense) {
        ergodic::DenseEngine de(cfg, w_hat, lambda, x0);
        dense_times.push_back(mean_step_seconds(de, opt.warmup, opt.steps));
      }
    }
    row.tt_step = median(tt_times);
    if (dense) row.dense_step = median(dense_times);
    row.params_w_hat = coeffs->w_hat.parameter_count();
    row.params_lambda = coeffs->lambda.parameter_count();
    row.params_grad_phi = fourier::grad_phi_tensor(x0, 0, basis).parameter_count();
    rows.push_back(row);
  }
  return rows;
}

void write_bench(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "# d preprocess[s] tt_step[s] dense_step[s] params_w_hat params_lambda params_grad_phi params_w "
         "w_rank_cap\n"
      << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.d << ' ' << r.seconds_preprocessing << ' ' << r.tt_step << ' ';
    if (r.dense_step) {
      out << *r.dense_step;
    } else {
      out << "nan";
    }
    out << ' ' << r.params_w_hat << ' ' << r.params_lambda << ' ' << r.params_grad_phi << ' ' << r.params_w << ' '
        << r.w_rank_cap << '\n';
  }
}

Grid2 occupancy_histogram(std::span<const Vector> positions, std::size_t i, std::size_t j,
                          std::size_t bins, double L) {
  if (bins == 0 || !(L > 0.0)) throw ArgumentError("histogram needs bins > 0 and L > 0");
  Grid2 g{i, j, bins, L, std::vector<double>(bins * bins, 0.0)};
  if (positions.empty()) return g;
  auto cell = [&](double v) {
    const auto c = static_cast<std::ptrdiff_t>(std::floor(v / L * static_cast<double>(bins)));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(bins) - 1));
  };
  for (const auto& x : positions) {
    if (static_cast<std::size_t>(x.size()) <= std::max(i, j)) throw ShapeError("histogram axis out of range");
    g.at(cell(x(static_cast<Index>(i))), cell(x(static_cast<Index>(j)))) += 1.0;
  }
  for (double& v : g.values) v /= static_cast<double>(positions.size());
  return g;
}

Grid2 marginal_mass(const dist::ReferenceDistribution& p, std::size_t i, std::size_t j,
                    std::size_t bins, double L, int sub) {
  if (bins == 0 || sub <= 0 || !(L > 0.0)) throw ArgumentError("marginal grid needs bins, sub, L > 0");
  if (i == j || std::max(i, j) >= dist::dimension(p)) throw ArgumentError("marginal axes must be distinct and in range");
  const auto a = static_cast<Index>(i);
  const auto b = static_cast<Index>(j);
  // 2-D marginal density
  std::function<double(double, double)> pdf2;
  if (const auto* u = std::get_if<dist::Uniform>(&p)) {
    const double v = 1.0 / (u->L * u->L);
    pdf2 = [v](double, double) { return v; };
  } else if (const auto* ig = std::get_if<dist::IsotropicGaussian>(&p)) {
    const double m0 = ig->mean(a), m1 = ig->mean(b), var = ig->variance;
    pdf2 = [=](double x, double y) {
      const double r2 = (x - m0) * (x - m0) + (y - m1) * (y - m1);
      return std::exp(-0.5 * r2 / var) / (2.0 * std::numbers::pi * var);
    };
  } else {
    const auto& gmm = std::get<dist::Gmm>(p);
    std::vector<double> w;
    std::vector<Eigen::Vector2d> mu;
    std::vector<Eigen::Matrix2d> prec;
    std::vector<double> norm;
    for (std::size_t c = 0; c < gmm.size(); ++c) {
      const Vector& m = gmm.means()[c];
      const Matrix& S = gmm.covariances()[c];
      Eigen::Matrix2d S2;
      S2 << S(a, a), S(a, b), S(b, a), S(b, b);
      w.push_back(gmm.weights()[c]);
      mu.emplace_back(m(a), m(b));
      prec.push_back(S2.inverse());
      norm.push_back(1.0 / (2.0 * std::numbers::pi * std::sqrt(S2.determinant())));
    }
    pdf2 = [=](double x, double y) {
      double s = 0.0;
      for (std::size_t c = 0; c < w.size(); ++c) {
        const Eigen::Vector2d r = Eigen::Vector2d(x, y) - mu[c];
        s += w[c] * norm[c] * std::exp(-0.5 * r.dot(prec[c] * r));
      }
      return s;
    };
  }
  Grid2 g{i, j, bins, L, std::vector<double>(bins * bins, 0.0)};
  const double h = L / static_cast<double>(bins);
  const double hs = h / sub;
  for (std::size_t r = 0; r < bins; ++r) {
    for (std::size_t c = 0; c < bins; ++c) {
      double s = 0.0;
      for (int u = 0; u < sub; ++u) {
        for (int v = 0; v < sub; ++v) {
          s += pdf2(r * h + (u + 0.5) * hs, c * h + (v + 0.5) * hs);
        }
      }
      g.at(r, c) = s * hs * hs;
    }
  }
  return g;
}

double grid_correlation(const Grid2& a, const Grid2& b) {
  if (a.values.size() != b.values.size() || a.values.empty()) throw ShapeError("grids differ in size");
  const Eigen::Map<const Eigen::ArrayXd> x(a.values.data(), static_cast<Index>(a.values.size()));
  const Eigen::Map<const Eigen::ArrayXd> y(b.values.data(), static_cast<Index>(b.values.size()));
  const Eigen::ArrayXd dx = x - x.mean();
  const Eigen::ArrayXd dy = y - y.mean();
  const double den = std::sqrt((dx * dx).sum() * (dy * dy).sum());
  return den > 0.0 ? (dx * dy).sum() / den : 0.0;
}

void write_grid(std::ostream& out, const Grid2& g, const char* value_name) {
  out << "# x" << g.i << "_center x" << g.j << "_center " << value_name << "\n";
  out << std::setprecision(10);
  const double h = g.L / static_cast<double>(g.bins);
  for (std::size_t r = 0; r < g.bins; ++r) {
    for (std::size_t c = 0; c < g.bins; ++c) {
      out << (r + 0.5) * h << ' ' << (c + 0.5) * h << ' ' << g.at(r, c) << '\n';
    }
  }
}

}  // namespace ttergodic::sim
