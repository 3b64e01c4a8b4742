// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset. Exit status is nonzero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "ttergodic/dist/distributions.hpp"
#include "ttergodic/ergodic/engine.hpp"
#include "ttergodic/fourier/fourier.hpp"
#include "ttergodic/manifold/quaternion.hpp"
#include "ttergodic/sim/pose.hpp"
#include "ttergodic/sim/sim.hpp"
#include "ttergodic/tt/ops.hpp"
#include "ttergodic/tt/round.hpp"

using namespace ttergodic;
using tt::Index;
using tt::ToleranceSpec;
using tt::TtTensor;
using testing::dense_values;
using testing::frob;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Random TT whose ranks are all attainable (r_i <= r_{i-1} K_i and
// r_i <= K_{i+1} r_{i+1}), so with Gaussian cores the stored ranks are the
// true ranks.
TtTensor corpus_tensor(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dd(1, 4);
  std::uniform_int_distribution<Index> kk(1, 6), rr(1, 4);
  const std::size_t d = dd(rng);
  std::vector<Index> modes(d), r(d + 1, 1);
  for (auto& k : modes) k = kk(rng);
  for (std::size_t i = 1; i < d; ++i) r[i] = std::min(rr(rng), r[i - 1] * modes[i - 1]);
  for (std::size_t i = d - 1; i >= 1; --i) r[i] = std::min(r[i], modes[i] * r[i + 1]);
  return testing::random_tt(modes, std::vector<Index>(r.begin() + 1, r.end() - 1), rng);
}

std::vector<TtTensor> corpus() {
  std::mt19937_64 rng(20210601);
  std::vector<TtTensor> out;
  for (int i = 0; i < 200; ++i) out.push_back(corpus_tensor(rng));
  return out;
}

TtTensor same_shape(const TtTensor& a, std::mt19937_64& rng) {
  const auto modes = a.mode_sizes();
  std::uniform_int_distribution<Index> rr(1, 4);
  std::vector<Index> r(modes.size() - 1);
  for (auto& v : r) v = rr(rng);
  return testing::random_tt(modes, r, rng);
}

// Largest of |x - y| / max(1, |y|), i.e. 1e-10 absolute or relative.
double mixed_error(const std::vector<double>& x, const std::vector<double>& y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]) / std::max(1.0, std::abs(y[i])));
  return m;
}

double mixed_error(double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); }

Verdict c1() {
  const auto t0 = Clock::now();
  const auto tensors = corpus();
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (const auto& a : tensors) {
    const auto b = same_shape(a, rng);
    const auto da = dense_values(a), db = dense_values(b);
    std::vector<double> sum(da.size()), prod(da.size()), scaled(da.size());
    double inner = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
      sum[i] = da[i] + db[i];
      prod[i] = da[i] * db[i];
      scaled[i] = -2.5 * da[i];
      inner += da[i] * db[i];
    }
    worst = std::max(worst, mixed_error(dense_values(tt::tt_add(a, b)), sum));
    worst = std::max(worst, mixed_error(dense_values(tt::tt_scale(-2.5, a)), scaled));
    worst = std::max(worst, mixed_error(dense_values(tt::tt_hadamard(a, b)), prod));
    worst = std::max(worst, mixed_error(tt::tt_inner(a, b), inner));
    worst = std::max(worst, mixed_error(tt::tt_norm(a), frob(da)));
    worst = std::max(worst, mixed_error(dense_values(tt::tt_round(a, ToleranceSpec::accuracy(1e-12))), da));
    // every element through the indexed accessor, row-major like dense_values
    const auto modes = a.mode_sizes();
    std::vector<Index> k(modes.size(), 0);
    std::size_t n = 0;
    do {
      const auto one = tt::IndexTuple::from_zero_based(k);
      worst = std::max(worst, mixed_error(tt::tt_element(a, one), da[n++]));
    } while (tt::next_index(k, modes));
  }
  const double s = seconds_since(t0);
  return {worst <= 1e-10 && s < 60.0, fmt("200 tensors, worst deviation %.2e (limit 1e-10), %.2f s (limit 60 s)", worst, s)};
}

Verdict c2() {
  const auto tensors = corpus();
  double worst_ratio = 0.0;
  int rank_misses = 0;
  for (const auto& a : tensors) {
    const auto da = dense_values(a);
    const double na = frob(da);
    for (double eps : {1e-1, 1e-2, 1e-6}) {
      auto diff = dense_values(tt::tt_round(a, ToleranceSpec::accuracy(eps)));
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= da[i];
      worst_ratio = std::max(worst_ratio, frob(diff) / (eps * na));
    }
    const auto r = tt::tt_round(tt::tt_add(a, a), ToleranceSpec::accuracy(1e-12));
    if (r.ranks() != a.ranks()) ++rank_misses;
  }
  return {worst_ratio <= 1.0 && rank_misses == 0,
          fmt("worst |round(A)-A| / (eps |A|) = %.3f (limit 1); round(A+A) rank mismatches %d/200", worst_ratio,
              rank_misses)};
}

Verdict c3() {
  bool ok = true;
  std::string detail;
  for (std::size_t d : {3u, 4u, 5u}) {
    const fourier::BasisConfig cfg{d, 10, 1.0, 10};
    const auto t0 = Clock::now();
    const auto lam = fourier::lambda_tensor(cfg);
    const double s = seconds_since(t0);
    const auto dense = dense_values(lam);
    std::vector<Index> k(d, 0);
    const std::vector<Index> modes(d, 10);
    double err = 0.0, ref = 0.0;
    std::size_t n = 0;
    do {
      const double v = fourier::lambda_value(tt::IndexTuple::from_zero_based(k));
      err += (dense[n] - v) * (dense[n] - v);
      ref += v * v;
      ++n;
    } while (tt::next_index(k, modes));
    const double rel = std::sqrt(err / ref);
    ok = ok && rel < 1e-2 && s < 1.0 && lam.max_rank() <= 2;
    detail += fmt("d=%zu rank %ld error %.3e %.3f s; ", d, static_cast<long>(lam.max_rank()), rel, s);
  }
  return {ok, detail + "(limits: rank 2, error 1e-2, 1 s)"};
}

Verdict c4() {
  bool ok = true;
  double worst = 0.0, tt_seconds = 0.0, oracle_seconds = 0.0;
  double family[3] = {0.0, 0.0, 0.0};
  for (std::size_t d : {1u, 2u, 3u}) {
    const fourier::BasisConfig cfg{d, 5, 1.0, 10};
    std::vector<double> w{0.5, 0.5};
    std::vector<Eigen::VectorXd> mu{Eigen::VectorXd::Constant(d, 0.3), Eigen::VectorXd::Constant(d, 0.65)};
    std::vector<Eigen::MatrixXd> cov{Eigen::MatrixXd::Identity(d, d) * 0.005, Eigen::MatrixXd::Identity(d, d) * 0.005};
    const std::vector<dist::ReferenceDistribution> ps{
        dist::Uniform{d, 1.0}, dist::IsotropicGaussian{Eigen::VectorXd::Constant(d, 0.5), 0.015},
        dist::Gmm(w, mu, cov)};
    for (std::size_t f = 0; f < ps.size(); ++f) {
      const auto& p = ps[f];
      auto t0 = Clock::now();
      const auto c = fourier::compute_coefficients(p, cfg);
      const double ts = seconds_since(t0);
      t0 = Clock::now();
      const auto oracle = fourier::fourier_coeffs_oracle(p, cfg);
      const double os = seconds_since(t0);
      const auto got = tt::tt_to_dense(c.w_hat);
      for (Index i = 0; i < got.size(); ++i) family[f] = std::max(family[f], std::abs(got.values()[i] - oracle.values()[i]));
      worst = std::max(worst, family[f]);
      if (d == 3) {
        tt_seconds += ts;
        oracle_seconds += os;
      }
    }
  }
  const double speedup = oracle_seconds / tt_seconds;
  ok = worst <= 1e-3 && tt_seconds < 30.0 && speedup > 100.0;
  return {ok, fmt("worst entry error uniform %.1e, gaussian %.1e, gmm %.1e (limit 1e-3); d=3 TT %.3f s vs oracle %.2f s, speedup %.0fx (limit 100x)",
                  family[0], family[1], family[2], tt_seconds, oracle_seconds, speedup)};
}

Verdict c5() {
  std::string detail;
  bool ok = true;
  for (std::size_t d : {5u, 6u, 7u}) {
    const fourier::BasisConfig cfg{d, 10, 1.0, 10};
    const auto g = fourier::grad_phi_tensor(Eigen::VectorXd::Constant(d, 0.3), 0, cfg);
    const auto w = fourier::compute_coefficients(dist::Uniform{d, 1.0}, cfg).w_hat;
    const Index want = static_cast<Index>(10 * d);
    ok = ok && g.parameter_count() == want && w.parameter_count() == want;
    detail += fmt("d=%zu gradPhi %ld What %ld (want %ld); ", d, static_cast<long>(g.parameter_count()),
                  static_cast<long>(w.parameter_count()), static_cast<long>(want));
  }
  return {ok, detail};
}

Verdict c6() {
  sim::BenchOptions opt;
  opt.d_list = {2, 5, 10};
  opt.K = 5;
  opt.variance = 0.015;
  // best of three runs per d, so one noisy window cannot decide the ratio
  std::vector<double> tt(3, INFINITY), dense(3, INFINITY);
  for (int run = 0; run < 3; ++run) {
    const auto rows = sim::bench_timing(opt);
    for (std::size_t i = 0; i < 3; ++i) {
      tt[i] = std::min(tt[i], rows[i].tt_step);
      if (rows[i].dense_step) dense[i] = std::min(dense[i], *rows[i].dense_step);
    }
  }
  const double ratio = tt[2] / tt[0];
  return {ratio <= 10.0 && tt[1] <= dense[1],
          fmt("step time d=2 %.2f us, d=10 %.2f us, ratio %.1f (limit 10); d=5 TT %.2f us vs dense %.2f us",
              tt[0] * 1e6, tt[2] * 1e6, ratio, tt[1] * 1e6, dense[1] * 1e6)};
}

Verdict c7() {
  const dist::IsotropicGaussian p{Eigen::Vector2d(0.5, 0.5), 0.015};
  const fourier::BasisConfig basis{2, 20, 1.0, 30};
  auto coeffs = std::make_shared<const fourier::CoefficientSet>(fourier::compute_coefficients(p, basis));
  ergodic::ErgodicConfig cfg;
  cfg.basis = basis;
  cfg.metric_interval = 100;
  const auto traj = ergodic::run(cfg, coeffs, Eigen::Vector2d(0.2, 0.3), 100.0);
  double xi1 = NAN;
  std::vector<Eigen::VectorXd> xs;
  for (const auto& s : traj) {
    xs.push_back(s.x);
    if (std::abs(s.t - 1.0) < 1e-9) xi1 = s.xi;
  }
  const double xiT = traj.back().xi;
  const double corr = sim::grid_correlation(sim::occupancy_histogram(xs, 0, 1, 30, 1.0),
                                            sim::marginal_mass(p, 0, 1, 30, 1.0));
  return {xiT < 0.2 * xi1 && corr >= 0.8,
          fmt("xi(1 s) %.4g, xi(100 s) %.4g, ratio %.4f (limit 0.2); 30x30 occupancy correlation %.3f (limit 0.8)",
              xi1, xiT, xiT / xi1, corr)};
}

Verdict c8() {
  const fourier::BasisConfig basis{2, 5, 1.0, 10};
  const auto c = std::make_shared<const fourier::CoefficientSet>(
      fourier::compute_coefficients(dist::IsotropicGaussian{Eigen::Vector2d(0.4, 0.6), 0.015}, basis));
  ergodic::ErgodicConfig cfg;
  cfg.basis = basis;
  cfg.w_rank_cap = 5;
  cfg.seed = 17;
  const Eigen::Vector2d x0(0.2, 0.3);
  ergodic::Engine a(cfg, c, x0);
  ergodic::DenseEngine b(cfg, tt::tt_to_dense(c->w_hat), tt::tt_to_dense(c->lambda), x0);
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    a.step();
    b.step();
    worst = std::max(worst, (a.position() - b.position()).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6, fmt("1000 steps, max coordinate deviation %.2e (limit 1e-6)", worst)};
}

Verdict c9() {
  bool ok = true;
  std::string detail;
  const auto t0 = Clock::now();
  for (std::size_t d : {2u, 3u}) {
    sim::SuiteOptions opt;
    opt.d = d;
    const auto rep = sim::run_suite(opt);
    const auto& s = rep.summary;
    const auto& erg = *std::find_if(s.begin(), s.end(), [](const auto& r) { return r.strategy == sim::Strategy::ergodic; });
    bool fastest = true;
    detail += fmt("%zuD:", d);
    for (const auto& row : s) {
      detail += fmt(" %s %zu/%zu %.1f s", sim::strategy_name(row.strategy), row.successes, row.trials, row.mean_time);
      if (row.strategy != sim::Strategy::ergodic && !(erg.mean_time < row.mean_time)) fastest = false;
    }
    detail += "; ";
    ok = ok && erg.successes == erg.trials && fastest;
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 600.0;
  return {ok, detail + fmt("%.1f s total (limit 600 s)", secs)};
}

Verdict c10() {
  sim::SuiteOptions opt;
  const auto cases = sim::make_suite(opt);
  const auto erg_spec = sim::suite_trial(opt, cases[0], 0, 0, sim::Strategy::ergodic);
  const auto smp_spec = sim::suite_trial(opt, cases[0], 0, 0, sim::Strategy::sampling);
  const auto erg = sim::cumulative_average_experiment(erg_spec, 50);
  const auto smp = sim::cumulative_average_experiment(smp_spec, 50);
  const double straight = (erg_spec.x0 - erg_spec.target.center).norm() / erg_spec.u_max;
  // least-squares slope over attempts 5..n
  const auto& a = erg.average;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = 4; i < a.size(); ++i) {
    const double x = static_cast<double>(i + 1);
    sx += x;
    sy += a[i];
    sxx += x * x;
    sxy += x * a[i];
    n += 1;
  }
  const double slope = n > 1 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : NAN;
  const bool complete = !erg.timed_out && a.size() == 50;
  const double final_erg = a.empty() ? NAN : a.back();
  const double final_smp = smp.average.empty() || smp.timed_out ? INFINITY : smp.average.back();
  const bool near = std::abs(final_erg - straight) <= 0.25 * straight;
  return {complete && slope < 0 && near && final_smp > final_erg,
          fmt("ergodic %zu attempts, slope from attempt 5 %.4f (limit < 0), final %.2f s vs straight line %.2f s "
              "(limit 25%%: %s); sampling final %.2f s (must exceed ergodic)",
              a.size(), slope, final_erg, straight, near ? "met" : "missed", final_smp)};
}

Verdict c11() {
  using namespace manifold;
  std::mt19937_64 rng(1111);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  const auto rq = [&] { return UnitQuaternion(nd(rng), nd(rng), nd(rng), nd(rng)); };
  const auto rv = [&](double r) {
    const Vec3 v(nd(rng), nd(rng), nd(rng));
    return Vec3(v.normalized() * r * std::cbrt(ud(rng)));
  };
  double e1 = 0.0, e2 = 0.0, e3 = 0.0, e4 = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 v = rv(std::acos(-1.0) / 2 - 1e-3);
    e1 = std::max(e1, (qlog(qexp(v)) - v).norm());
    const auto q = rq();
    const auto back = qexp(qlog(q));
    const double dp = std::hypot(back.scalar() - q.scalar(), (back.vec() - q.vec()).norm());
    const double dm = std::hypot(back.scalar() + q.scalar(), (back.vec() + q.vec()).norm());
    e2 = std::max(e2, std::min(dp, dm));
    const auto p = rq();
    e3 = std::max(e3, (qlog(p) - qlog(-p)).norm());
  }
  for (int set = 0; set < 100; ++set) {
    const auto center = rq();
    std::vector<UnitQuaternion> cloud;
    for (int i = 0; i < 50; ++i) cloud.push_back(qexp_at(center, rv(0.6)));
    const auto m = qmean(cloud).mean;
    Vec3 acc = Vec3::Zero();
    for (const auto& q : cloud) acc += qlog_at(m, q);
    e4 = std::max(e4, (acc / 50.0).norm());
  }
  return {e1 <= 1e-9 && e2 <= 1e-9 && e3 <= 1e-9 && e4 <= 1e-9,
          fmt("log(exp v) %.1e, exp(log q) %.1e, antipodal %.1e, mean residual %.1e (limits 1e-9)", e1, e2, e3, e4)};
}

Verdict c12() {
  const auto t0 = Clock::now();
  const auto data = sim::synthetic_pose_dataset({});
  ergodic::ErgodicConfig cfg;
  cfg.basis = {6, 10, 1.0, 10};
  cfg.metric_interval = 0;
  // same as the pose-explore default: truncate W to half the cap
  cfg.w_rank_headroom = 99;
  auto coeffs = std::make_shared<const fourier::CoefficientSet>(
      fourier::compute_coefficients(data.problem.mapped_gmm(), cfg.basis));
  const double pre = seconds_since(t0);
  sim::PoseExplorer ex(data.problem, cfg, coeffs, data.poses.front());
  double worst_norm = 0.0, slowest = INFINITY;
  const int steps = 10000, window = 1000;
  const auto start = Clock::now();
  auto w0 = start;
  for (int s = 1; s <= steps; ++s) {
    ex.step();
    worst_norm = std::max(worst_norm, std::abs(ex.pose().orientation.norm() - 1.0));
    if (s % window == 0) {
      slowest = std::min(slowest, window / seconds_since(w0));
      w0 = Clock::now();
    }
  }
  const double rate = steps / seconds_since(start);
  return {data.problem.task_gmm.size() == 8 && rate >= 100.0 && slowest >= 100.0 && worst_norm <= 1e-9 &&
              ex.max_norm_error() <= 1e-9,
          fmt("8-component GMM, %d steps at %.0f steps/s, slowest 1000-step window %.0f steps/s (limit 100), "
              "norm error %.1e (limit 1e-9), preprocessing %.1f s",
              steps, rate, slowest, std::max(worst_norm, ex.max_norm_error()), pre)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"TT oracle equivalence", c1},   {"TT rounding contract", c2},    {"Lambda rank-2 accuracy", c3},
      {"Coefficient tensor vs oracle", c4}, {"Parameter counts", c5}, {"Loop-time scaling", c6},
      {"Ergodicity", c7},              {"Lockstep dense equivalence", c8}, {"Strategy suite", c9},
      {"Cumulative average", c10},     {"Manifold suite", c11},         {"Pose pipeline", c12},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
