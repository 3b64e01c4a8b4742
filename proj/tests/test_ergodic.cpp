#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "ttergodic/dist/distributions.hpp"
#include "ttergodic/ergodic/engine.hpp"
#include "ttergodic/errors.hpp"
#include "ttergodic/fourier/fourier.hpp"
#include "ttergodic/tt/ops.hpp"

using namespace ttergodic;
using namespace ttergodic::ergodic;

namespace {

std::shared_ptr<const fourier::CoefficientSet> gaussian_coeffs(std::size_t d, Index K) {
  const fourier::BasisConfig basis{d, K, 1.0, 10};
  return std::make_shared<const fourier::CoefficientSet>(
      fourier::compute_coefficients(dist::IsotropicGaussian{Vector::Constant(d, 0.5), 0.015}, basis));
}

ErgodicConfig config(const fourier::BasisConfig& basis, Index cap, Index headroom = 0) {
  ErgodicConfig c;
  c.basis = basis;
  c.w_rank_cap = cap;
  c.w_rank_headroom = headroom;
  return c;
}

}  // namespace

TEST(ControlLaw, UnitSpeedOpposingGradient) {
  Rng rng(1);
  const Vector b = Eigen::Vector2d(3.0, -4.0);
  const Vector u = control_law(b, 0.1, 1e-12, rng);
  EXPECT_NEAR(u.norm(), 0.1, 1e-15);
  EXPECT_NEAR(u.dot(b), -0.1 * 5.0, 1e-14);
  const Vector r = control_law(Vector::Zero(3), 0.2, 1e-12, rng);
  EXPECT_NEAR(r.norm(), 0.2, 1e-14);
}

TEST(ControlLaw, Clamp) {
  Vector x = Eigen::Vector3d(-0.1, 0.5, 1.2);
  clamp_to_domain(x, 1.0);
  EXPECT_EQ(x, Eigen::Vector3d(0.0, 0.5, 1.0));
}

TEST(Engine, StartsAtTheCoefficientNorm) {
  const auto c = gaussian_coeffs(2, 6);
  Engine e(config(c->config, 0), c, Eigen::Vector2d(0.2, 0.3));
  const double ref = tt::tt_inner(c->lambda, tt::tt_hadamard(c->w_hat, c->w_hat));
  EXPECT_NEAR(e.ergodic_metric(), ref, 1e-12 * ref);
  EXPECT_THROW(Engine(config(c->config, 0), c, Eigen::Vector2d(1.5, 0.3)), DomainError);
}

TEST(Engine, WIsTheRunningMeanOfVisitedBasisTensors) {
  // a 2-D tensor of size 5 x 5 has rank <= 5, so cap 5 is lossless
  const auto c = gaussian_coeffs(2, 5);
  Engine e(config(c->config, 5), c, Eigen::Vector2d(0.2, 0.3));
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(5, 5);
  const int n = 300;
  for (int s = 0; s < n; ++s) {
    e.step();
    const Vector a = fourier::basis_eval(e.position()(0), c->config);
    const Vector b = fourier::basis_eval(e.position()(1), c->config);
    mean += a * b.transpose();
  }
  mean /= n;
  const auto w = e.w();
  double err = 0.0;
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 5; ++j) err = std::max(err, std::abs(tt::tt_element(w, {i + 1, j + 1}) - mean(i, j)));
  }
  EXPECT_LT(err, 1e-10);
  EXPECT_NEAR(e.time(), n * 0.01, 1e-12);
}

TEST(Engine, LockstepWithDenseReference) {
  const auto c = gaussian_coeffs(2, 5);
  const auto cfg = config(c->config, 5);
  const Vector x0 = Eigen::Vector2d(0.2, 0.3);
  Engine tt_engine(cfg, c, x0);
  DenseEngine dense(cfg, tt::tt_to_dense(c->w_hat), tt::tt_to_dense(c->lambda), x0);
  double worst = 0.0;
  for (int s = 0; s < 500; ++s) {
    const auto a = tt_engine.step();
    const auto b = dense.step();
    worst = std::max(worst, (tt_engine.position() - dense.position()).norm());
    if (s % 50 == 0) {
      EXPECT_NEAR(a.xi, b.xi, 1e-9 * std::abs(b.xi) + 1e-14);
    }
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Engine, RankCapHoldsWithHeadroom) {
  const auto c = gaussian_coeffs(3, 6);
  for (Index headroom : {0, 2}) {
    auto cfg = config(c->config, 4, headroom);
    cfg.metric_interval = 0;
    Engine e(cfg, c, Eigen::Vector3d(0.5, 0.2, 0.7));
    for (int s = 0; s < 200; ++s) {
      e.step();
      ASSERT_LE(e.w().max_rank(), 4);
    }
  }
  auto bad = config(c->config, 4, -1);
  EXPECT_THROW(bad.validate(), ArgumentError);
}

TEST(Engine, MetricDecreases) {
  const auto c = gaussian_coeffs(2, 10);
  auto cfg = config(c->config, 0);
  cfg.metric_interval = 100;
  const auto traj = run(cfg, c, Eigen::Vector2d(0.2, 0.3), 60.0);
  EXPECT_EQ(traj.size(), 6000u);
  Engine e(cfg, c, Eigen::Vector2d(0.2, 0.3));
  const double xi0 = e.ergodic_metric();
  for (int s = 0; s < 6000; ++s) e.step();
  const auto& h = e.metric_history();
  // xi(0) plus one sample per 100 steps
  ASSERT_EQ(h.size(), 61u);
  EXPECT_DOUBLE_EQ(h.front().xi, xi0);
  EXPECT_LT(h.back().xi, 0.05 * xi0);
  EXPECT_LT(h.back().xi, h[10].xi);
  for (const auto& s : traj) {
    ASSERT_TRUE((s.x.array() >= 0.0).all() && (s.x.array() <= 1.0).all());
  }
}

TEST(Engine, StepsMoveAtMostUmaxDt) {
  const auto c = gaussian_coeffs(2, 8);
  const auto traj = run(config(c->config, 0), c, Eigen::Vector2d(0.0, 0.0), 5.0);
  Vector prev = Eigen::Vector2d(0.0, 0.0);
  for (const auto& s : traj) {
    EXPECT_LE((s.x - prev).norm(), 0.1 * 0.01 + 1e-15);
    prev = s.x;
  }
}
