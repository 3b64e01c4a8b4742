#include "ttergodic/sim/pose.hpp"

#include <cmath>
#include <random>

#include "ttergodic/errors.hpp"

namespace ttergodic::sim {

using manifold::Pose;
using manifold::UnitQuaternion;
using manifold::Vec3;

dist::DomainMap pose_box(std::span<const Vector> encoded, double pad, double min_half_width) {
  if (encoded.empty()) throw ArgumentError("pose box needs at least one encoded pose");
  if (!(pad >= 0.0) || !(min_half_width > 0.0)) {
    throw ArgumentError("pose box padding must be non-negative and the minimum width positive");
  }
  Vector lo = encoded.front();
  Vector hi = encoded.front();
  for (const auto& x : encoded) {
    if (x.size() != 6) throw ShapeError("encoded poses must be 6-vectors");
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  for (Index i = 0; i < 6; ++i) {
    const double grow = pad * (hi(i) - lo(i));
    const double mid = 0.5 * (lo(i) + hi(i));
    const double half = std::max(0.5 * (hi(i) - lo(i)) + grow, min_half_width);
    lo(i) = mid - half;
    hi(i) = mid + half;
  }
  return dist::DomainMap(lo, hi);
}

PoseProblem pose_problem(std::span<const Pose> poses, dist::Gmm task_gmm, double pad) {
  if (poses.empty()) throw ArgumentError("pose dataset is empty");
  if (task_gmm.dim() != 6) throw ShapeError("pose GMM must be 6-dimensional");
  std::vector<UnitQuaternion> qs;
  qs.reserve(poses.size());
  for (const auto& p : poses) qs.push_back(p.orientation);
  const UnitQuaternion anchor = manifold::qmean(qs).mean;
  const auto encoded = manifold::encode_dataset(poses, anchor);
  return {anchor, std::move(task_gmm), pose_box(encoded, pad)};
}

SyntheticPoses synthetic_pose_dataset(const SyntheticPoseOptions& opt) {
  if (opt.components == 0 || opt.samples_per_component < 8) {
    throw ArgumentError("synthetic poses need components > 0 and at least 8 samples each");
  }
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  auto gauss3 = [&] { return Vec3(normal(rng), normal(rng), normal(rng)); };

  const UnitQuaternion base(normal(rng), gauss3());
  std::vector<Pose> poses;
  std::vector<std::size_t> labels;
  for (std::size_t j = 0; j < opt.components; ++j) {
    const Vec3 center = Vec3::NullaryExpr([&] { return 0.2 + 0.6 * unit(rng); });
    const Vec3 dir = gauss3().normalized();
    const UnitQuaternion q_center =
        manifold::qexp_at(base, dir * opt.orientation_spread * std::cbrt(unit(rng)));
    // per-axis spread so the clusters are not all round
    const Vec3 ps = Vec3::NullaryExpr([&] { return 0.5 + unit(rng); });
    const Vec3 os = Vec3::NullaryExpr([&] { return 0.5 + unit(rng); });
    for (std::size_t s = 0; s < opt.samples_per_component; ++s) {
      Pose p;
      p.position = center + opt.position_std * ps.cwiseProduct(gauss3());
      p.orientation = manifold::qexp_at(q_center, opt.orientation_std * os.cwiseProduct(gauss3()));
      poses.push_back(p);
      labels.push_back(j);
    }
  }

  std::vector<UnitQuaternion> qs;
  for (const auto& p : poses) qs.push_back(p.orientation);
  const UnitQuaternion anchor = manifold::qmean(qs).mean;
  const auto encoded = manifold::encode_dataset(poses, anchor);

  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  const double n = static_cast<double>(opt.samples_per_component);
  for (std::size_t j = 0; j < opt.components; ++j) {
    Vector mu = Vector::Zero(6);
    for (std::size_t i = 0; i < poses.size(); ++i) {
      if (labels[i] == j) mu += encoded[i];
    }
    mu /= n;
    Matrix cov = Matrix::Zero(6, 6);
    for (std::size_t i = 0; i < poses.size(); ++i) {
      if (labels[i] != j) continue;
      const Vector c = encoded[i] - mu;
      cov += c * c.transpose();
    }
    cov /= n - 1.0;
    cov.diagonal().array() += 1e-5;
    weights.push_back(1.0 / static_cast<double>(opt.components));
    means.push_back(std::move(mu));
    covs.push_back(std::move(cov));
  }
  dist::Gmm gmm(std::move(weights), std::move(means), std::move(covs));
  dist::DomainMap box = pose_box(encoded);
  return {std::move(poses), std::move(labels), {anchor, std::move(gmm), std::move(box)}};
}

PoseExplorer::PoseExplorer(const PoseProblem& problem, const ergodic::ErgodicConfig& cfg,
                           std::shared_ptr<const fourier::CoefficientSet> coeffs,
                           const Pose& start)
    : anchor_(problem.anchor),
      map_(problem.map),
      engine_(cfg, std::move(coeffs), [&] {
        if (cfg.basis.d != 6) throw ArgumentError("pose exploration needs a 6-D basis");
        Vector x = problem.map.forward(manifold::pose_encode(start, problem.anchor));
        ergodic::clamp_to_domain(x, cfg.basis.L);
        return x;
      }()) {
  decode();
}

void PoseExplorer::decode() {
  pose_ = manifold::pose_decode(map_.inverse(engine_.position()), anchor_);
  max_norm_error_ = std::max(max_norm_error_, std::abs(pose_.orientation.norm() - 1.0));
}

const Pose& PoseExplorer::step() {
  engine_.step();
  decode();
  return pose_;
}

}  // namespace ttergodic::sim
