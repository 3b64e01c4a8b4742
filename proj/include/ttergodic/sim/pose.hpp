#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ttergodic/dist/distributions.hpp"
#include "ttergodic/ergodic/engine.hpp"
#include "ttergodic/fourier/fourier.hpp"
#include "ttergodic/manifold/quaternion.hpp"
#include "ttergodic/sim/sim.hpp"

namespace ttergodic::sim {

/// A pose exploration problem. The GMM lives in task coordinates
/// [p, Log_anchor(q)] and `map` sends the task box onto [0, L]^6.
struct PoseProblem {
  manifold::UnitQuaternion anchor;
  dist::Gmm task_gmm;
  dist::DomainMap map;

  dist::Gmm mapped_gmm() const { return map.forward(task_gmm); }
};

/// Bounding box of the encoded poses grown by `pad` times its extent on each
/// side. Degenerate axes get a width of 2 * min_half_width.
dist::DomainMap pose_box(std::span<const Vector> encoded, double pad = 0.1,
                         double min_half_width = 0.05);

/// Anchor from the Riemannian mean of the orientations, box from the data.
PoseProblem pose_problem(std::span<const manifold::Pose> poses, dist::Gmm task_gmm,
                         double pad = 0.1);

struct SyntheticPoseOptions {
  std::size_t components = 8;
  std::size_t samples_per_component = 60;
  /// Orientation clusters are drawn within this tangent radius of a random
  /// base rotation.
  double orientation_spread = 0.6;
  double position_std = 0.04;
  double orientation_std = 0.06;
  std::uint64_t seed = 42;
};

struct SyntheticPoses {
  std::vector<manifold::Pose> poses;
  std::vector<std::size_t> labels;
  PoseProblem problem;
};

/// Labelled demonstration-like poses. The GMM is the per-cluster sample mean
/// and covariance in the tangent space of the data mean, plus a small ridge.
SyntheticPoses synthetic_pose_dataset(const SyntheticPoseOptions& opt = {});

/// Runs the ergodic engine in the mapped 6D box and decodes every step.
class PoseExplorer {
 public:
  PoseExplorer(const PoseProblem& problem, const ergodic::ErgodicConfig& cfg,
               std::shared_ptr<const fourier::CoefficientSet> coeffs,
               const manifold::Pose& start);

  const manifold::Pose& step();
  const manifold::Pose& pose() const noexcept { return pose_; }
  /// Largest |norm(q) - 1| seen so far.
  double max_norm_error() const noexcept { return max_norm_error_; }
  const ergodic::Engine& engine() const noexcept { return engine_; }

 private:
  void decode();

  manifold::UnitQuaternion anchor_;
  dist::DomainMap map_;
  ergodic::Engine engine_;
  manifold::Pose pose_;
  double max_norm_error_ = 0.0;
};

}  // namespace ttergodic::sim
