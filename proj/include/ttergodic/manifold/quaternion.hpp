#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ttergodic::manifold {

using Vec3 = Eigen::Vector3d;
using Vector = Eigen::VectorXd;

/// Unit quaternion [qs, qv]. Normalized on construction.
class UnitQuaternion {
 public:
  UnitQuaternion() = default;
  /// Throws DomainError for a zero or non-finite input.
  UnitQuaternion(double qs, const Vec3& qv);
  UnitQuaternion(double w, double x, double y, double z) : UnitQuaternion(w, Vec3(x, y, z)) {}

  static UnitQuaternion identity() { return {}; }

  double scalar() const noexcept { return qs_; }
  const Vec3& vec() const noexcept { return qv_; }
  double norm() const noexcept;

  UnitQuaternion conjugate() const;
  UnitQuaternion operator-() const;
  UnitQuaternion operator*(const UnitQuaternion& o) const;

 private:
  double qs_ = 1.0;
  Vec3 qv_ = Vec3::Zero();
};

/// Log map at the identity. q and -q give the same vector, whose norm is at
/// most pi/2.
Vec3 qlog(const UnitQuaternion& q);
/// Log_g(q) = qlog(conj(g) * q).
Vec3 qlog_at(const UnitQuaternion& g, const UnitQuaternion& q);
UnitQuaternion qexp(const Vec3& v);
/// g * qexp(v).
UnitQuaternion qexp_at(const UnitQuaternion& g, const Vec3& v);

/// True when p and q are the same rotation (q = +-p) within tol.
bool same_rotation(const UnitQuaternion& p, const UnitQuaternion& q, double tol);

struct MeanOptions {
  double tol = 1e-9;
  int max_iter = 100;
};

struct MeanResult {
  UnitQuaternion mean;
  int iterations = 0;
  double residual = 0.0;
};

/// Riemannian mean by iterated tangent averaging, started at the first
/// element. Throws ConvergenceError after max_iter, and DomainError when the
/// points straddle the cut locus of the result.
MeanResult qmean(std::span<const UnitQuaternion> qs, const MeanOptions& opts = {});

struct Pose {
  Vec3 position = Vec3::Zero();
  UnitQuaternion orientation;
};

/// [p, Log_anchor(q)].
Vector pose_encode(const Pose& pose, const UnitQuaternion& anchor);
Pose pose_decode(const Eigen::Ref<const Vector>& x6, const UnitQuaternion& anchor);

/// Encodes a whole dataset. Throws DomainError if any orientation sits on the
/// cut locus of the anchor (tangent norm within 1e-9 of pi/2).
std::vector<Vector> encode_dataset(std::span<const Pose> poses, const UnitQuaternion& anchor);

/// Rows `px py pz qw qx qy qz`; quaternions off unit norm by more than 1e-3
/// are rejected, the rest renormalized.
std::vector<Pose> parse_poses(std::istream& in, const std::string& source);
std::vector<Pose> load_poses(const std::filesystem::path& path);
void write_poses(std::ostream& out, std::span<const Pose> poses);

}  // namespace ttergodic::manifold
