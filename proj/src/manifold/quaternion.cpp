#include "ttergodic/manifold/quaternion.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "ttergodic/errors.hpp"

namespace ttergodic::manifold {

UnitQuaternion::UnitQuaternion(double qs, const Vec3& qv) {
  const double n = std::sqrt(qs * qs + qv.squaredNorm());
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("quaternion must be finite and nonzero");
  qs_ = qs / n;
  qv_ = qv / n;
}

double UnitQuaternion::norm() const noexcept { return std::sqrt(qs_ * qs_ + qv_.squaredNorm()); }

UnitQuaternion UnitQuaternion::conjugate() const { return {qs_, -qv_}; }

UnitQuaternion UnitQuaternion::operator-() const { return {-qs_, -qv_}; }

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& o) const {
  return {qs_ * o.qs_ - qv_.dot(o.qv_), qs_ * o.qv_ + o.qs_ * qv_ + qv_.cross(o.qv_)};
}

Vec3 qlog(const UnitQuaternion& q) {
  // Modified arc-cosine: pick the representative with qs >= 0, then use atan2,
  // which stays accurate near the identity where acos does not.
  double s = q.scalar();
  Vec3 v = q.vec();
  if (s < 0.0) {
    s = -s;
    v = -v;
  }
  const double n = v.norm();
  if (n < 1e-12) return Vec3::Zero();
  return (std::atan2(n, s) / n) * v;
}

Vec3 qlog_at(const UnitQuaternion& g, const UnitQuaternion& q) { return qlog(g.conjugate() * q); }

UnitQuaternion qexp(const Vec3& v) {
  const double n = v.norm();
  if (n == 0.0) return UnitQuaternion::identity();
  return {std::cos(n), (std::sin(n) / n) * v};
}

UnitQuaternion qexp_at(const UnitQuaternion& g, const Vec3& v) { return g * qexp(v); }

bool same_rotation(const UnitQuaternion& p, const UnitQuaternion& q, double tol) {
  const auto close = [tol](const UnitQuaternion& a, const UnitQuaternion& b) {
    return std::abs(a.scalar() - b.scalar()) <= tol && (a.vec() - b.vec()).cwiseAbs().maxCoeff() <= tol;
  };
  return close(p, q) || close(p, -q);
}

namespace {

constexpr double kCutLocus = std::numbers::pi / 2.0 - 1e-9;

}  // namespace

MeanResult qmean(std::span<const UnitQuaternion> qs, const MeanOptions& opts) {
  if (qs.empty()) throw ArgumentError("qmean needs at least one quaternion");
  if (!(opts.tol > 0.0) || opts.max_iter < 1) throw ArgumentError("qmean needs tol > 0 and max_iter >= 1");
  MeanResult r{qs.front(), 0, 0.0};
  const double inv = 1.0 / static_cast<double>(qs.size());
  while (true) {
    Vec3 m = Vec3::Zero();
    for (const auto& q : qs) m += qlog_at(r.mean, q);
    m *= inv;
    ++r.iterations;
    r.residual = m.norm();
    if (r.residual <= opts.tol) break;
    if (r.iterations >= opts.max_iter) {
      throw ConvergenceError("quaternion mean did not converge", r.residual);
    }
    r.mean = qexp_at(r.mean, m);
  }
  for (const auto& q : qs) {
    if (qlog_at(r.mean, q).norm() >= kCutLocus) {
      throw DomainError("quaternions straddle the cut locus of their mean");
    }
  }
  return r;
}

Vector pose_encode(const Pose& pose, const UnitQuaternion& anchor) {
  Vector x(6);
  x.head<3>() = pose.position;
  x.tail<3>() = qlog_at(anchor, pose.orientation);
  return x;
}

Pose pose_decode(const Eigen::Ref<const Vector>& x6, const UnitQuaternion& anchor) {
  if (x6.size() != 6) throw ShapeError("pose vector must have 6 entries");
  return {x6.head<3>(), qexp_at(anchor, x6.tail<3>())};
}

std::vector<Vector> encode_dataset(std::span<const Pose> poses, const UnitQuaternion& anchor) {
  std::vector<Vector> out;
  out.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out.push_back(pose_encode(poses[i], anchor));
    if (out.back().tail<3>().norm() >= kCutLocus) {
      throw DomainError("pose " + std::to_string(i + 1) + " lies on the cut locus of the anchor");
    }
  }
  return out;
}

std::vector<Pose> parse_poses(std::istream& in, const std::string& source) {
  std::vector<Pose> poses;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    double v[7];
    int n = 0;
    while (n < 7 && row >> v[n]) ++n;
    if (n == 0 && row.eof()) continue;
    std::string extra;
    if (n != 7 || (row.clear(), row >> extra)) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected 7 numbers (px py pz qw qx qy qz)");
    }
    const double norm = std::sqrt(v[3] * v[3] + v[4] * v[4] + v[5] * v[5] + v[6] * v[6]);
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-3) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": quaternion norm " + std::to_string(norm) +
                       " is not within 1e-3 of 1");
    }
    poses.push_back({Vec3(v[0], v[1], v[2]), UnitQuaternion(v[3], v[4], v[5], v[6])});
  }
  if (poses.empty()) throw ParseError(source + ": no poses");
  return poses;
}

std::vector<Pose> load_poses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_poses(in, path.string());
}

void write_poses(std::ostream& out, std::span<const Pose> poses) {
  out << "# px py pz qw qx qy qz\n" << std::setprecision(12);
  for (const auto& p : poses) {
    out << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' ' << p.orientation.scalar();
    for (double c : p.orientation.vec()) out << ' ' << c;
    out << '\n';
  }
}

}  // namespace ttergodic::manifold
