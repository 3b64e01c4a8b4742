#include "ttergodic/ergodic/engine.hpp"

#include <algorithm>
#include <span>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "ttergodic/errors.hpp"
#include "ttergodic/tt/ops.hpp"

namespace ttergodic::ergodic {

using tt::Core;
using tt::Matrix;
using tt::TtTensor;
using Cores = std::vector<Core>;

void ErgodicConfig::validate() const {
  basis.validate();
  if (!(u_max > 0.0)) throw ArgumentError("u_max must be positive");
  if (!(dt > 0.0)) throw ArgumentError("dt must be positive");
  if (w_rank_cap < 0) throw ArgumentError("w_rank_cap must be >= 1 (or 0 for the default)");
  if (metric_interval < 0) throw ArgumentError("metric_interval must be >= 0");
  if (w_rank_headroom < 0) throw ArgumentError("w_rank_headroom must be >= 0");
}

Vector control_law(const Vector& b, double u_max, double eps, Rng& rng) {
  // b is (up to a positive factor) the gradient of xi with respect to x, so
  // the descent direction is -b.
  const double n = b.norm();
  if (n > eps) return (-u_max / n) * b;
  std::normal_distribution<double> n01;
  Vector dir(b.size());
  double len = 0.0;
  while (len < 1e-12) {
    for (auto& v : dir) v = n01(rng);
    len = dir.norm();
  }
  return (u_max / len) * dir;
}

void clamp_to_domain(Vector& x, double L) {
  for (auto& v : x) v = std::clamp(v, 0.0, L);
}

namespace {

// Every Neumann basis gradient vanishes along a wall normal, so an agent on a
// face (clamped there, or started there) would never leave it. b is therefore
// evaluated a hair inside the walls; W still uses the true position.
Vector steering_point(const Vector& x, double L) {
  const double delta = 1e-9 * L;
  return x.cwiseMax(delta).cwiseMin(L - delta);
}

void check_in_domain(const Vector& x, const fourier::BasisConfig& cfg) {
  if (static_cast<std::size_t>(x.size()) != cfg.d) throw ShapeError("state has wrong dimension");
  for (double v : x) {
    if (!(v >= 0.0 && v <= cfg.L)) throw DomainError("initial state lies outside the domain");
  }
}

// Cores of the same tensor with the mode order reversed.
Cores reversed(std::span<const Core> cores) {
  Cores out;
  out.reserve(cores.size());
  for (auto it = cores.rbegin(); it != cores.rend(); ++it) {
    Core c(it->right_rank(), it->left_rank(), it->mode_size());
    for (Index k = 0; k < it->mode_size(); ++k) c.slice(k) = it->slice(k).transpose();
    out.push_back(std::move(c));
  }
  return out;
}

// w <- a w + c (phi_0 x ... x phi_{d-1}) where cores 1..d-1 of w are
// right-orthonormal. The rank-1 term is Gram-Schmidt'ed into each core from
// the right, so the form survives in O(d K r^2); a residual below 1e-12 of the
// incoming fiber is treated as already in the span.
void append_rank1(Cores& w, double a, double c, const std::vector<Vector>& phi) {
  const std::size_t d = w.size();
  const Index K = w[0].mode_size();
  Vector rvec = Vector::Ones(1);
  for (std::size_t i = d - 1; i > 0; --i) {
    const Core& y = w[i];
    const Index l = y.left_rank();
    const Index m = y.right_rank();
    const Index mp = rvec.size();
    Vector z(K * mp);
    for (Index b = 0; b < mp; ++b) z.segment(b * K, K) = rvec(b) * phi[i];
    const double scale = z.norm();
    const auto Y = y.right_unfolding();
    auto head = z.head(K * m);
    Vector proj = Y * head;
    head.noalias() -= Y.transpose() * proj;
    const Vector again = Y * head;
    head.noalias() -= Y.transpose() * again;
    proj += again;
    const double rho = z.norm();
    const bool grow = rho > 1e-12 * scale;
    const Index lp = grow ? l + 1 : l;
    Core next(lp, mp, K);
    auto n = next.right_unfolding();
    n.setZero();
    n.topLeftCorner(l, K * m) = Y;
    if (grow) n.row(l) = z.transpose() / rho;
    w[i] = std::move(next);
    rvec.resize(lp);
    rvec.head(l) = proj;
    if (grow) rvec(l) = rho;
  }
  const Core& h = w[0];
  const Index m = h.right_rank();
  const Index mp = rvec.size();
  Core next(1, mp, K);
  auto n = next.right_unfolding();
  n.setZero();
  n.leftCols(K * m) = a * h.right_unfolding();
  for (Index b = 0; b < mp; ++b) n.middleCols(b * K, K) += (c * rvec(b)) * phi[0].transpose();
  w[0] = std::move(next);
}

// Left-to-right sweep over a right-orthonormal w that caps every bond at
// `cap` and leaves cores 0..d-2 left-orthonormal. Each bond is truncated
// through the eigenvectors of its Gram matrix (much cheaper than a small SVD
// in Eigen); directions below 1e-7 of the top singular value are dropped, and
// a Cholesky pass restores orthonormality lost by the Gram route.
void truncate_sweep(Cores& w, Index cap) {
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    Core& c = w[i];
    const auto M = c.left_unfolding();
    const Index m = M.cols();
    const Matrix G = M.transpose().lazyProduct(M);
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    const auto& lam = es.eigenvalues();
    const double top = lam(m - 1);
    Index r = 1;
    while (r < std::min(cap, m) && lam(m - 1 - r) > 1e-14 * top) ++r;
    const Matrix V = es.eigenvectors().rightCols(r).rowwise().reverse();
    const Matrix U = M.lazyProduct(V);
    const Eigen::LLT<Matrix> llt(U.transpose().lazyProduct(U));
    const Matrix Q = llt.matrixU().solve<Eigen::OnTheRight>(U);
    const Matrix T = llt.matrixU() * V.transpose();
    Core& nxt = w[i + 1];
    const Matrix right = T.lazyProduct(nxt.right_unfolding());
    c = Core::from_left_unfolding(Q, c.left_rank(), c.mode_size());
    nxt = Core::from_right_unfolding(right, nxt.mode_size(), nxt.right_rank());
  }
}

// Left environment step: sum_k v_k A_k^T X B_k.
void env_left(const Matrix& x, const Core& a, const Core& b, const Vector& v, Matrix& out) {
  out.setZero(a.right_rank(), b.right_rank());
  Matrix tmp;
  for (Index k = 0; k < a.mode_size(); ++k) {
    tmp.noalias() = a.slice(k).transpose().lazyProduct(x);
    out.noalias() += v(k) * tmp.lazyProduct(b.slice(k));
  }
}

// Right environment step: sum_k v_k A_k Y B_k^T.
void env_right(const Matrix& y, const Core& a, const Core& b, const Vector& v, Matrix& out) {
  out.setZero(a.left_rank(), b.left_rank());
  Matrix tmp;
  for (Index k = 0; k < a.mode_size(); ++k) {
    tmp.noalias() = a.slice(k).lazyProduct(y);
    out.noalias() += v(k) * tmp.lazyProduct(b.slice(k).transpose());
  }
}

// g_i = sum_k A_k B_k prod_{j != i} phi_j(k_j) dphi_i(k_i) for every i, in
// O(d K r^2) using shared prefix and suffix environments.
Vector gradient_contractions(std::span<const Core> a, std::span<const Core> b,
                             const std::vector<Vector>& phi, const std::vector<Vector>& dphi) {
  const std::size_t d = a.size();
  std::vector<Matrix> left(d + 1);
  std::vector<Matrix> right(d + 1);
  left[0] = Matrix::Ones(1, 1);
  right[d] = Matrix::Ones(1, 1);
  for (std::size_t j = 0; j + 1 < d; ++j) env_left(left[j], a[j], b[j], phi[j], left[j + 1]);
  for (std::size_t j = d - 1; j > 0; --j) env_right(right[j + 1], a[j], b[j], phi[j], right[j]);
  Vector g(static_cast<Index>(d));
  Matrix m;
  for (std::size_t i = 0; i < d; ++i) {
    env_right(right[i + 1], a[i], b[i], dphi[i], m);
    g(static_cast<Index>(i)) = left[i].cwiseProduct(m).sum();
  }
  return g;
}

}  // namespace

Engine::Engine(const ErgodicConfig& cfg, std::shared_ptr<const fourier::CoefficientSet> coeffs,
               const Vector& x0)
    : cfg_(cfg), coeffs_(std::move(coeffs)), basis_(cfg.basis), rng_(cfg.seed) {
  cfg_.validate();
  if (!coeffs_) throw ArgumentError("engine needs a coefficient set");
  const std::vector<Index> modes(cfg_.basis.d, cfg_.basis.K);
  if (coeffs_->w_hat.mode_sizes() != modes || coeffs_->lambda.mode_sizes() != modes) {
    throw ShapeError("coefficient tensors do not match the basis configuration");
  }
  check_in_domain(x0, cfg_.basis);
  cap_ = cfg_.w_rank_cap > 0 ? cfg_.w_rank_cap
                             : static_cast<Index>(cfg_.basis.d) * coeffs_->w_hat.max_rank();
  const auto lam = coeffs_->lambda.cores();
  const auto what = coeffs_->w_hat.cores();
  lambda_[0].assign(lam.begin(), lam.end());
  lambda_[1] = reversed(lam);
  w_hat_[0].assign(what.begin(), what.end());
  w_hat_[1] = reversed(what);
  const TtTensor zero = tt::tt_zeros(modes);
  w_.assign(zero.cores().begin(), zero.cores().end());
  x_ = x0;
  refresh_control();
  history_.push_back({0.0, ergodic_metric()});
}

tt::TtTensor Engine::w() const {
  return TtTensor(flipped_ ? reversed(w_) : Cores(w_.begin(), w_.end()));
}

void Engine::basis_vectors(const Vector& x, std::vector<Vector>& phi, std::vector<Vector>* dphi) const {
  const std::size_t d = cfg_.basis.d;
  phi.assign(d, Vector(cfg_.basis.K));
  if (dphi) dphi->assign(d, Vector(cfg_.basis.K));
  for (std::size_t i = 0; i < d; ++i) {
    // Stored cores run in reverse mode order while flipped.
    const std::size_t j = flipped_ ? d - 1 - i : i;
    basis_.eval(x(static_cast<Index>(i)), phi[j].data());
    if (dphi) basis_.grad(x(static_cast<Index>(i)), (*dphi)[j].data());
  }
}

void Engine::update_w(double dt) {
  if (!(t_ + dt > 0.0)) throw ArgumentError("update_w needs t + dt > 0");
  std::vector<Vector> phi;
  basis_vectors(x_, phi, nullptr);
  const std::size_t d = phi.size();
  if (t_ == 0.0) {
    // W = Phi exactly, stored with cores 1..d-1 unit norm.
    double scale = 1.0;
    for (std::size_t i = 1; i < d; ++i) {
      const double n = phi[i].norm();
      scale *= n;
      phi[i] /= n;
    }
    phi[0] *= scale;
    const TtTensor p = tt::tt_rank1(phi);
    w_.assign(p.cores().begin(), p.cores().end());
    return;
  }
  const double s = 1.0 / (t_ + dt);
  append_rank1(w_, t_ * s, dt * s, phi);
  bool over = false;
  for (std::size_t i = 1; i < d; ++i) over = over || w_[i].left_rank() > cap_;
  if (over) {
    truncate_sweep(w_, std::max<Index>(1, cap_ - cfg_.w_rank_headroom));
    w_ = reversed(w_);
    flipped_ = !flipped_;
  }
}

Vector Engine::compute_b() const {
  std::vector<Vector> phi;
  std::vector<Vector> dphi;
  basis_vectors(steering_point(x_, cfg_.basis.L), phi, &dphi);
  const auto& lam = lambda_[flipped_];
  const Vector g = gradient_contractions(lam, w_, phi, dphi) -
                   gradient_contractions(lam, w_hat_[flipped_], phi, dphi);
  if (!flipped_) return g;
  return g.reverse();
}

double Engine::ergodic_metric() const {
  const TtTensor diff = tt::tt_sub(TtTensor(w_), TtTensor(w_hat_[flipped_]));
  return std::max(0.0, tt::tt_inner3(TtTensor(lambda_[flipped_]), diff, diff));
}

void Engine::refresh_control() {
  b_ = compute_b();
  u_ = control_law(b_, cfg_.u_max, cfg_.b_epsilon, rng_);
}

ControlOutput Engine::step() {
  x_ += cfg_.dt * u_;
  clamp_to_domain(x_, cfg_.basis.L);
  update_w(cfg_.dt);
  t_ += cfg_.dt;
  ++steps_;
  refresh_control();
  ControlOutput out{u_, b_};
  if (cfg_.metric_interval > 0 && steps_ % cfg_.metric_interval == 0) {
    out.xi = ergodic_metric();
    history_.push_back({t_, out.xi});
  }
  return out;
}

void Engine::reset_position(const Vector& x) {
  check_in_domain(x, cfg_.basis);
  x_ = x;
  refresh_control();
}

Trajectory run(const ErgodicConfig& cfg, std::shared_ptr<const fourier::CoefficientSet> coeffs,
               const Vector& x0, double T) {
  if (!(T > 0.0)) throw ArgumentError("run needs T > 0");
  Engine e(cfg, std::move(coeffs), x0);
  // Step count fixed up front so accumulated rounding in t cannot add a step.
  const auto n = static_cast<std::int64_t>(std::ceil(T / cfg.dt - 1e-9));
  Trajectory traj;
  traj.reserve(static_cast<std::size_t>(n));
  for (std::int64_t s = 0; s < n; ++s) {
    const ControlOutput o = e.step();
    traj.push_back({e.time(), e.position(), o.u, o.xi});
  }
  return traj;
}

DenseEngine::DenseEngine(const ErgodicConfig& cfg, const tt::DenseTensor& w_hat,
                         const tt::DenseTensor& lambda, const Vector& x0)
    : cfg_(cfg), basis_(cfg.basis), rng_(cfg.seed) {
  cfg_.validate();
  const std::vector<Index> modes(cfg_.basis.d, cfg_.basis.K);
  if (w_hat.mode_sizes() != modes || lambda.mode_sizes() != modes) {
    throw ShapeError("dense coefficient tensors do not match the basis configuration");
  }
  check_in_domain(x0, cfg_.basis);
  w_hat_.assign(w_hat.values().begin(), w_hat.values().end());
  lambda_.assign(lambda.values().begin(), lambda.values().end());
  w_.assign(w_hat_.size(), 0.0);
  x_ = x0;
  b_ = compute_b();
  u_ = control_law(b_, cfg_.u_max, cfg_.b_epsilon, rng_);
}

void DenseEngine::phi_dense(const Vector& x, std::size_t grad_dim, std::vector<double>& out) const {
  const Index K = cfg_.basis.K;
  Vector v(K);
  out.assign(1, 1.0);
  std::vector<double> next;
  for (std::size_t i = 0; i < cfg_.basis.d; ++i) {
    if (i == grad_dim) {
      basis_.grad(x(static_cast<Index>(i)), v.data());
    } else {
      basis_.eval(x(static_cast<Index>(i)), v.data());
    }
    next.resize(out.size() * static_cast<std::size_t>(K));
    for (std::size_t p = 0; p < out.size(); ++p) {
      for (Index k = 0; k < K; ++k) next[p * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)] = out[p] * v(k);
    }
    out.swap(next);
  }
}

Vector DenseEngine::compute_b() const {
  const std::size_t d = cfg_.basis.d;
  Vector b(static_cast<Index>(d));
  const Vector x = steering_point(x_, cfg_.basis.L);
  for (std::size_t i = 0; i < d; ++i) {
    phi_dense(x, i, scratch_);
    double s = 0.0;
    for (std::size_t k = 0; k < w_.size(); ++k) s += lambda_[k] * (w_[k] - w_hat_[k]) * scratch_[k];
    b(static_cast<Index>(i)) = s;
  }
  return b;
}

double DenseEngine::ergodic_metric() const {
  double s = 0.0;
  for (std::size_t k = 0; k < w_.size(); ++k) {
    const double e = w_[k] - w_hat_[k];
    s += lambda_[k] * e * e;
  }
  return s;
}

ControlOutput DenseEngine::step() {
  x_ += cfg_.dt * u_;
  clamp_to_domain(x_, cfg_.basis.L);
  phi_dense(x_, cfg_.basis.d, scratch_);
  const double s = 1.0 / (t_ + cfg_.dt);
  for (std::size_t k = 0; k < w_.size(); ++k) w_[k] = (t_ * w_[k] + cfg_.dt * scratch_[k]) * s;
  t_ += cfg_.dt;
  ++steps_;
  b_ = compute_b();
  u_ = control_law(b_, cfg_.u_max, cfg_.b_epsilon, rng_);
  ControlOutput out{u_, b_};
  if (cfg_.metric_interval > 0 && steps_ % cfg_.metric_interval == 0) out.xi = ergodic_metric();
  return out;
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  const std::size_t d = traj.empty() ? 0 : static_cast<std::size_t>(traj.front().x.size());
  out << "# t[s]";
  for (std::size_t i = 1; i <= d; ++i) out << " x_" << i;
  for (std::size_t i = 1; i <= d; ++i) out << " u_" << i << "[1/s]";
  out << " xi\n";
  out << std::setprecision(10);
  for (const auto& s : traj) {
    out << s.t;
    for (double v : s.x) out << ' ' << v;
    for (double v : s.u) out << ' ' << v;
    out << ' ' << s.xi << '\n';
  }
}

void write_metric_history(std::ostream& out, const std::vector<MetricSample>& h) {
  out << "# t[s] xi\n" << std::setprecision(12);
  for (const auto& m : h) out << m.t << ' ' << m.xi << '\n';
}

}  // namespace ttergodic::ergodic
