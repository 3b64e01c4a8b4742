#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "ttergodic/fourier/fourier.hpp"
#include "ttergodic/tt/tensor.hpp"

namespace ttergodic::ergodic {

using tt::Index;
using tt::Vector;
using Rng = std::mt19937_64;

struct ErgodicConfig {
  fourier::BasisConfig basis;
  double u_max = 0.1;
  double dt = 0.01;
  /// Interior rank cap for W(t); 0 selects d * (max rank of W-hat).
  Index w_rank_cap = 0;
  /// When a bond exceeds the cap, truncate to cap - headroom so the next
  /// sweeps are that many steps away. 0 truncates to the cap every time.
  Index w_rank_headroom = 0;
  double b_epsilon = 1e-12;
  std::uint64_t seed = 1;
  /// Record xi every this many steps; 0 disables it inside the loop.
  int metric_interval = 1;

  void validate() const;
};

struct ControlOutput {
  Vector u;
  Vector b;
  /// NaN on steps where the metric was not evaluated.
  double xi = std::numeric_limits<double>::quiet_NaN();
};

struct MetricSample {
  double t;
  double xi;
};

struct TrajectorySample {
  double t;
  Vector x;
  Vector u;
  double xi;
};
using Trajectory = std::vector<TrajectorySample>;

/// Descent command -u_max * b / |b|, or a seeded random direction when
/// |b| <= eps. Shared by both engines so their RNG streams line up.
Vector control_law(const Vector& b, double u_max, double eps, Rng& rng);

/// Coordinate-wise clamp to [0, L].
void clamp_to_domain(Vector& x, double L);

/// The TT control loop.
class Engine {
 public:
  /// Throws DomainError if x0 lies outside the domain.
  Engine(const ErgodicConfig& cfg, std::shared_ptr<const fourier::CoefficientSet> coeffs,
         const Vector& x0);

  /// w <- round((t w + dt Phi(x)) / (t + dt), rank cap). t is unchanged.
  void update_w(double dt);
  /// b_i = sum_k Lambda_k (W_k - What_k) d_i Phi_k(x), with x pulled 1e-9 L
  /// inside the walls.
  Vector compute_b() const;
  /// sum_k Lambda_k (W_k - What_k)^2.
  double ergodic_metric() const;
  /// One control period: move with the previous u, integrate W, advance t,
  /// then compute b, u and (on metric steps) xi.
  ControlOutput step();

  /// Moves the agent without touching W or the clock; recomputes b and u.
  void reset_position(const Vector& x);

  double time() const noexcept { return t_; }
  const Vector& position() const noexcept { return x_; }
  const Vector& command() const noexcept { return u_; }
  const Vector& steering() const noexcept { return b_; }
  /// Current W, materialized in natural mode order.
  tt::TtTensor w() const;
  const fourier::CoefficientSet& coefficients() const noexcept { return *coeffs_; }
  const std::vector<MetricSample>& metric_history() const noexcept { return history_; }
  Index rank_cap() const noexcept { return cap_; }
  const ErgodicConfig& config() const noexcept { return cfg_; }
  std::int64_t steps() const noexcept { return steps_; }

 private:
  void refresh_control();
  void basis_vectors(const Vector& x, std::vector<Vector>& phi, std::vector<Vector>* dphi) const;

  ErgodicConfig cfg_;
  std::shared_ptr<const fourier::CoefficientSet> coeffs_;
  fourier::CosineBasis basis_;
  Index cap_;
  double t_ = 0.0;
  Vector x_;
  Vector b_;
  Vector u_;
  // W is kept with cores 1..d-1 right-orthonormal so a rank-1 update needs no
  // QR sweep. Each truncation leaves the opposite form, which is stored
  // reversed (flipped_) instead of being re-orthogonalized.
  std::vector<tt::Core> w_;
  bool flipped_ = false;
  std::vector<tt::Core> lambda_[2];
  std::vector<tt::Core> w_hat_[2];
  std::vector<MetricSample> history_;
  Rng rng_;
  std::int64_t steps_ = 0;
};

/// Runs the loop until t >= T and records every step.
Trajectory run(const ErgodicConfig& cfg, std::shared_ptr<const fourier::CoefficientSet> coeffs,
               const Vector& x0, double T);

/// The dense loop with full K^d arrays; the reference for lockstep tests and the
/// dense column of the timing benchmark.
class DenseEngine {
 public:
  DenseEngine(const ErgodicConfig& cfg, const tt::DenseTensor& w_hat,
              const tt::DenseTensor& lambda, const Vector& x0);

  ControlOutput step();
  Vector compute_b() const;
  double ergodic_metric() const;

  double time() const noexcept { return t_; }
  const Vector& position() const noexcept { return x_; }
  const std::vector<double>& w() const noexcept { return w_; }

 private:
  void phi_dense(const Vector& x, std::size_t grad_dim, std::vector<double>& out) const;

  ErgodicConfig cfg_;
  fourier::CosineBasis basis_;
  std::vector<double> w_hat_;
  std::vector<double> lambda_;
  std::vector<double> w_;
  mutable std::vector<double> scratch_;
  double t_ = 0.0;
  Vector x_;
  Vector b_;
  Vector u_;
  Rng rng_;
  std::int64_t steps_ = 0;
};

/// Header line then one row per sample: t, x_1..x_d, u_1..u_d, xi.
void write_trajectory(std::ostream& out, const Trajectory& traj);
void write_metric_history(std::ostream& out, const std::vector<MetricSample>& h);

}  // namespace ttergodic::ergodic
