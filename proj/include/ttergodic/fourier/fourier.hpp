#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ttergodic/dist/distributions.hpp"
#include "ttergodic/tt/cross.hpp"
#include "ttergodic/tt/tensor.hpp"

namespace ttergodic::fourier {

using tt::Index;
using tt::Vector;

struct BasisConfig {
  std::size_t d = 2;
  /// Basis functions per dimension.
  Index K = 10;
  /// Edge length of the domain [0, L]^d.
  double L = 1.0;
  /// Quadrature nodes per dimension.
  Index N = 10;
  /// cos(pi (k-1) x / L), the complete Neumann basis on [0, L]. When false,
  /// cos(2 pi (k-1) x / L) is used as written with L the domain width; that
  /// family is even about L/2, so it cannot tell a density from its mirror
  /// image and every gradient vanishes at the center.
  bool half_period = true;

  /// Throws ArgumentError on d < 1, K < 1, L <= 0 or N < 1.
  void validate() const;
};

/// Normalized cosine basis phi_k(x) = cos(pi (k-1) x / L) / h_k (2 pi with
/// half_period off) with h_1 = sqrt(L), h_k = sqrt(L/2).
/// Evaluation uses the Chebyshev recurrence, one cos/sin pair per call.
class CosineBasis {
 public:
  CosineBasis(Index K, double L, bool half_period = true);
  explicit CosineBasis(const BasisConfig& cfg) : CosineBasis(cfg.K, cfg.L, cfg.half_period) {}

  Index size() const noexcept { return K_; }
  double length() const noexcept { return L_; }
  /// Unchecked: writes K values to out.
  void eval(double x, double* out) const;
  void grad(double x, double* out) const;

 private:
  Index K_;
  double L_;
  double omega_;
  double h1_inv_;
  double hk_inv_;
};

/// phi(x) for every k; throws DomainError outside [0, L].
Vector basis_eval(double x, const BasisConfig& cfg);
/// d phi / dx for every k; throws DomainError outside [0, L].
Vector basis_grad(double x, const BasisConfig& cfg);

/// Rank-1 tensor Phi(x) with cores phi(x_1), ..., phi(x_d).
tt::TtTensor phi_tensor(const Vector& x, const BasisConfig& cfg);
/// Rank-1 tensor with core i replaced by the basis derivative.
tt::TtTensor grad_phi_tensor(const Vector& x, std::size_t i, const BasisConfig& cfg);

/// Weight (1 + |k|^2)^{-(d+1)/2} for a 1-based multi-index.
double lambda_value(const tt::IndexTuple& k);

struct LambdaOptions {
  double eps = 1e-2;
  Index rank_cap = 2;
  std::uint64_t seed = 0x1a3bdaULL;
};

/// Cross approximation of the frequency weights, rounded to rank_cap.
tt::TtTensor lambda_tensor(const BasisConfig& cfg, const LambdaOptions& opt = {});

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// N-point Gauss-Legendre rule mapped to [0, L].
QuadratureRule quadrature_rule(Index N, double L);
/// N-point midpoint rule on [0, L]. Exact for cos(2 pi m x / L), 0 < m < N.
QuadratureRule midpoint_rule(Index N, double L);

enum class QuadratureFamily { midpoint, gauss_legendre };
QuadratureRule make_rule(QuadratureFamily family, Index N, double L);

/// Cross approximation of P on the tensor grid of `rule`, mode sizes N.
/// Component means seed the pivots.
tt::CrossResult discretize_pdf(const dist::ReferenceDistribution& p, const BasisConfig& cfg,
                               const QuadratureRule& rule, tt::CrossOptions opt = {});

/// Coefficients of a discretized density: each core of P is contracted
/// against alpha_j phi_k(x_j). Ranks are inherited from P.
tt::TtTensor fourier_coeffs(const tt::TtTensor& p_tt, const QuadratureRule& rule,
                            const BasisConfig& cfg);

struct OracleOptions {
  /// Adaptive nested Gauss-Kronrod when true, fixed composite Gauss-Legendre
  /// otherwise.
  bool adaptive = true;
  double abs_tol = 1e-9;
  int max_intervals = 200;
  /// Fixed mode: panels per dimension and Gauss points per panel.
  int panels = 16;
  int order = 10;
};

/// Dense coefficient tensor by nested 1-D quadrature; d <= 3 only.
tt::DenseTensor fourier_coeffs_oracle(const dist::ReferenceDistribution& p,
                                      const BasisConfig& cfg, const OracleOptions& opt = {});

struct CoefficientSet {
  tt::TtTensor w_hat;
  tt::TtTensor lambda;
  BasisConfig config;
};

struct PipelineOptions {
  QuadratureFamily quadrature = QuadratureFamily::midpoint;
  double cross_eps = 1e-2;
  /// Accuracy for the post-rounding of W-hat; <= 0 disables it.
  double round_eps = 1e-2;
  LambdaOptions lambda;
  std::uint64_t seed = 0x5eedULL;
};

struct PipelineReport {
  std::vector<Index> p_ranks;
  double p_error = 0.0;
  std::int64_t p_calls = 0;
  int p_sweeps = 0;
  double seconds_p = 0.0;
  double seconds_w = 0.0;
  double seconds_lambda = 0.0;
};

/// Discretize P, contract to W-hat, round, and build Lambda.
CoefficientSet compute_coefficients(const dist::ReferenceDistribution& p, const BasisConfig& cfg,
                                    const PipelineOptions& opt = {},
                                    PipelineReport* report = nullptr);

/// Cache layout: magic "TTECOEF2", u64 d, u64 K, u64 N, u64 half_period,
/// f64 L, then W-hat and Lambda in the binary TT format.
void save_coefficients(const std::filesystem::path& path, const CoefficientSet& c);
CoefficientSet load_coefficients(const std::filesystem::path& path);

}  // namespace ttergodic::fourier
