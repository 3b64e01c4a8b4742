#pragma once

#include <optional>

#include "ttergodic/tt/tensor.hpp"

namespace ttergodic::tt {

/// Truncation target for TT-rounding: a relative accuracy, a rank cap, or
/// both (the tighter of the two wins at every bond).
class ToleranceSpec {
 public:
  /// ||round(A) - A|| <= eps ||A||. Throws ArgumentError unless eps > 0.
  static ToleranceSpec accuracy(double eps);
  /// Every interior rank <= max_rank. Throws ArgumentError unless >= 1.
  static ToleranceSpec max_rank(Index max_rank);
  static ToleranceSpec accuracy_and_rank(double eps, Index max_rank);

  std::optional<double> eps() const noexcept { return eps_; }
  std::optional<Index> rank_cap() const noexcept { return rank_; }

 private:
  ToleranceSpec() = default;
  std::optional<double> eps_;
  std::optional<Index> rank_;
};

/// Right-to-left QR orthogonalization followed by a left-to-right truncated
/// SVD sweep. In accuracy mode the budget eps*||A|| is split evenly over the
/// d-1 bonds. In rank mode singular values at round-off level are dropped as
/// well, so exactly low-rank inputs come back with their true ranks.
TtTensor tt_round(const TtTensor& a, const ToleranceSpec& tol);

/// Returns a copy whose cores 2..d are right-orthonormal; the norm of the
/// tensor then equals the Frobenius norm of the first core.
TtTensor tt_right_orthogonalize(const TtTensor& a);

}  // namespace ttergodic::tt
