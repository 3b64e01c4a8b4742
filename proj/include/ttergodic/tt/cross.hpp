#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ttergodic/tt/tensor.hpp"

namespace ttergodic::tt {

/// Black-box element oracle. Must be re-entrant.
using ElementOracle = std::function<double(const IndexTuple&)>;

struct CrossOptions {
  double eps = 1e-2;
  /// Full left-right sweeps before giving up with ConvergenceError.
  int max_sweeps = 40;
  /// Optional hard cap on every interior rank (0 = none).
  Index max_rank = 0;
  /// Size of the held-out index sample for the error estimate.
  int validation_samples = 1000;
  std::uint64_t seed = 0x7e1a5eedULL;
  /// Optional indices known to carry mass (e.g. density modes). They seed
  /// the initial pivot sets so the sweep does not start on a zero plateau.
  std::vector<IndexTuple> hint_indices;
};

struct CrossResult {
  TtTensor tensor;
  /// Relative RMS error on the held-out sample at termination.
  double error_estimate = 0.0;
  int sweeps = 0;
  /// Oracle calls spent on fibers (the approximation itself).
  std::int64_t fiber_calls = 0;
  /// Oracle calls spent on the held-out error estimate.
  std::int64_t validation_calls = 0;

  std::int64_t oracle_calls() const noexcept { return fiber_calls + validation_calls; }
};

/// Rank-adaptive TT cross approximation with maxvol pivoting.
///
/// Alternates left-to-right and right-to-left sweeps. Each sweep augments
/// every pivot set with one random index, so interior ranks can grow by one
/// per sweep; an SVD of each fiber matrix drops numerically dependent
/// directions before maxvol. Stops when the held-out relative RMS error is
/// at most eps, throws ConvergenceError after max_sweeps. The result is not
/// rounded; callers compress with tt_round as needed.
CrossResult tt_cross(const ElementOracle& f, std::span<const Index> mode_sizes,
                     const CrossOptions& options = {});

/// Relative RMS error of `approx` against `f` on `samples` uniform indices.
double estimate_relative_error(const ElementOracle& f, const TtTensor& approx, int samples,
                               std::uint64_t seed);

}  // namespace ttergodic::tt
