#pragma once

#include <vector>

#include "ttergodic/tt/tensor.hpp"

namespace ttergodic::tt {

struct MaxvolResult {
  /// Row indices of the selected r x r submatrix, in column order.
  std::vector<Index> rows;
  /// Interpolation coefficients A * A[rows,:]^{-1}; identity on `rows`.
  Matrix coefficients;
  int swaps = 0;
};

/// Greedy maximal-volume row selection on a tall n x r matrix (n >= r) of
/// full column rank. Starts from column-pivoted QR of A^T and swaps rows
/// while some swap grows |det| by more than a factor 1 + tol.
MaxvolResult maxvol(const Eigen::Ref<const Matrix>& a, double tol = 1e-2, int max_swaps = 1000);

}  // namespace ttergodic::tt
