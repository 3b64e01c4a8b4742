#include "ttergodic/tt/maxvol.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include "ttergodic/errors.hpp"

namespace ttergodic::tt {

MaxvolResult maxvol(const Eigen::Ref<const Matrix>& a, double tol, int max_swaps) {
  const Index n = a.rows();
  const Index r = a.cols();
  if (r == 0 || n < r) throw ArgumentError("maxvol needs a tall matrix with n >= r > 0");

  MaxvolResult out;
  Eigen::ColPivHouseholderQR<Matrix> qr(a.transpose());
  const auto& perm = qr.colsPermutation().indices();
  out.rows.assign(perm.data(), perm.data() + r);

  Matrix sub(r, r);
  for (Index j = 0; j < r; ++j) sub.row(j) = a.row(out.rows[static_cast<std::size_t>(j)]);
  Eigen::PartialPivLU<Matrix> lu(sub.transpose());
  out.coefficients = lu.solve(a.transpose()).transpose();

  while (out.swaps < max_swaps) {
    Index i = 0, j = 0;
    const double big = out.coefficients.cwiseAbs().maxCoeff(&i, &j);
    if (big <= 1.0 + tol) break;
    // Replacing pivot j by row i multiplies |det| by |B(i, j)|.
    out.rows[static_cast<std::size_t>(j)] = i;
    const Eigen::VectorXd col = out.coefficients.col(j);
    Eigen::RowVectorXd row = out.coefficients.row(i);
    row(j) -= 1.0;
    out.coefficients.noalias() -= (col / col(i)) * row;
    ++out.swaps;
  }
  return out;
}

}  // namespace ttergodic::tt
