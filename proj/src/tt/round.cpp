#include "ttergodic/tt/round.hpp"

#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "ttergodic/errors.hpp"
#include "ttergodic/tt/ops.hpp"

namespace ttergodic::tt {

ToleranceSpec ToleranceSpec::accuracy(double eps) {
  if (!(eps > 0.0)) throw ArgumentError("rounding accuracy must be positive");
  ToleranceSpec t;
  t.eps_ = eps;
  return t;
}

ToleranceSpec ToleranceSpec::max_rank(Index max_rank) {
  if (max_rank < 1) throw ArgumentError("rounding rank cap must be at least 1");
  ToleranceSpec t;
  t.rank_ = max_rank;
  return t;
}

ToleranceSpec ToleranceSpec::accuracy_and_rank(double eps, Index max_rank) {
  auto t = accuracy(eps);
  t.rank_ = ToleranceSpec::max_rank(max_rank).rank_;
  return t;
}

namespace {

// In-place right-to-left orthogonalization of cores 1..d-1.
void orthogonalize_right(std::vector<Core>& cores) {
  for (std::size_t i = cores.size() - 1; i > 0; --i) {
    Core& c = cores[i];
    const Index n = c.mode_size();
    const Index rr = c.right_rank();
    // Right unfolding^T = Q R, so the core becomes Q^T and R^T moves left.
    Matrix t = c.right_unfolding().transpose();
    Eigen::HouseholderQR<Matrix> qr(t);
    const Index r_new = std::min(t.rows(), t.cols());
    Matrix q = qr.householderQ() * Matrix::Identity(t.rows(), r_new);
    Matrix r = qr.matrixQR().topRows(r_new).triangularView<Eigen::Upper>();
    Core next(r_new, rr, n);
    next.right_unfolding() = q.transpose();
    c = std::move(next);

    Core& p = cores[i - 1];
    Matrix left = p.left_unfolding() * r.transpose();
    p = Core::from_left_unfolding(left, p.left_rank(), p.mode_size());
  }
}

}  // namespace

TtTensor tt_right_orthogonalize(const TtTensor& a) {
  std::vector<Core> cores(a.cores().begin(), a.cores().end());
  orthogonalize_right(cores);
  return TtTensor(std::move(cores));
}

TtTensor tt_round(const TtTensor& a, const ToleranceSpec& tol) {
  const std::size_t d = a.order();
  if (d == 1) return a;

  std::vector<Core> cores(a.cores().begin(), a.cores().end());
  orthogonalize_right(cores);

  const double norm = cores[0].left_unfolding().norm();
  if (norm == 0.0 || !std::isfinite(norm)) {
    if (norm == 0.0) {
      const auto modes = a.mode_sizes();
      return tt_zeros(modes);
    }
    throw ArgumentError("tt_round: tensor has non-finite entries");
  }
  const double delta =
      tol.eps() ? *tol.eps() * norm / std::sqrt(static_cast<double>(d - 1)) : 0.0;
  const Index cap = tol.rank_cap().value_or(std::numeric_limits<Index>::max());

  for (std::size_t i = 0; i + 1 < d; ++i) {
    Core& c = cores[i];
    const auto left = c.left_unfolding();
    Eigen::BDCSVD<Matrix> svd(left, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Index r = s.size();
    const double floor = s(0) * 1e-14;
    double tail = 0.0;
    while (r > 1) {
      const double sv = s(r - 1);
      if (r > cap || sv <= floor || tail + sv * sv <= delta * delta) {
        tail += sv * sv;
        --r;
      } else {
        break;
      }
    }
    Matrix sv_t = s.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
    Core& nxt = cores[i + 1];
    Matrix right = sv_t * nxt.right_unfolding();
    const Index l = c.left_rank();
    const Index n = c.mode_size();
    c = Core::from_left_unfolding(svd.matrixU().leftCols(r), l, n);
    nxt = Core::from_right_unfolding(right, nxt.mode_size(), nxt.right_rank());
  }
  return TtTensor(std::move(cores));
}

}  // namespace ttergodic::tt
