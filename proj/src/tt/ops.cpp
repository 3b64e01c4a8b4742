#include "ttergodic/tt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "ttergodic/errors.hpp"

namespace ttergodic::tt {
namespace {

void require_same_shape(const TtTensor& a, const TtTensor& b, const char* op) {
  if (a.order() != b.order() || a.mode_sizes() != b.mode_sizes()) {
    throw ShapeError(std::string(op) + ": mode sizes differ");
  }
}

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

double tt_element(const TtTensor& t, const IndexTuple& k) {
  if (k.size() != t.order()) throw BoundsError("index tuple order does not match tensor order");
  for (std::size_t i = 0; i < t.order(); ++i) {
    if (k.zero_based(i) < 0 || k.zero_based(i) >= t.core(i).mode_size()) {
      throw BoundsError("index " + std::to_string(k.one_based(i)) + " out of range for mode " +
                        std::to_string(i + 1) + " of size " +
                        std::to_string(t.core(i).mode_size()));
    }
  }
  return t.element_unchecked(k.zero_based());
}

TtTensor tt_rank1(std::span<const Vector> vectors) {
  if (vectors.empty()) throw ArgumentError("tt_rank1 needs at least one vector");
  std::vector<Core> cores;
  cores.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.size() == 0) throw ArgumentError("tt_rank1: empty vector");
    Core c(1, 1, v.size());
    c.left_unfolding() = v;
    cores.push_back(std::move(c));
  }
  return TtTensor(std::move(cores));
}

TtTensor tt_zeros(std::span<const Index> mode_sizes) {
  std::vector<Core> cores;
  for (Index n : mode_sizes) cores.emplace_back(1, 1, n);
  return TtTensor(std::move(cores));
}

TtTensor tt_ones(std::span<const Index> mode_sizes) {
  std::vector<Core> cores;
  for (Index n : mode_sizes) {
    Core c(1, 1, n);
    c.left_unfolding().setOnes();
    cores.push_back(std::move(c));
  }
  return TtTensor(std::move(cores));
}

TtTensor tt_axpby(double alpha, const TtTensor& x, double beta, const TtTensor& y) {
  require_same_shape(x, y, "tt_add");
  const std::size_t d = x.order();
  std::vector<Core> cores;
  cores.reserve(d);
  if (d == 1) {
    Core c(1, 1, x.core(0).mode_size());
    c.left_unfolding() = alpha * x.core(0).left_unfolding() + beta * y.core(0).left_unfolding();
    cores.push_back(std::move(c));
    return TtTensor(std::move(cores));
  }
  for (std::size_t i = 0; i < d; ++i) {
    const Core& a = x.core(i);
    const Core& b = y.core(i);
    const Index n = a.mode_size();
    const bool first = i == 0;
    const bool last = i + 1 == d;
    const Index rl = first ? 1 : a.left_rank() + b.left_rank();
    const Index rr = last ? 1 : a.right_rank() + b.right_rank();
    Core c(rl, rr, n);
    // Scalars go on the first core; blocks are placed on the diagonal, or
    // concatenated on the boundary cores.
    const double sa = first ? alpha : 1.0;
    const double sb = first ? beta : 1.0;
    const Index ao_l = 0, ao_r = 0;
    const Index bo_l = first ? 0 : a.left_rank();
    const Index bo_r = last ? 0 : a.right_rank();
    for (Index k = 0; k < n; ++k) {
      auto s = c.slice(k);
      s.block(ao_l, ao_r, a.left_rank(), a.right_rank()) = sa * a.slice(k);
      s.block(bo_l, bo_r, b.left_rank(), b.right_rank()) = sb * b.slice(k);
    }
    cores.push_back(std::move(c));
  }
  return TtTensor(std::move(cores));
}

TtTensor tt_add(const TtTensor& a, const TtTensor& b) { return tt_axpby(1.0, a, 1.0, b); }

TtTensor tt_sub(const TtTensor& a, const TtTensor& b) { return tt_axpby(1.0, a, -1.0, b); }

TtTensor tt_scale(double c, const TtTensor& a) {
  std::vector<Core> cores(a.cores().begin(), a.cores().end());
  cores[0].left_unfolding() *= c;
  return TtTensor(std::move(cores));
}

TtTensor tt_hadamard(const TtTensor& a, const TtTensor& b) {
  require_same_shape(a, b, "tt_hadamard");
  std::vector<Core> cores;
  cores.reserve(a.order());
  for (std::size_t i = 0; i < a.order(); ++i) {
    const Core& ca = a.core(i);
    const Core& cb = b.core(i);
    const Index bl = cb.left_rank();
    const Index br = cb.right_rank();
    Core c(ca.left_rank() * bl, ca.right_rank() * br, ca.mode_size());
    for (Index k = 0; k < ca.mode_size(); ++k) {
      auto sa = ca.slice(k);
      auto sb = cb.slice(k);
      auto s = c.slice(k);
      for (Index q = 0; q < ca.right_rank(); ++q) {
        for (Index p = 0; p < ca.left_rank(); ++p) {
          s.block(p * bl, q * br, bl, br) = sa(p, q) * sb;
        }
      }
    }
    cores.push_back(std::move(c));
  }
  return TtTensor(std::move(cores));
}

double tt_inner(const TtTensor& a, const TtTensor& b) {
  require_same_shape(a, b, "tt_inner");
  Matrix m = Matrix::Ones(1, 1);
  Matrix tmp;
  for (std::size_t i = 0; i < a.order(); ++i) {
    const Core& ca = a.core(i);
    const Core& cb = b.core(i);
    Matrix next = Matrix::Zero(ca.right_rank(), cb.right_rank());
    for (Index k = 0; k < ca.mode_size(); ++k) {
      tmp.noalias() = m * cb.slice(k);
      next.noalias() += ca.slice(k).transpose() * tmp;
    }
    m.swap(next);
  }
  return m(0, 0);
}

double tt_inner3(const TtTensor& a, const TtTensor& b, const TtTensor& c) {
  require_same_shape(a, b, "tt_inner3");
  require_same_shape(a, c, "tt_inner3");
  // Environment X[l][p, q] over (rank of a) x (rank of b) x (rank of c).
  std::vector<Matrix> env(1, Matrix::Ones(1, 1));
  Matrix t1;
  Matrix t2;
  for (std::size_t i = 0; i < a.order(); ++i) {
    const Core& ca = a.core(i);
    const Core& cb = b.core(i);
    const Core& cc = c.core(i);
    std::vector<Matrix> next(static_cast<std::size_t>(ca.right_rank()),
                             Matrix::Zero(cb.right_rank(), cc.right_rank()));
    for (Index k = 0; k < ca.mode_size(); ++k) {
      const auto sa = ca.slice(k);
      const auto sb = cb.slice(k);
      const auto sc = cc.slice(k);
      for (Index l = 0; l < ca.left_rank(); ++l) {
        t1.noalias() = env[static_cast<std::size_t>(l)] * sc;
        t2.noalias() = sb.transpose() * t1;
        for (Index m = 0; m < ca.right_rank(); ++m) {
          const double w = sa(l, m);
          if (w != 0.0) next[static_cast<std::size_t>(m)] += w * t2;
        }
      }
    }
    env.swap(next);
  }
  return env[0](0, 0);
}

double tt_norm(const TtTensor& a) {
  const double s = tt_inner(a, a);
  return s > 0.0 ? std::sqrt(s) : 0.0;
}

DenseTensor tt_to_dense(const TtTensor& a) {
  const auto modes = a.mode_sizes();
  DenseTensor out(modes);  // size guard
  // Rows enumerate the leading modes in row-major order.
  Matrix v = Matrix::Ones(1, 1);
  for (std::size_t i = 0; i < a.order(); ++i) {
    const Core& c = a.core(i);
    const Index n = c.mode_size();
    const Index r = c.right_rank();
    Matrix next(v.rows() * n, r);
    for (Index p = 0; p < v.rows(); ++p) {
      for (Index k = 0; k < n; ++k) {
        next.row(p * n + k).noalias() = v.row(p) * c.slice(k);
      }
    }
    v.swap(next);
  }
  auto vals = out.values();
  for (Index j = 0; j < v.rows(); ++j) vals[static_cast<std::size_t>(j)] = v(j, 0);
  return out;
}

TtTensor tt_from_dense(const DenseTensor& dense, double eps) {
  const auto& modes = dense.mode_sizes();
  const std::size_t d = modes.size();
  if (d == 0) throw ArgumentError("tt_from_dense: empty tensor");
  const double norm = dense.frobenius_norm();
  const double delta = d > 1 ? eps * norm / std::sqrt(static_cast<double>(d - 1)) : 0.0;

  std::vector<Core> cores;
  cores.reserve(d);
  Index rest = dense.size();
  RowMajorMatrix m = Eigen::Map<const RowMajorMatrix>(dense.values().data(), 1, rest);
  Index r_prev = 1;
  for (std::size_t i = 0; i + 1 < d; ++i) {
    const Index n = modes[i];
    rest /= n;
    // Row-major reinterpretation: row alpha*n + k, column over the tail.
    RowMajorMatrix c = Eigen::Map<const RowMajorMatrix>(m.data(), r_prev * n, rest);
    Eigen::BDCSVD<Matrix> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Index r = s.size();
    // Drop trailing singular values while the discarded energy fits delta.
    double tail = 0.0;
    const double floor = s.size() > 0 ? s(0) * 1e-14 : 0.0;
    while (r > 1) {
      const double sv = s(r - 1);
      if (sv <= floor || tail + sv * sv <= delta * delta) {
        tail += sv * sv;
        --r;
      } else {
        break;
      }
    }
    Core core(r_prev, r, n);
    for (Index a = 0; a < r_prev; ++a) {
      for (Index k = 0; k < n; ++k) {
        for (Index b = 0; b < r; ++b) core(a, b, k) = svd.matrixU()(a * n + k, b);
      }
    }
    cores.push_back(std::move(core));
    m = s.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
    r_prev = r;
  }
  Core last(r_prev, 1, modes[d - 1]);
  for (Index a = 0; a < r_prev; ++a) {
    for (Index k = 0; k < modes[d - 1]; ++k) last(a, 0, k) = m(a, k);
  }
  cores.push_back(std::move(last));
  return TtTensor(std::move(cores));
}

double tt_sum(const TtTensor& a) {
  std::vector<Vector> ones;
  for (const auto& c : a.cores()) ones.push_back(Vector::Ones(c.mode_size()));
  return tt_contract(a, ones);
}

double tt_contract(const TtTensor& a, std::span<const Vector> weights) {
  if (weights.size() != a.order()) throw ShapeError("tt_contract: one weight vector per mode");
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
  Matrix m;
  for (std::size_t i = 0; i < a.order(); ++i) {
    const Core& c = a.core(i);
    if (weights[i].size() != c.mode_size()) throw ShapeError("tt_contract: weight length");
    m = Matrix::Zero(c.left_rank(), c.right_rank());
    for (Index k = 0; k < c.mode_size(); ++k) m.noalias() += weights[i](k) * c.slice(k);
    v = v * m;
  }
  return v(0);
}

}  // namespace ttergodic::tt
