#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace ttergodic::tt {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Multi-index into a tensor. Constructed from 1-based positions
/// (k_i in {1..K_i}); stored 0-based for internal use.
class IndexTuple {
 public:
  IndexTuple() = default;
  IndexTuple(std::initializer_list<Index> one_based);
  static IndexTuple from_one_based(std::span<const Index> k);
  static IndexTuple from_zero_based(std::span<const Index> k);

  std::size_t size() const noexcept { return zero_.size(); }
  Index one_based(std::size_t i) const { return zero_[i] + 1; }
  Index zero_based(std::size_t i) const { return zero_[i]; }
  std::span<const Index> zero_based() const noexcept { return zero_; }

  /// Overwrites position i with a 0-based value (used by samplers).
  void set_zero_based(std::size_t i, Index v) { zero_[i] = v; }
  void resize(std::size_t n) { zero_.assign(n, 0); }

  friend bool operator==(const IndexTuple&, const IndexTuple&) = default;

 private:
  std::vector<Index> zero_;
};

/// Third-order TT core of shape (left rank) x (right rank) x (mode size).
///
/// Storage is column-major over (left, mode, right), so the left unfolding
/// [(left*mode) x right] and the right unfolding [left x (mode*right)] are
/// both contiguous views, and each frontal slice is a strided view.
class Core {
 public:
  using SliceMap = Eigen::Map<Matrix, 0, Eigen::OuterStride<>>;
  using ConstSliceMap = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;

  Core() = default;
  Core(Index left, Index right, Index modes);

  Index left_rank() const noexcept { return left_; }
  Index right_rank() const noexcept { return right_; }
  Index mode_size() const noexcept { return modes_; }
  Index size() const noexcept { return left_ * right_ * modes_; }

  double& operator()(Index a, Index b, Index k) { return data_[a + left_ * (k + modes_ * b)]; }
  double operator()(Index a, Index b, Index k) const { return data_[a + left_ * (k + modes_ * b)]; }

  Eigen::Map<Matrix> left_unfolding() { return {data_.data(), left_ * modes_, right_}; }
  Eigen::Map<const Matrix> left_unfolding() const { return {data_.data(), left_ * modes_, right_}; }
  Eigen::Map<Matrix> right_unfolding() { return {data_.data(), left_, modes_ * right_}; }
  Eigen::Map<const Matrix> right_unfolding() const { return {data_.data(), left_, modes_ * right_}; }

  SliceMap slice(Index k) {
    return {data_.data() + left_ * k, left_, right_, Eigen::OuterStride<>(left_ * modes_)};
  }
  ConstSliceMap slice(Index k) const {
    return {data_.data() + left_ * k, left_, right_, Eigen::OuterStride<>(left_ * modes_)};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Builds a core from a left unfolding of shape (left*modes) x right.
  static Core from_left_unfolding(const Eigen::Ref<const Matrix>& m, Index left, Index modes);
  /// Builds a core from a right unfolding of shape left x (modes*right).
  static Core from_right_unfolding(const Eigen::Ref<const Matrix>& m, Index modes, Index right);

 private:
  Index left_ = 0;
  Index right_ = 0;
  Index modes_ = 0;
  std::vector<double> data_;
};

/// A d-th order tensor in tensor-train format.
///
/// Element k equals the 1x1 product G1[:,:,k1] G2[:,:,k2] ... Gd[:,:,kd].
/// Values are immutable once constructed; every operation returns a new
/// tensor.
class TtTensor {
 public:
  TtTensor() = default;
  /// Validates that ranks chain and that the boundary ranks are 1.
  explicit TtTensor(std::vector<Core> cores);

  std::size_t order() const noexcept { return cores_.size(); }
  std::vector<Index> mode_sizes() const;
  /// (r_0, ..., r_d) with r_0 = r_d = 1.
  std::vector<Index> ranks() const;
  Index max_rank() const;
  const Core& core(std::size_t i) const { return cores_[i]; }
  std::span<const Core> cores() const noexcept { return cores_; }

  /// Number of stored scalars, sum_i r_{i-1} r_i K_i.
  Index parameter_count() const;

  /// Element access by 0-based multi-index, no bounds checks.
  double element_unchecked(std::span<const Index> zero_based) const;

 private:
  std::vector<Core> cores_;
};

/// Row-major dense tensor, used only at test-oracle scale.
class DenseTensor {
 public:
  static constexpr Index kMaxElements = 10'000'000;

  DenseTensor() = default;
  /// Zero-filled; throws SizeError above kMaxElements.
  explicit DenseTensor(std::vector<Index> mode_sizes);
  DenseTensor(std::vector<Index> mode_sizes, std::vector<double> values);

  const std::vector<Index>& mode_sizes() const noexcept { return modes_; }
  std::size_t order() const noexcept { return modes_.size(); }
  Index size() const noexcept { return static_cast<Index>(values_.size()); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Flat row-major offset of a 0-based multi-index.
  Index offset(std::span<const Index> zero_based) const;
  double& at(const IndexTuple& k) { return values_[offset(k.zero_based())]; }
  double at(const IndexTuple& k) const { return values_[offset(k.zero_based())]; }

  double frobenius_norm() const;

 private:
  std::vector<Index> modes_;
  std::vector<double> values_;
};

/// Product of mode sizes, saturating rather than overflowing.
Index checked_volume(std::span<const Index> mode_sizes);

/// Advances a 0-based row-major multi-index; returns false after the last.
bool next_index(std::span<Index> k, std::span<const Index> mode_sizes);

}  // namespace ttergodic::tt
