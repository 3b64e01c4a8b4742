#include "ttergodic/tt/tensor.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ttergodic/errors.hpp"

namespace ttergodic::tt {

IndexTuple::IndexTuple(std::initializer_list<Index> one_based) {
  zero_.reserve(one_based.size());
  for (Index k : one_based) {
    if (k < 1) throw BoundsError("index tuple entries are 1-based, got " + std::to_string(k));
    zero_.push_back(k - 1);
  }
}

IndexTuple IndexTuple::from_one_based(std::span<const Index> k) {
  IndexTuple t;
  t.zero_.reserve(k.size());
  for (Index v : k) {
    if (v < 1) throw BoundsError("index tuple entries are 1-based, got " + std::to_string(v));
    t.zero_.push_back(v - 1);
  }
  return t;
}

IndexTuple IndexTuple::from_zero_based(std::span<const Index> k) {
  IndexTuple t;
  t.zero_.assign(k.begin(), k.end());
  return t;
}

Core::Core(Index left, Index right, Index modes)
    : left_(left), right_(right), modes_(modes),
      data_(static_cast<std::size_t>(left * right * modes), 0.0) {
  if (left < 1 || right < 1 || modes < 1) throw ArgumentError("core dimensions must be positive");
}

Core Core::from_left_unfolding(const Eigen::Ref<const Matrix>& m, Index left, Index modes) {
  if (m.rows() != left * modes) throw ShapeError("left unfolding row count mismatch");
  Core c(left, m.cols(), modes);
  c.left_unfolding() = m;
  return c;
}

Core Core::from_right_unfolding(const Eigen::Ref<const Matrix>& m, Index modes, Index right) {
  if (m.cols() != modes * right) throw ShapeError("right unfolding column count mismatch");
  Core c(m.rows(), right, modes);
  c.right_unfolding() = m;
  return c;
}

TtTensor::TtTensor(std::vector<Core> cores) : cores_(std::move(cores)) {
  if (cores_.empty()) throw ArgumentError("a TT tensor needs at least one core");
  if (cores_.front().left_rank() != 1) throw ShapeError("first core must have left rank 1");
  if (cores_.back().right_rank() != 1) throw ShapeError("last core must have right rank 1");
  for (std::size_t i = 0; i + 1 < cores_.size(); ++i) {
    if (cores_[i].right_rank() != cores_[i + 1].left_rank()) {
      throw ShapeError("rank mismatch between cores " + std::to_string(i) + " and " +
                       std::to_string(i + 1));
    }
  }
}

std::vector<Index> TtTensor::mode_sizes() const {
  std::vector<Index> n;
  n.reserve(cores_.size());
  for (const auto& c : cores_) n.push_back(c.mode_size());
  return n;
}

std::vector<Index> TtTensor::ranks() const {
  std::vector<Index> r;
  r.reserve(cores_.size() + 1);
  r.push_back(1);
  for (const auto& c : cores_) r.push_back(c.right_rank());
  return r;
}

Index TtTensor::max_rank() const {
  Index r = 1;
  for (const auto& c : cores_) r = std::max(r, c.right_rank());
  return r;
}

Index TtTensor::parameter_count() const {
  Index n = 0;
  for (const auto& c : cores_) n += c.size();
  return n;
}

double TtTensor::element_unchecked(std::span<const Index> k) const {
  // Row vector times slices, left to right.
  Eigen::RowVectorXd v = cores_[0].slice(k[0]);
  for (std::size_t i = 1; i < cores_.size(); ++i) {
    v = v * cores_[i].slice(k[i]);
  }
  return v(0);
}

Index checked_volume(std::span<const Index> mode_sizes) {
  constexpr Index kMax = std::numeric_limits<Index>::max();
  Index v = 1;
  for (Index n : mode_sizes) {
    if (n <= 0) return 0;
    if (v > kMax / n) return kMax;
    v *= n;
  }
  return v;
}

bool next_index(std::span<Index> k, std::span<const Index> mode_sizes) {
  for (std::size_t i = k.size(); i-- > 0;) {
    if (++k[i] < mode_sizes[i]) return true;
    k[i] = 0;
  }
  return false;
}

DenseTensor::DenseTensor(std::vector<Index> mode_sizes) : modes_(std::move(mode_sizes)) {
  const Index n = checked_volume(modes_);
  if (n > kMaxElements) {
    throw SizeError("dense tensor with " + std::to_string(n) + " elements exceeds the size guard");
  }
  values_.assign(static_cast<std::size_t>(n), 0.0);
}

DenseTensor::DenseTensor(std::vector<Index> mode_sizes, std::vector<double> values)
    : DenseTensor(std::move(mode_sizes)) {
  if (values.size() != values_.size()) throw ShapeError("value count does not match mode sizes");
  values_ = std::move(values);
}

Index DenseTensor::offset(std::span<const Index> k) const {
  if (k.size() != modes_.size()) throw ShapeError("index order does not match tensor order");
  Index off = 0;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (k[i] < 0 || k[i] >= modes_[i]) throw BoundsError("dense index out of range");
    off = off * modes_[i] + k[i];
  }
  return off;
}

double DenseTensor::frobenius_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

}  // namespace ttergodic::tt
