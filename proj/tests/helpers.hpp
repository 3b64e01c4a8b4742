#pragma once

#include <random>
#include <vector>

#include "ttergodic/tt/tensor.hpp"

namespace ttergodic::testing {

using tt::Core;
using tt::Index;
using tt::Matrix;
using tt::TtTensor;

/// Random TT with the given mode sizes and interior ranks, entries N(0, 1).
inline TtTensor random_tt(const std::vector<Index>& modes, const std::vector<Index>& interior,
                          std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::vector<Core> cores;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const Index l = i == 0 ? 1 : interior[i - 1];
    const Index r = i + 1 == modes.size() ? 1 : interior[i];
    Core c(l, r, modes[i]);
    for (double& v : c.data()) v = n(rng);
    cores.push_back(std::move(c));
  }
  return TtTensor(std::move(cores));
}

/// Random shape with d <= max_d, K_i <= max_k and ranks <= max_r.
inline TtTensor random_tt(std::mt19937_64& rng, std::size_t max_d = 4, Index max_k = 6, Index max_r = 4) {
  std::uniform_int_distribution<std::size_t> dd(1, max_d);
  std::uniform_int_distribution<Index> kk(1, max_k);
  std::uniform_int_distribution<Index> rr(1, max_r);
  const std::size_t d = dd(rng);
  std::vector<Index> modes(d), ranks(d > 0 ? d - 1 : 0);
  for (auto& k : modes) k = kk(rng);
  for (auto& r : ranks) r = rr(rng);
  return random_tt(modes, ranks, rng);
}

/// Elements by explicit slice products, independent of the library's
/// contraction code. Row-major over the multi-index.
inline std::vector<double> dense_values(const TtTensor& t) {
  const auto modes = t.mode_sizes();
  std::vector<Index> k(modes.size(), 0);
  std::vector<double> out;
  while (true) {
    Matrix acc = Matrix::Ones(1, 1);
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const Core& c = t.core(i);
      Matrix s(c.left_rank(), c.right_rank());
      for (Index a = 0; a < c.left_rank(); ++a) {
        for (Index b = 0; b < c.right_rank(); ++b) s(a, b) = c(a, b, k[i]);
      }
      acc = acc * s;
    }
    out.push_back(acc(0, 0));
    std::size_t i = modes.size();
    while (i > 0) {
      --i;
      if (++k[i] < modes[i]) break;
      k[i] = 0;
      if (i == 0) return out;
    }
    if (modes.empty()) return out;
  }
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double frob(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

}  // namespace ttergodic::testing
