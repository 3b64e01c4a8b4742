#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/LU>

#include "helpers.hpp"
#include "ttergodic/errors.hpp"
#include "ttergodic/tt/cross.hpp"
#include "ttergodic/tt/io.hpp"
#include "ttergodic/tt/maxvol.hpp"
#include "ttergodic/tt/ops.hpp"
#include "ttergodic/tt/round.hpp"

using namespace ttergodic;
using namespace ttergodic::tt;
using ttergodic::testing::dense_values;
using ttergodic::testing::frob;
using ttergodic::testing::max_abs_diff;
using ttergodic::testing::random_tt;

namespace {

// Same shape as a, fresh random cores.
TtTensor like(const TtTensor& a, std::mt19937_64& rng, Index r = 3) {
  const auto modes = a.mode_sizes();
  return random_tt(modes, std::vector<Index>(modes.size() - 1, r), rng);
}

}  // namespace

TEST(Core, UnfoldingsShareStorage) {
  Core c(2, 3, 4);
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] = static_cast<double>(i);
  for (Index a = 0; a < 2; ++a) {
    for (Index b = 0; b < 3; ++b) {
      for (Index k = 0; k < 4; ++k) {
        EXPECT_EQ(c.left_unfolding()(a + 2 * k, b), c(a, b, k));
        EXPECT_EQ(c.right_unfolding()(a, k + 4 * b), c(a, b, k));
        EXPECT_EQ(c.slice(k)(a, b), c(a, b, k));
      }
    }
  }
}

TEST(TtTensor, RejectsBrokenRankChain) {
  std::vector<Core> cores{Core(1, 2, 3), Core(3, 1, 3)};
  EXPECT_THROW(TtTensor{cores}, ShapeError);
  std::vector<Core> open{Core(2, 1, 3)};
  EXPECT_THROW(TtTensor{open}, ShapeError);
}

TEST(TtTensor, ParameterCountMatchesCoreSizes) {
  std::mt19937_64 rng(3);
  const auto t = random_tt({4, 5, 6}, {2, 3}, rng);
  EXPECT_EQ(t.parameter_count(), 1 * 2 * 4 + 2 * 3 * 5 + 3 * 1 * 6);
}

TEST(TtOps, ElementMatchesSliceProducts) {
  std::mt19937_64 rng(11);
  const auto t = random_tt({3, 4, 2}, {2, 3}, rng);
  const auto ref = dense_values(t);
  std::size_t n = 0;
  for (Index a = 1; a <= 3; ++a) {
    for (Index b = 1; b <= 4; ++b) {
      for (Index c = 1; c <= 2; ++c) EXPECT_NEAR(tt_element(t, {a, b, c}), ref[n++], 1e-12);
    }
  }
  EXPECT_THROW(tt_element(t, {4, 1, 1}), BoundsError);
  EXPECT_THROW(tt_element(t, {0, 1, 1}), BoundsError);
  EXPECT_THROW(tt_element(t, {1, 1}), BoundsError);
}

TEST(TtOps, AlgebraMatchesDenseOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_tt(rng);
    const auto b = like(a, rng);
    const auto da = dense_values(a);
    const auto db = dense_values(b);
    std::vector<double> sum(da.size()), had(da.size()), sc(da.size());
    double inner = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
      sum[i] = da[i] + db[i];
      had[i] = da[i] * db[i];
      sc[i] = -2.5 * da[i];
      inner += da[i] * db[i];
    }
    EXPECT_LT(max_abs_diff(dense_values(tt_add(a, b)), sum), 1e-10);
    EXPECT_LT(max_abs_diff(dense_values(tt_hadamard(a, b)), had), 1e-10);
    EXPECT_LT(max_abs_diff(dense_values(tt_scale(-2.5, a)), sc), 1e-10);
    EXPECT_NEAR(tt_inner(a, b), inner, 1e-10 * (1 + std::abs(inner)));
    EXPECT_NEAR(tt_norm(a), frob(da), 1e-10 * (1 + frob(da)));
    EXPECT_NEAR(tt_sum(a), std::accumulate(da.begin(), da.end(), 0.0), 1e-9 * (1 + frob(da)));
  }
}

TEST(TtOps, Inner3AvoidsHadamardButAgrees) {
  std::mt19937_64 rng(5);
  const auto a = random_tt({3, 4, 5}, {2, 3}, rng);
  const auto b = random_tt({3, 4, 5}, {3, 2}, rng);
  const auto c = random_tt({3, 4, 5}, {1, 2}, rng);
  const auto da = dense_values(a), db = dense_values(b), dc = dense_values(c);
  double ref = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) ref += da[i] * db[i] * dc[i];
  EXPECT_NEAR(tt_inner3(a, b, c), ref, 1e-10 * (1 + std::abs(ref)));
}

TEST(TtOps, AddRejectsMismatchedModes) {
  std::mt19937_64 rng(1);
  const auto a = random_tt({3, 4}, {2}, rng);
  const auto b = random_tt({3, 5}, {2}, rng);
  EXPECT_THROW(tt_add(a, b), ShapeError);
  EXPECT_THROW(tt_inner(a, b), ShapeError);
}

TEST(TtOps, Rank1OuterProduct) {
  std::vector<Vector> v{Vector::LinSpaced(3, 1, 3), Vector::LinSpaced(2, -1, 1)};
  const auto t = tt_rank1(v);
  EXPECT_EQ(t.max_rank(), 1);
  EXPECT_DOUBLE_EQ(tt_element(t, {3, 1}), -3.0);
  EXPECT_DOUBLE_EQ(tt_element(t, {2, 2}), 2.0);
  const std::vector<Index> modes{3, 2};
  EXPECT_DOUBLE_EQ(tt_norm(tt_zeros(modes)), 0.0);
  EXPECT_DOUBLE_EQ(tt_sum(tt_ones(modes)), 6.0);
}

TEST(TtOps, ContractWithWeights) {
  std::mt19937_64 rng(9);
  const auto t = random_tt({3, 4}, {2}, rng);
  std::vector<Vector> w{Vector::Random(3), Vector::Random(4)};
  const auto d = dense_values(t);
  double ref = 0.0;
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 4; ++j) ref += w[0](i) * w[1](j) * d[i * 4 + j];
  }
  EXPECT_NEAR(tt_contract(t, w), ref, 1e-12);
}

TEST(TtRound, AccuracyContractHolds) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = random_tt(rng);
    const double na = tt_norm(a);
    for (double eps : {1e-1, 1e-2, 1e-6}) {
      const auto r = tt_round(a, ToleranceSpec::accuracy(eps));
      auto diff = dense_values(r);
      const auto ref = dense_values(a);
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= ref[i];
      EXPECT_LE(frob(diff), eps * na * (1 + 1e-9) + 1e-12);
      for (std::size_t i = 0; i < a.ranks().size(); ++i) EXPECT_LE(r.ranks()[i], a.ranks()[i]);
    }
  }
}

TEST(TtRound, DoublingRestoresRanks) {
  std::mt19937_64 rng(8);
  const auto a = random_tt({4, 5, 4, 3}, {2, 3, 2}, rng);
  const auto twice = tt_add(a, a);
  EXPECT_EQ(twice.ranks(), (std::vector<Index>{1, 4, 6, 4, 1}));
  const auto r = tt_round(twice, ToleranceSpec::accuracy(1e-12));
  EXPECT_EQ(r.ranks(), a.ranks());
  // compare densely: a TT inner product of a difference cancels down to
  // sqrt(machine eps) relative accuracy
  auto two_a = dense_values(a);
  for (double& v : two_a) v *= 2.0;
  EXPECT_LT(max_abs_diff(dense_values(r), two_a), 1e-10 * frob(two_a));
}

TEST(TtRound, RankCapIsRespected) {
  std::mt19937_64 rng(4);
  const auto a = random_tt({5, 5, 5, 5}, {4, 4, 4}, rng);
  const auto r = tt_round(a, ToleranceSpec::max_rank(2));
  EXPECT_LE(r.max_rank(), 2);
  EXPECT_THROW(ToleranceSpec::max_rank(0), ArgumentError);
  EXPECT_THROW(ToleranceSpec::accuracy(0.0), ArgumentError);
}

TEST(TtRound, RightOrthogonalizePreservesValuesAndNorm) {
  std::mt19937_64 rng(6);
  const auto a = random_tt({3, 4, 5}, {3, 3}, rng);
  const auto o = tt_right_orthogonalize(a);
  EXPECT_LT(max_abs_diff(dense_values(o), dense_values(a)), 1e-10);
  for (std::size_t i = 1; i < o.order(); ++i) {
    const Matrix r = o.core(i).right_unfolding();
    EXPECT_LT((r * r.transpose() - Matrix::Identity(r.rows(), r.rows())).norm(), 1e-12);
  }
  EXPECT_NEAR(Eigen::Map<const Vector>(o.core(0).data().data(), o.core(0).size()).norm(), tt_norm(a), 1e-10);
}

TEST(TtDense, SvdRoundTrip) {
  std::mt19937_64 rng(13);
  const auto a = random_tt({3, 4, 3}, {2, 2}, rng);
  const auto dense = tt_to_dense(a);
  const auto ref = dense_values(a);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(dense.values()[i], ref[i], 1e-12);
  const auto back = tt_from_dense(dense, 1e-12);
  EXPECT_EQ(back.ranks(), a.ranks());
  EXPECT_LT(max_abs_diff(dense_values(back), ref), 1e-10);
  EXPECT_THROW(DenseTensor(std::vector<Index>{10000, 10000}), SizeError);
}

TEST(Maxvol, FindsDominantRowsAndInterpolates) {
  Matrix a(6, 2);
  a << 0.1, 0.0, 5.0, 0.1, 0.2, 0.3, 0.0, 4.0, 0.1, 0.1, 0.3, 0.2;
  const auto r = maxvol(a);
  std::vector<Index> rows = r.rows;
  std::sort(rows.begin(), rows.end());
  EXPECT_EQ(rows, (std::vector<Index>{1, 3}));
  EXPECT_LE(r.coefficients.cwiseAbs().maxCoeff(), 1.0 + 1e-2 + 1e-12);
  Matrix sub(2, 2);
  for (int i = 0; i < 2; ++i) sub.row(i) = a.row(r.rows[i]);
  EXPECT_LT((r.coefficients * sub - a).norm(), 1e-12);
}

TEST(Maxvol, SkeletonIsExactForLowRank) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n;
  Matrix u(20, 3), v(3, 15);
  for (Index i = 0; i < u.size(); ++i) u.data()[i] = n(rng);
  for (Index i = 0; i < v.size(); ++i) v.data()[i] = n(rng);
  const Matrix m = u * v;
  const auto rows = maxvol(m.leftCols(3)).rows;
  const auto cols = maxvol(m.transpose().leftCols(3)).rows;
  Matrix c(20, 3), r(3, 15), x(3, 3);
  for (int j = 0; j < 3; ++j) c.col(j) = m.col(cols[j]);
  for (int i = 0; i < 3; ++i) r.row(i) = m.row(rows[i]);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = m(rows[i], cols[j]);
  }
  EXPECT_LT((c * x.inverse() * r - m).norm(), 1e-9 * m.norm());
}

TEST(Cross, RecoversSeparableFunctionExactly) {
  const std::vector<Index> modes{8, 8, 8, 8};
  auto f = [](const IndexTuple& k) {
    double s = 1.0;
    for (std::size_t i = 0; i < k.size(); ++i) s *= 1.0 + 0.1 * static_cast<double>(k.zero_based(i) * (i + 1));
    return s;
  };
  CrossOptions opt;
  opt.eps = 1e-10;
  const auto r = tt_cross(f, modes, opt);
  EXPECT_LE(r.error_estimate, 1e-10);
  for (Index a = 1; a <= 8; a += 3) {
    for (Index b = 1; b <= 8; b += 2) EXPECT_NEAR(tt_element(r.tensor, {a, b, 2, 7}), f(IndexTuple{a, b, 2, 7}), 1e-9);
  }
  EXPECT_EQ(r.validation_calls, opt.validation_samples);
}

TEST(Cross, LowRankSumAndHeldOutError) {
  const std::vector<Index> modes{10, 10, 10};
  // 1 / (1 + i + j + k) has rapidly decaying TT ranks
  auto f = [](const IndexTuple& k) {
    return 1.0 / (1.0 + static_cast<double>(k.zero_based(0) + k.zero_based(1) + k.zero_based(2)));
  };
  CrossOptions opt;
  opt.eps = 1e-6;
  const auto r = tt_cross(f, modes, opt);
  const auto dense = dense_values(r.tensor);
  double err = 0.0, ref = 0.0;
  std::size_t n = 0;
  for (Index a = 0; a < 10; ++a) {
    for (Index b = 0; b < 10; ++b) {
      for (Index c = 0; c < 10; ++c) {
        const double v = 1.0 / (1.0 + a + b + c);
        err += (dense[n] - v) * (dense[n] - v);
        ref += v * v;
        ++n;
      }
    }
  }
  EXPECT_LT(std::sqrt(err / ref), 1e-5);
  EXPECT_LT(r.tensor.max_rank(), 10);
}

TEST(Cross, GivesUpWithConvergenceError) {
  const std::vector<Index> modes{6, 6, 6};
  std::mt19937_64 rng(1);
  std::vector<double> noise(216);
  std::normal_distribution<double> n;
  for (double& v : noise) v = n(rng);
  auto f = [&](const IndexTuple& k) { return noise[k.zero_based(0) * 36 + k.zero_based(1) * 6 + k.zero_based(2)]; };
  CrossOptions opt;
  opt.eps = 1e-12;
  opt.max_sweeps = 1;
  opt.max_rank = 2;
  EXPECT_THROW(tt_cross(f, modes, opt), ConvergenceError);
}

TEST(TtIo, BinaryRoundTrip) {
  std::mt19937_64 rng(31);
  const auto a = random_tt({3, 5, 2}, {2, 4}, rng);
  std::stringstream s;
  write_tt(s, a);
  const auto b = read_tt(s);
  EXPECT_EQ(b.ranks(), a.ranks());
  EXPECT_EQ(b.mode_sizes(), a.mode_sizes());
  EXPECT_EQ(dense_values(a), dense_values(b));
}

TEST(TtIo, RejectsTruncatedInput) {
  std::mt19937_64 rng(31);
  const auto a = random_tt({3, 5}, {2}, rng);
  std::stringstream s;
  write_tt(s, a);
  std::string bytes = s.str();
  bytes.resize(bytes.size() - 8);
  std::stringstream cut(bytes);
  EXPECT_THROW(read_tt(cut), ParseError);
}
