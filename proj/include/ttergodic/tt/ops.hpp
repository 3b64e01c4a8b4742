#pragma once

#include <span>
#include <vector>

#include "ttergodic/tt/tensor.hpp"

namespace ttergodic::tt {

/// Element at a 1-based index tuple. Throws BoundsError when out of range.
double tt_element(const TtTensor& t, const IndexTuple& k);

/// Outer product a1 o a2 o ... o ad as a rank-1 TT.
TtTensor tt_rank1(std::span<const Vector> vectors);

/// Rank-1 tensor with every element zero.
TtTensor tt_zeros(std::span<const Index> mode_sizes);

/// Rank-1 tensor with every element one.
TtTensor tt_ones(std::span<const Index> mode_sizes);

TtTensor tt_add(const TtTensor& a, const TtTensor& b);
TtTensor tt_sub(const TtTensor& a, const TtTensor& b);
TtTensor tt_scale(double c, const TtTensor& a);

/// a*x + b*y in one block construction (ranks add).
TtTensor tt_axpby(double alpha, const TtTensor& x, double beta, const TtTensor& y);

TtTensor tt_hadamard(const TtTensor& a, const TtTensor& b);

/// Sum of elementwise products, by left-to-right core contraction.
double tt_inner(const TtTensor& a, const TtTensor& b);
/// sum_k a_k b_k c_k without forming the Hadamard product.
double tt_inner3(const TtTensor& a, const TtTensor& b, const TtTensor& c);

double tt_norm(const TtTensor& a);

DenseTensor tt_to_dense(const TtTensor& a);

/// Exact (eps = 0) or truncated TT-SVD of a dense tensor; oracle scale only.
TtTensor tt_from_dense(const DenseTensor& dense, double eps = 0.0);

/// Sum over all elements, equal to the inner product with the all-ones tensor.
double tt_sum(const TtTensor& a);

/// Contracts every core with a weight vector: sum_k w_i[k] G_i[:,:,k].
/// Returns the full contraction sum_k w1[k1]...wd[kd] T_k.
double tt_contract(const TtTensor& a, std::span<const Vector> weights);

}  // namespace ttergodic::tt
