// SPDX-License-Identifier: Apache-2.0
//
// Numeric primitives: overflow-safe scalar transforms and the cosine
// similarity matrices (with analytic backward) that every loss consumes.
#pragma once

#include <vector>

#include "awemet/common.hpp"

namespace awemet {

// log(1 + e^z) without overflow for large |z|.
double softplus_stable(double z);

// 1 / (1 + e^{-z}) without overflow for large |z|.
double sigmoid_stable(double z);

// log(sum_j e^{z_j}); requires a non-empty input.
double lse_stable(const std::vector<double>& zs);

// e^{z_j} / sum_k e^{z_k}, computed with a max shift.
std::vector<double> softmax_stable(const std::vector<double>& zs);

// log(1 + sum_j e^{z_j}).  Empty input yields 0.
double else_fn(const std::vector<double>& zs);

// d(else_fn)/dz_j = e^{z_j} / (1 + sum_k e^{z_k}).  Sub-normalized: the
// weights sum to strictly less than one.
std::vector<double> else_weights(const std::vector<double>& zs);

// Norms below this floor are clamped before division.
inline constexpr double kNormFloor = 1e-12;

// cos(u, v) with floored norms; result lies in [-1, 1] up to rounding.
double cosine(const Vec& u, const Vec& v);

// Accumulates d(cos)/du and d(cos)/dv scaled by the upstream dS into du, dv.
void cosine_grad(const Vec& u, const Vec& v, double dS, Vec& du, Vec& dv);

// Which embeddings feed the rows/columns of the similarity matrix.
//   Single:      S(i,j) = cos(f_i, f_j)   one view only
//   MultiviewPN: S(i,j) = cos(f_i, g_j)   acoustic anchors vs. text
//   MultiviewA:  S(i,j) = cos(g_i, f_j)   text anchors vs. acoustic
enum class SimKind { Single, MultiviewPN, MultiviewA };

// Forward result plus the normalized columns cached for backward.
struct SimMatrix {
  SimKind kind = SimKind::Single;
  Mat S;      // n x n similarities
  Mat Uhat;   // d x n, normalized row-side embeddings
  Mat Vhat;   // d x n, normalized column-side embeddings
  Vec unorm;  // floored column norms of the row side
  Vec vnorm;  // floored column norms of the column side
};

// F holds acoustic embeddings as columns (d x n); G holds text embeddings
// as columns.  G is ignored for SimKind::Single.  MultiviewA is produced as
// the exact transpose of the MultiviewPN product.
SimMatrix build_similarity(const Mat& F, const Mat& G, SimKind kind);

// Accumulates dL/dF and dL/dG given dL/dS.  dF and dG must be pre-sized to
// match F and G; for SimKind::Single both row and column contributions land
// in dF and dG is untouched.
void similarity_backward(const SimMatrix& sm, const Mat& dS, Mat& dF,
                         Mat& dG);

}  // namespace awemet
