// SPDX-License-Identifier: Apache-2.0
#include "awemet/math.hpp"

#include <algorithm>
#include <cmath>

namespace awemet {

double softplus_stable(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid_stable(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double lse_stable(const std::vector<double>& zs) {
  if (zs.empty()) throw_numeric("lse_stable: empty input");
  const double m = *std::max_element(zs.begin(), zs.end());
  double sum = 0.0;
  for (double z : zs) sum += std::exp(z - m);
  return m + std::log(sum);
}

std::vector<double> softmax_stable(const std::vector<double>& zs) {
  if (zs.empty()) throw_numeric("softmax_stable: empty input");
  const double m = *std::max_element(zs.begin(), zs.end());
  std::vector<double> w(zs.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < zs.size(); ++j) {
    w[j] = std::exp(zs[j] - m);
    sum += w[j];
  }
  for (double& wj : w) wj /= sum;
  return w;
}

double else_fn(const std::vector<double>& zs) {
  if (zs.empty()) return 0.0;
  // log(1 + sum e^{z_j}) = m + log(e^{-m} + sum e^{z_j - m}), m >= 0.
  const double m =
      std::max(0.0, *std::max_element(zs.begin(), zs.end()));
  double sum = std::exp(-m);
  for (double z : zs) sum += std::exp(z - m);
  return m + std::log(sum);
}

std::vector<double> else_weights(const std::vector<double>& zs) {
  if (zs.empty()) return {};
  const double m =
      std::max(0.0, *std::max_element(zs.begin(), zs.end()));
  std::vector<double> w(zs.size());
  double sum = std::exp(-m);
  for (std::size_t j = 0; j < zs.size(); ++j) {
    w[j] = std::exp(zs[j] - m);
    sum += w[j];
  }
  for (double& wj : w) wj /= sum;
  return w;
}

double cosine(const Vec& u, const Vec& v) {
  const double nu = std::max(u.norm(), kNormFloor);
  const double nv = std::max(v.norm(), kNormFloor);
  return u.dot(v) / (nu * nv);
}

void cosine_grad(const Vec& u, const Vec& v, double dS, Vec& du, Vec& dv) {
  const double nu = std::max(u.norm(), kNormFloor);
  const double nv = std::max(v.norm(), kNormFloor);
  const Vec uh = u / nu;
  const Vec vh = v / nv;
  const double s = uh.dot(vh);
  // d cos / du = (v_hat - s * u_hat) / ||u||, and symmetrically for v.
  // When the norm sits on the floor the denominator is a constant, so the
  // projection term (which removes the radial component) is dropped.
  if (u.norm() > kNormFloor) {
    du += dS * (vh - s * uh) / nu;
  } else {
    du += dS * vh / nu;
  }
  if (v.norm() > kNormFloor) {
    dv += dS * (uh - s * vh) / nv;
  } else {
    dv += dS * uh / nv;
  }
}

namespace {

// Columns divided by floored norms; norms reported for backward.
void normalize_columns(const Mat& X, Mat& Xhat, Vec& norms) {
  Xhat.resize(X.rows(), X.cols());
  norms.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double n = std::max(X.col(j).norm(), kNormFloor);
    norms(j) = n;
    Xhat.col(j) = X.col(j) / n;
  }
}

// Pulls the gradient w.r.t. normalized columns back through the
// normalization, accumulating into dX.  norms(j) > kNormFloor exactly when
// the original column sat above the floor.
void denormalize_grad(const Mat& Xhat, const Vec& norms, const Mat& dXhat,
                      Mat& dX) {
  for (Eigen::Index j = 0; j < Xhat.cols(); ++j) {
    const Vec g = dXhat.col(j);
    if (norms(j) > kNormFloor) {
      const double radial = g.dot(Xhat.col(j));
      dX.col(j) += (g - radial * Xhat.col(j)) / norms(j);
    } else {
      dX.col(j) += g / norms(j);
    }
  }
}

}  // namespace

SimMatrix build_similarity(const Mat& F, const Mat& G, SimKind kind) {
  SimMatrix sm;
  sm.kind = kind;
  switch (kind) {
    case SimKind::Single:
      normalize_columns(F, sm.Uhat, sm.unorm);
      sm.Vhat = sm.Uhat;
      sm.vnorm = sm.unorm;
      sm.S = sm.Uhat.transpose() * sm.Vhat;
      break;
    case SimKind::MultiviewPN:
      if (F.cols() != G.cols() || F.rows() != G.rows())
        throw_numeric("build_similarity: view size mismatch");
      normalize_columns(F, sm.Uhat, sm.unorm);
      normalize_columns(G, sm.Vhat, sm.vnorm);
      sm.S = sm.Uhat.transpose() * sm.Vhat;
      break;
    case SimKind::MultiviewA:
      if (F.cols() != G.cols() || F.rows() != G.rows())
        throw_numeric("build_similarity: view size mismatch");
      // Rows are text anchors: S = (Fhat^T Ghat)^T so the transpose
      // relation to MultiviewPN holds exactly, bit for bit.
      normalize_columns(G, sm.Uhat, sm.unorm);
      normalize_columns(F, sm.Vhat, sm.vnorm);
      sm.S = (sm.Vhat.transpose() * sm.Uhat).transpose();
      break;
  }
  return sm;
}

void similarity_backward(const SimMatrix& sm, const Mat& dS, Mat& dF,
                         Mat& dG) {
  // S = Uhat^T Vhat  =>  dUhat = Vhat dS^T,  dVhat = Uhat dS.
  const Mat dUhat = sm.Vhat * dS.transpose();
  const Mat dVhat = sm.Uhat * dS;
  switch (sm.kind) {
    case SimKind::Single:
      denormalize_grad(sm.Uhat, sm.unorm, dUhat, dF);
      denormalize_grad(sm.Vhat, sm.vnorm, dVhat, dF);
      break;
    case SimKind::MultiviewPN:
      denormalize_grad(sm.Uhat, sm.unorm, dUhat, dF);
      denormalize_grad(sm.Vhat, sm.vnorm, dVhat, dG);
      break;
    case SimKind::MultiviewA:
      denormalize_grad(sm.Uhat, sm.unorm, dUhat, dG);
      denormalize_grad(sm.Vhat, sm.vnorm, dVhat, dF);
      break;
  }
}

}  // namespace awemet
