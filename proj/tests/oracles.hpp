// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used only by tests. Deliberately
// naive: written straight from definitions, quadratic or exponential where
// that is the simplest correct thing, and sharing no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "awemet/common.hpp"

namespace oracles {

using awemet::Mat;
using awemet::Vec;

// Average precision by sweeping every cutoff of the pessimistically sorted
// list (descending score; within a tie, negatives ahead of positives) and
// integrating precision over recall steps. TP is recounted from scratch at
// each cutoff.
inline double sweep_average_precision(const std::vector<double>& scores,
                                      const std::vector<int>& labels) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (labels[a] != labels[b]) return labels[a] < labels[b];
    return a < b;
  });
  int total_pos = 0;
  for (int l : labels) total_pos += l;
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    int tp = 0;
    for (std::size_t t = 0; t < k; ++t) tp += labels[order[t]];
    const double precision = static_cast<double>(tp) / static_cast<double>(k);
    const double recall = static_cast<double>(tp) / total_pos;
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

inline double frame_cost(const Mat& a, const Mat& b, int i, int j) {
  const double na = std::max(a.col(i).norm(), 1e-12);
  const double nb = std::max(b.col(j).norm(), 1e-12);
  return 1.0 - a.col(i).dot(b.col(j)) / (na * nb);
}

inline void enumerate_alignments(const Mat& a, const Mat& b, int i, int j,
                                 double acc, int len, double& best_cost,
                                 int& best_len) {
  acc += frame_cost(a, b, i, j);
  ++len;
  const bool last_a = i + 1 == a.cols();
  const bool last_b = j + 1 == b.cols();
  if (last_a && last_b) {
    if (acc < best_cost || (acc == best_cost && len < best_len)) {
      best_cost = acc;
      best_len = len;
    }
    return;
  }
  if (!last_a) enumerate_alignments(a, b, i + 1, j, acc, len, best_cost, best_len);
  if (!last_b) enumerate_alignments(a, b, i, j + 1, acc, len, best_cost, best_len);
  if (!last_a && !last_b)
    enumerate_alignments(a, b, i + 1, j + 1, acc, len, best_cost, best_len);
}

// Brute-force alignment similarity: tries every monotone path with steps
// {(1,0),(0,1),(1,1)} from the first frame pair to the last.
inline double enumerated_dtw_similarity(const Mat& a, const Mat& b) {
  double best_cost = std::numeric_limits<double>::infinity();
  int best_len = std::numeric_limits<int>::max();
  enumerate_alignments(a, b, 0, 0, 0.0, 0, best_cost, best_len);
  return -best_cost / best_len;
}

// Literal per-anchor mean-of-softplus loss over both polarities:
//   sum_i [ (1/|P_i|) sum_{j in P_i} log(1 + e^{alpha (lambda - Sp_ij)})
//         + (1/|N_i|) sum_{k in N_i} log(1 + e^{beta (Sn_ik - lambda)}) ]
inline double direct_mean_softplus_loss(
    const Mat& sp, const Mat& sn, const std::vector<std::vector<int>>& pos,
    const std::vector<std::vector<int>>& neg, double alpha, double beta,
    double lambda) {
  double total = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (!pos[i].empty()) {
      double s = 0.0;
      for (int j : pos[i])
        s += std::log(1.0 + std::exp(alpha * (lambda - sp(static_cast<int>(i), j))));
      total += s / static_cast<double>(pos[i].size());
    }
    if (!neg[i].empty()) {
      double s = 0.0;
      for (int k : neg[i])
        s += std::log(1.0 + std::exp(beta * (sn(static_cast<int>(i), k) - lambda)));
      total += s / static_cast<double>(neg[i].size());
    }
  }
  return total;
}

// Literal per-anchor extended log-sum-exp loss over both polarities:
//   sum_i [ (1/alpha) log(1 + sum_{j in P_i} e^{alpha (lambda - Sp_ij)})
//         + (1/beta)  log(1 + sum_{k in N_i} e^{beta (Sn_ik - lambda)}) ]
inline double direct_extended_lse_loss(
    const Mat& sp, const Mat& sn, const std::vector<std::vector<int>>& pos,
    const std::vector<std::vector<int>>& neg, double alpha, double beta,
    double lambda) {
  double total = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    double acc_p = 0.0;
    for (int j : pos[i])
      acc_p += std::exp(alpha * (lambda - sp(static_cast<int>(i), j)));
    total += std::log(1.0 + acc_p) / alpha;
    double acc_n = 0.0;
    for (int k : neg[i])
      acc_n += std::exp(beta * (sn(static_cast<int>(i), k) - lambda));
    total += std::log(1.0 + acc_n) / beta;
  }
  return total;
}

}  // namespace oracles
