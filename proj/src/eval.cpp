// SPDX-License-Identifier: Apache-2.0
#include "awemet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include "awemet/math.hpp"
#include "awemet/parallel.hpp"
#include "awemet/rng.hpp"

namespace awemet {

double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw_usage("average_precision: scores/labels length mismatch");
  if (scores.empty()) throw_usage("average_precision: empty pair set");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (labels[a] != labels[b]) return labels[a] < labels[b];
    return a < b;
  });

  std::size_t positives = 0;
  for (int l : labels) {
    if (l != 0 && l != 1)
      throw_usage("average_precision: labels must be 0 or 1");
    positives += l;
  }
  if (positives == 0)
    throw_numeric("average_precision: no positive pair, AP undefined");

  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 1; rank <= n; ++rank) {
    if (labels[order[rank - 1]] != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank);
    }
  }
  return sum / static_cast<double>(positives);
}

namespace {

// All (i, j) with i < j, optionally a seeded uniform subset.
std::vector<std::pair<int, int>> pair_universe(int n, std::uint64_t max_pairs,
                                               std::uint64_t seed) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  if (max_pairs > 0 && max_pairs < pairs.size()) {
    Rng rng(derive_seed(seed, Stream::Subsample));
    rng.partial_shuffle(pairs, max_pairs);
    pairs.resize(max_pairs);
  }
  return pairs;
}

Mat normalized_columns(const Mat& X) {
  Mat Xn(X.rows(), X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c)
    Xn.col(c) = X.col(c) / std::max(X.col(c).norm(), kNormFloor);
  return Xn;
}

}  // namespace

bool has_same_class_pair(const std::vector<Item>& items) {
  std::set<int> seen;
  for (const Item& it : items)
    if (!seen.insert(it.class_id).second) return true;
  return false;
}

double acoustic_ap(const Mat& awes, const std::vector<int>& classes,
                   std::uint64_t max_pairs, std::uint64_t seed) {
  const int n = static_cast<int>(classes.size());
  if (awes.cols() != n) throw_usage("acoustic_ap: awes/classes mismatch");
  if (n < 2) throw_usage("acoustic_ap: need at least two items");
  const auto pairs = pair_universe(n, max_pairs, seed);
  const Mat emb = normalized_columns(awes);

  std::vector<double> scores(pairs.size());
  std::vector<int> labels(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    scores[k] = emb.col(i).dot(emb.col(j));
    labels[k] = classes[static_cast<std::size_t>(i)] ==
                classes[static_cast<std::size_t>(j)];
  });
  return average_precision(scores, labels);
}

double crossview_ap(const Mat& awes, const std::vector<int>& classes,
                    const Mat& agwes, const std::vector<int>& agwe_classes,
                    std::uint64_t max_pairs, std::uint64_t seed) {
  const int n = static_cast<int>(classes.size());
  const int c = static_cast<int>(agwe_classes.size());
  if (awes.cols() != n) throw_usage("crossview_ap: awes/classes mismatch");
  if (agwes.cols() != c)
    throw_usage("crossview_ap: agwes/agwe_classes mismatch");
  for (int cls : classes) {
    if (std::find(agwe_classes.begin(), agwe_classes.end(), cls) ==
        agwe_classes.end())
      throw_usage("crossview_ap: a represented class has no text embedding");
  }
  const Mat f = normalized_columns(awes);
  const Mat g = normalized_columns(agwes);

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(c));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) pairs.emplace_back(i, j);
  if (max_pairs > 0 && max_pairs < pairs.size()) {
    Rng rng(derive_seed(seed, Stream::Subsample));
    rng.partial_shuffle(pairs, max_pairs);
    pairs.resize(max_pairs);
  }

  std::vector<double> scores(pairs.size());
  std::vector<int> labels(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    scores[k] = f.col(i).dot(g.col(j));
    labels[k] = classes[static_cast<std::size_t>(i)] ==
                agwe_classes[static_cast<std::size_t>(j)];
  });
  return average_precision(scores, labels);
}

double dtw_similarity(const Mat& a, const Mat& b) {
  if (a.cols() < 1 || b.cols() < 1)
    throw_usage("dtw_similarity: empty sequence");
  if (a.rows() != b.rows())
    throw_usage("dtw_similarity: feature width mismatch");
  const Eigen::Index ta = a.cols(), tb = b.cols();
  const Mat cost =
      Mat::Ones(ta, tb) - normalized_columns(a).transpose() *
                              normalized_columns(b);

  // Lexicographic (cost, path length) dynamic program.  All predecessors
  // add the same cell cost and +1 length, so comparing accumulated pairs is
  // a valid DP and yields the shortest among minimum-cost paths.
  Mat D(ta, tb);
  Eigen::MatrixXi L(ta, tb);
  D(0, 0) = cost(0, 0);
  L(0, 0) = 1;
  for (Eigen::Index i = 1; i < ta; ++i) {
    D(i, 0) = D(i - 1, 0) + cost(i, 0);
    L(i, 0) = static_cast<int>(i) + 1;
  }
  for (Eigen::Index j = 1; j < tb; ++j) {
    D(0, j) = D(0, j - 1) + cost(0, j);
    L(0, j) = static_cast<int>(j) + 1;
  }
  for (Eigen::Index i = 1; i < ta; ++i) {
    for (Eigen::Index j = 1; j < tb; ++j) {
      double best = D(i - 1, j - 1);
      int len = L(i - 1, j - 1);
      if (D(i - 1, j) < best || (D(i - 1, j) == best && L(i - 1, j) < len)) {
        best = D(i - 1, j);
        len = L(i - 1, j);
      }
      if (D(i, j - 1) < best || (D(i, j - 1) == best && L(i, j - 1) < len)) {
        best = D(i, j - 1);
        len = L(i, j - 1);
      }
      D(i, j) = best + cost(i, j);
      L(i, j) = len + 1;
    }
  }
  return -D(ta - 1, tb - 1) / static_cast<double>(L(ta - 1, tb - 1));
}

double dtw_acoustic_ap(const std::vector<Item>& split,
                       std::uint64_t max_pairs, std::uint64_t seed) {
  const int n = static_cast<int>(split.size());
  if (n < 2) throw_usage("dtw_acoustic_ap: need at least two items");
  std::vector<Mat> normed(split.size());
  parallel_for(split.size(),
               [&](std::size_t i) { normed[i] = normalized_columns(split[i].frames); });

  const auto pairs = pair_universe(n, max_pairs, seed);
  std::vector<double> scores(pairs.size());
  std::vector<int> labels(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    // Columns are already unit norm; dtw_similarity re-normalizes, which is
    // a cheap no-op at this size.
    scores[k] = dtw_similarity(normed[static_cast<std::size_t>(i)],
                               normed[static_cast<std::size_t>(j)]);
    labels[k] = split[static_cast<std::size_t>(i)].class_id ==
                split[static_cast<std::size_t>(j)].class_id;
  });
  return average_precision(scores, labels);
}

}  // namespace awemet
