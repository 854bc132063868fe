// SPDX-License-Identifier: Apache-2.0
//
// Word-discrimination metrics: average precision over scored pair sets
// (acoustic AWE-AWE pairs and cross-view AWE-AGWE pairs) and the DTW
// baseline over raw feature sequences.
#pragma once

#include <cstdint>
#include <vector>

#include "awemet/common.hpp"
#include "awemet/data.hpp"

namespace awemet {

// Mean precision at the rank of each positive, scores sorted descending.
// Ties are pessimistic: within one score, negatives rank ahead of positives,
// so equal scores never inflate the result.  Throws when no label is 1.
double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& labels);

// All unordered AWE pairs scored by cosine, labeled by class equality.
// max_pairs > 0 subsamples that many pairs with the seeded stream (the
// subset is drawn before any scoring, so it is identical across runs).
double acoustic_ap(const Mat& awes, const std::vector<int>& classes,
                   std::uint64_t max_pairs = 0, std::uint64_t seed = 0);

// True when some class appears twice, i.e. acoustic AP over the split is
// defined.  Callers turn a false into an actionable error before scoring.
bool has_same_class_pair(const std::vector<Item>& items);

// All (AWE, class-AGWE) pairs: one text embedding per evaluated class.
// agwes columns correspond to agwe_classes entries.
double crossview_ap(const Mat& awes, const std::vector<int>& classes,
                    const Mat& agwes, const std::vector<int>& agwe_classes,
                    std::uint64_t max_pairs = 0, std::uint64_t seed = 0);

// Alignment with steps {(1,0),(0,1),(1,1)}, frame cost 1 - cos, total cost
// divided by the alignment path length; similarity is the negated result
// (0 is the maximum, for identical sequences).  Among equal-cost paths the
// shorter one is preferred, deterministically.
double dtw_similarity(const Mat& a, const Mat& b);

// Acoustic AP where pair scores come from dtw_similarity over raw frames.
double dtw_acoustic_ap(const std::vector<Item>& split,
                       std::uint64_t max_pairs = 0, std::uint64_t seed = 0);

}  // namespace awemet
