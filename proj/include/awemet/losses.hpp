// SPDX-License-Identifier: Apache-2.0
//
// Pair-weighting losses over similarity matrices: the MSP / ELSE / LSE /
// NEG-MEAN term catalog, the generalized asymmetric assembler, the
// Asymmetric-Proxy loss, and pair-based baselines (contrastive, triplet,
// multi-view triplet).  Every loss returns its value together with analytic
// gradients w.r.t. the similarity matrices and the raw embeddings.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "awemet/common.hpp"
#include "awemet/math.hpp"

namespace awemet {

// Per-anchor index sets: pos[i] holds same-class indices, neg[i] the rest.
struct IndexPartition {
  std::vector<std::vector<int>> pos;
  std::vector<std::vector<int>> neg;
};

// Whether the anchor itself may appear in its own positive set.  Single-view
// similarities exclude it (cos(f_i, f_i) = 1 carries no signal); multi-view
// similarities include it, since the anchor-to-own-proxy pair is the heart
// of proxy training.
enum class SelfPairPolicy { Exclude, Include };

inline SelfPairPolicy self_policy_for(SimKind k) {
  return k == SimKind::Single ? SelfPairPolicy::Exclude
                              : SelfPairPolicy::Include;
}

IndexPartition partition(const std::vector<int>& classes,
                         SelfPairPolicy policy);

// A single anchor-positive or anchor-negative term: scalar value plus a
// dense gradient matrix the same shape as S (zero outside the index sets).
struct PairTerm {
  double value = 0.0;
  Mat grad;
};

enum class Polarity { Positive, Negative };

// Mean softplus per anchor ("self-hardness": each pair weighted by its own
// violation).  Positive polarity: sum_i (1/|P_i|) sum_j log(1+e^{a(l-S_ij)});
// negative polarity mirrors with a(S_ik - l).  Empty sets contribute 0.
PairTerm msp_term(const Mat& S, const std::vector<std::vector<int>>& sets,
                  Polarity pol, double scale, double lambda);

// Extended log-sum-exp per anchor ("relative-hardness": pairs weighted
// softmax-style against set peers, sub-normalized by the implicit zero).
// Positive polarity: sum_i (1/a) log(1 + sum_j e^{a(l-S_ij)}).
PairTerm else_term(const Mat& S, const std::vector<std::vector<int>>& sets,
                   Polarity pol, double scale, double lambda);

// Margin-free log-sum-exp: positive polarity smooth-max of -scale*S
// (hardest-positive pull), negative polarity smooth-max of scale*S
// (hardest-negative push).  The negative form is the NCA partition term.
PairTerm lse_term(const Mat& S, const std::vector<std::vector<int>>& sets,
                  Polarity pol, double scale);

// Linear mean per anchor, scaled: positive polarity -scale*mean_j S_ij (the
// NCA pull term); negative polarity +scale*mean_k S_ik.
PairTerm neg_mean_term(const Mat& S,
                       const std::vector<std::vector<int>>& sets,
                       Polarity pol, double scale);

enum class PairFn { Msp, Else, Lse, NegMean };

// The 4-tuple (F_P, F_N, S^P-kind, S^N-kind) plus scales and margin that
// names every pair-weighting loss in the catalog.  Defaults give the
// Asymmetric-Proxy loss.
struct LossSpec {
  PairFn fp = PairFn::Else;
  PairFn fn = PairFn::Msp;
  SimKind sp_kind = SimKind::MultiviewA;
  SimKind sn_kind = SimKind::MultiviewPN;
  double alpha = 2.0;
  double beta = 50.0;
  double lambda = 0.5;
};

struct LossResult {
  double value = 0.0;
  Mat grad_s_p;   // dL/dS^P, n x n (zero-size when the loss has no such term)
  Mat grad_s_n;   // dL/dS^N
  Mat grad_awes;  // dL/d(acoustic embeddings), d x n
  Mat grad_agwes; // dL/d(text embeddings), d x n (zero-size if unused)
};

using LossEvaluator = std::function<LossResult(
    const Mat& awes, const Mat& agwes, const std::vector<int>& classes)>;

// Builds S^P and S^N of the requested kinds, applies fp over positives and
// fn over negatives, and chains gradients back to the raw embeddings.
LossResult evaluate_gpw(const LossSpec& spec, const Mat& awes,
                        const Mat& agwes, const std::vector<int>& classes);

LossEvaluator assemble_gpw(const LossSpec& spec);

// Named convenience entry point: evaluate_gpw with
// (ELSE, MSP, multiview-A, multiview-P/N, alpha, beta, lambda).
LossResult asymmetric_proxy_loss(const Mat& awes, const Mat& agwes,
                                 const std::vector<int>& classes,
                                 double alpha, double beta, double lambda);

// Single-view contrastive: positives pulled via (1 - S_ij), negatives hinged
// via max(0, S_ik - margin), each averaged per anchor set.
LossResult contrastive_loss(const Mat& awes, const std::vector<int>& classes,
                            double margin);

// Single-view triplet: one (positive, negative) sampled per anchor from the
// seeded stream; mean over valid anchors of max(0, margin + S_ik - S_ij).
// Throws a numeric error when no anchor has both a positive and a negative.
LossResult triplet_loss(const Mat& awes, const std::vector<int>& classes,
                        double margin, std::uint64_t sample_seed);

// Two cross-view triplet terms sharing one sampled negative class index per
// anchor: acoustic anchor against (own text embedding, other text embedding)
// and text anchor against (own acoustic, other acoustic).
LossResult mv_triplet_loss(const Mat& awes, const Mat& agwes,
                           const std::vector<int>& classes, double margin,
                           std::uint64_t sample_seed);

// Worst-case comparison of the analytic embedding gradient against central
// finite differences of the loss value.  The error is measured at the scale
// of the largest gradient entry: max_i |a_i - f_i| / max(||a||_inf,
// ||f||_inf, 1e-9).  When both gradients vanish (all hinges inactive) the
// report flags zero_grad and max_abs_err is the figure to bound.
struct FdReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  bool zero_grad = false;
  int worst_view = 0;  // 0 = awes, 1 = agwes
  int worst_row = -1;
  int worst_col = -1;
};

FdReport finite_difference_audit(const LossEvaluator& eval, const Mat& awes,
                                 const Mat& agwes,
                                 const std::vector<int>& classes, double eps);

// ---- Method catalog ------------------------------------------------------

enum class MethodKind { Gpw, Contrastive, Triplet, MvTriplet, Dtw };

struct MethodSpec {
  std::string name;
  MethodKind kind = MethodKind::Gpw;
  LossSpec loss;        // used when kind == Gpw
  double margin = 0.5;  // used by contrastive / triplet / mv-triplet
};

// Known names: dtw, contrastive, triplet, mv-triplet, proxy-nca-pn,
// proxy-nca-a, proxy-bd-pn, proxy-bd-a, proxy-ms-pn, proxy-ms-a,
// asymmetric-proxy, and gpw-<fp>-<fn>-<sp>-<sn> grid cells
// (e.g. gpw-else-msp-a-pn).  Throws a usage error on unknown names.
MethodSpec method_preset(const std::string& name);

// Every trainable preset plus the full {MSP,ELSE}^2 x {P/N,A}^2 grid —
// the gradient-audit suite.
std::vector<MethodSpec> gradcheck_methods();

// The comparison-table method list: dtw, contrastive, triplet, mv-triplet,
// the six symmetric proxy rows, and asymmetric-proxy.
std::vector<MethodSpec> table_methods();

// The 12 asymmetric grid rows (function swaps, similarity swaps, and both).
std::vector<MethodSpec> asymmetry_grid_methods();

// Evaluates any trainable method; sample_seed feeds the triplet samplers
// and is ignored by deterministic losses.  MethodKind::Dtw is rejected.
LossResult evaluate_method(const MethodSpec& method, const Mat& awes,
                           const Mat& agwes, const std::vector<int>& classes,
                           std::uint64_t sample_seed);

const char* pair_fn_name(PairFn f);
const char* sim_kind_name(SimKind k);
PairFn pair_fn_from_name(const std::string& s);
SimKind sim_kind_from_name(const std::string& s);

}  // namespace awemet
