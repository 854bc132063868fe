// SPDX-License-Identifier: Apache-2.0
#include "awemet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "awemet/rng.hpp"

namespace awemet {

IndexPartition partition(const std::vector<int>& classes,
                         SelfPairPolicy policy) {
  if (classes.empty()) throw_usage("partition: empty class list");
  const int n = static_cast<int>(classes.size());
  IndexPartition part;
  part.pos.resize(classes.size());
  part.neg.resize(classes.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (classes[j] == classes[i]) {
        if (j != i || policy == SelfPairPolicy::Include)
          part.pos[i].push_back(j);
      } else {
        part.neg[i].push_back(j);
      }
    }
  }
  return part;
}

namespace {

void check_scale(double scale, const char* fn) {
  if (!(scale > 0.0)) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s: scale must be positive", fn);
    throw_usage(buf);
  }
}

// z for one pair: positive sets penalize low similarity, negatives high.
inline double pair_arg(Polarity pol, double scale, double lambda, double s) {
  return pol == Polarity::Positive ? scale * (lambda - s)
                                   : scale * (s - lambda);
}

// dz/dS carries the polarity sign.
inline double pair_sign(Polarity pol) {
  return pol == Polarity::Positive ? -1.0 : 1.0;
}

}  // namespace

PairTerm msp_term(const Mat& S, const std::vector<std::vector<int>>& sets,
                  Polarity pol, double scale, double lambda) {
  check_scale(scale, "msp_term");
  PairTerm t;
  t.grad = Mat::Zero(S.rows(), S.cols());
  const double sgn = pair_sign(pol);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].empty()) continue;
    const double inv = 1.0 / static_cast<double>(sets[i].size());
    for (int j : sets[i]) {
      const double z = pair_arg(pol, scale, lambda, S(i, j));
      t.value += inv * softplus_stable(z);
      t.grad(i, j) += sgn * scale * sigmoid_stable(z) * inv;
    }
  }
  return t;
}

PairTerm else_term(const Mat& S, const std::vector<std::vector<int>>& sets,
                   Polarity pol, double scale, double lambda) {
  check_scale(scale, "else_term");
  PairTerm t;
  t.grad = Mat::Zero(S.rows(), S.cols());
  const double sgn = pair_sign(pol);
  std::vector<double> zs;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].empty()) continue;
    zs.clear();
    for (int j : sets[i]) zs.push_back(pair_arg(pol, scale, lambda, S(i, j)));
    t.value += else_fn(zs) / scale;
    // d/dz of log(1 + sum e^z) sub-normalizes; the 1/scale prefactor and
    // dz/dS = sgn*scale cancel to leave the bare weights.
    const std::vector<double> w = else_weights(zs);
    for (std::size_t a = 0; a < sets[i].size(); ++a)
      t.grad(i, sets[i][a]) += sgn * w[a];
  }
  return t;
}

PairTerm lse_term(const Mat& S, const std::vector<std::vector<int>>& sets,
                  Polarity pol, double scale) {
  check_scale(scale, "lse_term");
  PairTerm t;
  t.grad = Mat::Zero(S.rows(), S.cols());
  const double sgn = pair_sign(pol);
  std::vector<double> zs;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].empty()) continue;
    zs.clear();
    for (int j : sets[i]) zs.push_back(sgn * scale * S(i, j));
    t.value += lse_stable(zs);
    const std::vector<double> w = softmax_stable(zs);
    for (std::size_t a = 0; a < sets[i].size(); ++a)
      t.grad(i, sets[i][a]) += sgn * scale * w[a];
  }
  return t;
}

PairTerm neg_mean_term(const Mat& S,
                       const std::vector<std::vector<int>>& sets,
                       Polarity pol, double scale) {
  check_scale(scale, "neg_mean_term");
  PairTerm t;
  t.grad = Mat::Zero(S.rows(), S.cols());
  const double sgn = pair_sign(pol);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].empty()) continue;
    const double w = sgn * scale / static_cast<double>(sets[i].size());
    for (int j : sets[i]) {
      t.value += w * S(i, j);
      t.grad(i, j) += w;
    }
  }
  return t;
}

namespace {

PairTerm apply_pair_fn(PairFn fn, const Mat& S,
                       const std::vector<std::vector<int>>& sets,
                       Polarity pol, double scale, double lambda) {
  switch (fn) {
    case PairFn::Msp:
      return msp_term(S, sets, pol, scale, lambda);
    case PairFn::Else:
      return else_term(S, sets, pol, scale, lambda);
    case PairFn::Lse:
      return lse_term(S, sets, pol, scale);
    case PairFn::NegMean:
      return neg_mean_term(S, sets, pol, scale);
  }
  throw_internal("apply_pair_fn: unreachable");
}

void check_batch(const Mat& awes, const Mat& agwes,
                 const std::vector<int>& classes, bool needs_text) {
  if (classes.empty()) throw_usage("loss: empty batch");
  const auto n = static_cast<Eigen::Index>(classes.size());
  if (awes.cols() != n) throw_usage("loss: awes/classes length mismatch");
  if (needs_text) {
    if (agwes.cols() != n) throw_usage("loss: agwes/classes length mismatch");
    if (agwes.rows() != awes.rows())
      throw_usage("loss: embedding dimension mismatch across views");
  }
}

}  // namespace

LossResult evaluate_gpw(const LossSpec& spec, const Mat& awes,
                        const Mat& agwes, const std::vector<int>& classes) {
  if (!(spec.alpha > 0.0) || !(spec.beta > 0.0))
    throw_usage("loss spec: alpha and beta must be positive");
  const bool needs_text = spec.sp_kind != SimKind::Single ||
                          spec.sn_kind != SimKind::Single;
  check_batch(awes, agwes, classes, needs_text);

  const IndexPartition part_p =
      partition(classes, self_policy_for(spec.sp_kind));
  const IndexPartition part_n =
      partition(classes, self_policy_for(spec.sn_kind));

  const SimMatrix smp = build_similarity(awes, agwes, spec.sp_kind);
  SimMatrix smn_storage;
  const SimMatrix* smn = &smp;
  if (spec.sn_kind != spec.sp_kind) {
    smn_storage = build_similarity(awes, agwes, spec.sn_kind);
    smn = &smn_storage;
  }

  PairTerm tp = apply_pair_fn(spec.fp, smp.S, part_p.pos, Polarity::Positive,
                              spec.alpha, spec.lambda);
  PairTerm tn = apply_pair_fn(spec.fn, smn->S, part_n.neg,
                              Polarity::Negative, spec.beta, spec.lambda);

  LossResult r;
  r.value = tp.value + tn.value;
  r.grad_awes = Mat::Zero(awes.rows(), awes.cols());
  Mat sink;  // receives nothing for single-view kinds
  Mat& dG = needs_text
                ? (r.grad_agwes = Mat::Zero(agwes.rows(), agwes.cols()))
                : sink;
  if (smn == &smp) {
    similarity_backward(smp, tp.grad + tn.grad, r.grad_awes, dG);
  } else {
    similarity_backward(smp, tp.grad, r.grad_awes, dG);
    similarity_backward(*smn, tn.grad, r.grad_awes, dG);
  }
  r.grad_s_p = std::move(tp.grad);
  r.grad_s_n = std::move(tn.grad);
  return r;
}

LossEvaluator assemble_gpw(const LossSpec& spec) {
  return [spec](const Mat& awes, const Mat& agwes,
                const std::vector<int>& classes) {
    return evaluate_gpw(spec, awes, agwes, classes);
  };
}

LossResult asymmetric_proxy_loss(const Mat& awes, const Mat& agwes,
                                 const std::vector<int>& classes,
                                 double alpha, double beta, double lambda) {
  LossSpec spec;
  spec.fp = PairFn::Else;
  spec.fn = PairFn::Msp;
  spec.sp_kind = SimKind::MultiviewA;
  spec.sn_kind = SimKind::MultiviewPN;
  spec.alpha = alpha;
  spec.beta = beta;
  spec.lambda = lambda;
  return evaluate_gpw(spec, awes, agwes, classes);
}

LossResult contrastive_loss(const Mat& awes, const std::vector<int>& classes,
                            double margin) {
  check_batch(awes, Mat(), classes, false);
  const IndexPartition part = partition(classes, SelfPairPolicy::Exclude);
  const SimMatrix sm = build_similarity(awes, Mat(), SimKind::Single);

  LossResult r;
  Mat dS = Mat::Zero(sm.S.rows(), sm.S.cols());
  for (std::size_t i = 0; i < part.pos.size(); ++i) {
    if (!part.pos[i].empty()) {
      const double inv = 1.0 / static_cast<double>(part.pos[i].size());
      for (int j : part.pos[i]) {
        r.value += inv * (1.0 - sm.S(i, j));
        dS(i, j) -= inv;
      }
    }
    if (!part.neg[i].empty()) {
      const double inv = 1.0 / static_cast<double>(part.neg[i].size());
      for (int k : part.neg[i]) {
        const double h = sm.S(i, k) - margin;
        if (h > 0.0) {
          r.value += inv * h;
          dS(i, k) += inv;
        }
      }
    }
  }
  r.grad_awes = Mat::Zero(awes.rows(), awes.cols());
  Mat sink;
  similarity_backward(sm, dS, r.grad_awes, sink);
  r.grad_s_p = std::move(dS);
  return r;
}

LossResult triplet_loss(const Mat& awes, const std::vector<int>& classes,
                        double margin, std::uint64_t sample_seed) {
  check_batch(awes, Mat(), classes, false);
  const IndexPartition part = partition(classes, SelfPairPolicy::Exclude);
  const SimMatrix sm = build_similarity(awes, Mat(), SimKind::Single);

  Rng rng(derive_seed(sample_seed, static_cast<uint64_t>(Stream::PairSample)));
  struct Triple {
    int i, j, k;
  };
  std::vector<Triple> triples;
  for (std::size_t i = 0; i < part.pos.size(); ++i) {
    if (part.pos[i].empty() || part.neg[i].empty()) continue;
    const int j = part.pos[i][rng.uniform_index(part.pos[i].size())];
    const int k = part.neg[i][rng.uniform_index(part.neg[i].size())];
    triples.push_back({static_cast<int>(i), j, k});
  }
  if (triples.empty()) throw_numeric("triplet_loss: no valid triplet in batch");

  LossResult r;
  Mat dS = Mat::Zero(sm.S.rows(), sm.S.cols());
  const double inv = 1.0 / static_cast<double>(triples.size());
  for (const Triple& t : triples) {
    const double h = margin + sm.S(t.i, t.k) - sm.S(t.i, t.j);
    if (h > 0.0) {
      r.value += inv * h;
      dS(t.i, t.k) += inv;
      dS(t.i, t.j) -= inv;
    }
  }
  r.grad_awes = Mat::Zero(awes.rows(), awes.cols());
  Mat sink;
  similarity_backward(sm, dS, r.grad_awes, sink);
  r.grad_s_p = std::move(dS);
  return r;
}

LossResult mv_triplet_loss(const Mat& awes, const Mat& agwes,
                           const std::vector<int>& classes, double margin,
                           std::uint64_t sample_seed) {
  check_batch(awes, agwes, classes, true);
  const IndexPartition part = partition(classes, SelfPairPolicy::Include);
  const SimMatrix sm = build_similarity(awes, agwes, SimKind::MultiviewPN);

  Rng rng(derive_seed(sample_seed, static_cast<uint64_t>(Stream::PairSample)));
  struct Pair {
    int i, k;
  };
  std::vector<Pair> anchors;
  for (std::size_t i = 0; i < part.neg.size(); ++i) {
    if (part.neg[i].empty()) continue;
    const int k = part.neg[i][rng.uniform_index(part.neg[i].size())];
    anchors.push_back({static_cast<int>(i), k});
  }
  if (anchors.empty())
    throw_numeric("mv_triplet_loss: no valid triplet in batch");

  // S(i, j) = cos(f_i, g_j), so the text-anchor direction reads S(k, i).
  LossResult r;
  Mat dS = Mat::Zero(sm.S.rows(), sm.S.cols());
  const double inv = 1.0 / static_cast<double>(anchors.size());
  for (const Pair& a : anchors) {
    const double h_acoustic = margin + sm.S(a.i, a.k) - sm.S(a.i, a.i);
    if (h_acoustic > 0.0) {
      r.value += inv * h_acoustic;
      dS(a.i, a.k) += inv;
      dS(a.i, a.i) -= inv;
    }
    const double h_text = margin + sm.S(a.k, a.i) - sm.S(a.i, a.i);
    if (h_text > 0.0) {
      r.value += inv * h_text;
      dS(a.k, a.i) += inv;
      dS(a.i, a.i) -= inv;
    }
  }
  r.grad_awes = Mat::Zero(awes.rows(), awes.cols());
  r.grad_agwes = Mat::Zero(agwes.rows(), agwes.cols());
  similarity_backward(sm, dS, r.grad_awes, r.grad_agwes);
  r.grad_s_p = std::move(dS);
  return r;
}

FdReport finite_difference_audit(const LossEvaluator& eval, const Mat& awes,
                                 const Mat& agwes,
                                 const std::vector<int>& classes,
                                 double eps) {
  if (!(eps >= 1e-8 && eps <= 1e-4))
    throw_usage("finite_difference_audit: eps out of range");
  const LossResult base = eval(awes, agwes, classes);

  FdReport rep;
  double a_inf = 0.0, f_inf = 0.0;

  auto sweep = [&](const Mat& X, const Mat& analytic, int view) {
    Mat pert = X;
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      for (Eigen::Index rrow = 0; rrow < X.rows(); ++rrow) {
        const double orig = pert(rrow, c);
        pert(rrow, c) = orig + eps;
        const double up = view == 0 ? eval(pert, agwes, classes).value
                                    : eval(awes, pert, classes).value;
        pert(rrow, c) = orig - eps;
        const double dn = view == 0 ? eval(pert, agwes, classes).value
                                    : eval(awes, pert, classes).value;
        pert(rrow, c) = orig;
        const double fd = (up - dn) / (2.0 * eps);
        const double an = analytic.size() > 0 ? analytic(rrow, c) : 0.0;
        const double diff = std::abs(an - fd);
        a_inf = std::max(a_inf, std::abs(an));
        f_inf = std::max(f_inf, std::abs(fd));
        if (diff > rep.max_abs_err) {
          rep.max_abs_err = diff;
          rep.worst_view = view;
          rep.worst_row = static_cast<int>(rrow);
          rep.worst_col = static_cast<int>(c);
        }
      }
    }
  };

  sweep(awes, base.grad_awes, 0);
  if (agwes.size() > 0) sweep(agwes, base.grad_agwes, 1);

  const double scale = std::max(a_inf, f_inf);
  rep.zero_grad = scale <= 1e-9;
  rep.max_rel_err = rep.max_abs_err / std::max(scale, 1e-9);
  return rep;
}

// ---- Method catalog ------------------------------------------------------

const char* pair_fn_name(PairFn f) {
  switch (f) {
    case PairFn::Msp:
      return "msp";
    case PairFn::Else:
      return "else";
    case PairFn::Lse:
      return "lse";
    case PairFn::NegMean:
      return "neg-mean";
  }
  throw_internal("pair_fn_name: unreachable");
}

const char* sim_kind_name(SimKind k) {
  switch (k) {
    case SimKind::Single:
      return "single";
    case SimKind::MultiviewPN:
      return "pn";
    case SimKind::MultiviewA:
      return "a";
  }
  throw_internal("sim_kind_name: unreachable");
}

PairFn pair_fn_from_name(const std::string& s) {
  if (s == "msp") return PairFn::Msp;
  if (s == "else") return PairFn::Else;
  if (s == "lse") return PairFn::Lse;
  if (s == "neg-mean") return PairFn::NegMean;
  throw_usage("unknown pair function name: " + s);
}

SimKind sim_kind_from_name(const std::string& s) {
  if (s == "single") return SimKind::Single;
  if (s == "pn") return SimKind::MultiviewPN;
  if (s == "a") return SimKind::MultiviewA;
  throw_usage("unknown similarity kind name: " + s);
}

namespace {

MethodSpec gpw_method(std::string name, PairFn fp, PairFn fn, SimKind sp,
                      SimKind sn) {
  MethodSpec m;
  m.name = std::move(name);
  m.kind = MethodKind::Gpw;
  m.loss.fp = fp;
  m.loss.fn = fn;
  m.loss.sp_kind = sp;
  m.loss.sn_kind = sn;
  return m;
}

std::string grid_cell_name(PairFn fp, PairFn fn, SimKind sp, SimKind sn) {
  std::string name = "gpw-";
  name += pair_fn_name(fp);
  name += '-';
  name += pair_fn_name(fn);
  name += '-';
  name += sim_kind_name(sp);
  name += '-';
  name += sim_kind_name(sn);
  return name;
}

}  // namespace

MethodSpec method_preset(const std::string& name) {
  MethodSpec m;
  m.name = name;
  if (name == "dtw") {
    m.kind = MethodKind::Dtw;
    return m;
  }
  if (name == "contrastive") {
    m.kind = MethodKind::Contrastive;
    return m;
  }
  if (name == "triplet") {
    m.kind = MethodKind::Triplet;
    return m;
  }
  if (name == "mv-triplet") {
    m.kind = MethodKind::MvTriplet;
    return m;
  }
  const auto sym = [&](PairFn f, SimKind k) {
    return gpw_method(name, f, f, k, k);
  };
  if (name == "proxy-nca-pn")
    return gpw_method(name, PairFn::NegMean, PairFn::Lse,
                      SimKind::MultiviewPN, SimKind::MultiviewPN);
  if (name == "proxy-nca-a")
    return gpw_method(name, PairFn::NegMean, PairFn::Lse, SimKind::MultiviewA,
                      SimKind::MultiviewA);
  if (name == "proxy-bd-pn") return sym(PairFn::Msp, SimKind::MultiviewPN);
  if (name == "proxy-bd-a") return sym(PairFn::Msp, SimKind::MultiviewA);
  if (name == "proxy-ms-pn") return sym(PairFn::Else, SimKind::MultiviewPN);
  if (name == "proxy-ms-a") return sym(PairFn::Else, SimKind::MultiviewA);
  if (name == "asymmetric-proxy")
    return gpw_method(name, PairFn::Else, PairFn::Msp, SimKind::MultiviewA,
                      SimKind::MultiviewPN);
  if (name.rfind("gpw-", 0) == 0) {
    // gpw-<fp>-<fn>-<sp>-<sn>; "neg-mean" is the only hyphenated token, so
    // split greedily on it first.
    std::string rest = name.substr(4);
    auto take = [&](bool fn_token) -> std::string {
      if (fn_token && rest.rfind("neg-mean-", 0) == 0) {
        rest = rest.substr(9);
        return "neg-mean";
      }
      const auto dash = rest.find('-');
      if (dash == std::string::npos) {
        std::string tok = rest;
        rest.clear();
        return tok;
      }
      std::string tok = rest.substr(0, dash);
      rest = rest.substr(dash + 1);
      return tok;
    };
    const PairFn fp = pair_fn_from_name(take(true));
    const PairFn fn = pair_fn_from_name(take(true));
    const SimKind sp = sim_kind_from_name(take(false));
    const SimKind sn = sim_kind_from_name(take(false));
    if (!rest.empty()) throw_usage("malformed grid method name: " + name);
    return gpw_method(name, fp, fn, sp, sn);
  }
  throw_usage("unknown method preset: " + name);
}

std::vector<MethodSpec> gradcheck_methods() {
  std::vector<MethodSpec> out;
  for (const char* name :
       {"contrastive", "triplet", "mv-triplet", "proxy-nca-pn", "proxy-nca-a",
        "proxy-bd-pn", "proxy-bd-a", "proxy-ms-pn", "proxy-ms-a",
        "asymmetric-proxy"})
    out.push_back(method_preset(name));
  for (PairFn fp : {PairFn::Msp, PairFn::Else})
    for (PairFn fn : {PairFn::Msp, PairFn::Else})
      for (SimKind sp : {SimKind::MultiviewPN, SimKind::MultiviewA})
        for (SimKind sn : {SimKind::MultiviewPN, SimKind::MultiviewA})
          out.push_back(
              gpw_method(grid_cell_name(fp, fn, sp, sn), fp, fn, sp, sn));
  return out;
}

std::vector<MethodSpec> table_methods() {
  std::vector<MethodSpec> out;
  for (const char* name :
       {"dtw", "contrastive", "triplet", "mv-triplet", "proxy-nca-pn",
        "proxy-nca-a", "proxy-bd-pn", "proxy-bd-a", "proxy-ms-pn",
        "proxy-ms-a", "asymmetric-proxy"})
    out.push_back(method_preset(name));
  return out;
}

std::vector<MethodSpec> asymmetry_grid_methods() {
  std::vector<MethodSpec> out;
  const SimKind PN = SimKind::MultiviewPN;
  const SimKind A = SimKind::MultiviewA;
  // Function swaps at fixed similarity type.
  for (SimKind k : {PN, A}) {
    out.push_back(gpw_method(grid_cell_name(PairFn::Msp, PairFn::Else, k, k),
                             PairFn::Msp, PairFn::Else, k, k));
    out.push_back(gpw_method(grid_cell_name(PairFn::Else, PairFn::Msp, k, k),
                             PairFn::Else, PairFn::Msp, k, k));
  }
  // Similarity swaps at fixed function.
  for (PairFn f : {PairFn::Msp, PairFn::Else}) {
    out.push_back(gpw_method(grid_cell_name(f, f, PN, A), f, f, PN, A));
    out.push_back(gpw_method(grid_cell_name(f, f, A, PN), f, f, A, PN));
  }
  // Both swapped.
  for (PairFn fp : {PairFn::Msp, PairFn::Else}) {
    const PairFn fn = fp == PairFn::Msp ? PairFn::Else : PairFn::Msp;
    out.push_back(gpw_method(grid_cell_name(fp, fn, PN, A), fp, fn, PN, A));
    out.push_back(gpw_method(grid_cell_name(fp, fn, A, PN), fp, fn, A, PN));
  }
  return out;
}

LossResult evaluate_method(const MethodSpec& method, const Mat& awes,
                           const Mat& agwes, const std::vector<int>& classes,
                           std::uint64_t sample_seed) {
  switch (method.kind) {
    case MethodKind::Gpw:
      return evaluate_gpw(method.loss, awes, agwes, classes);
    case MethodKind::Contrastive:
      return contrastive_loss(awes, classes, method.margin);
    case MethodKind::Triplet:
      return triplet_loss(awes, classes, method.margin, sample_seed);
    case MethodKind::MvTriplet:
      return mv_triplet_loss(awes, agwes, classes, method.margin,
                             sample_seed);
    case MethodKind::Dtw:
      throw_usage("evaluate_method: dtw has no trainable loss");
  }
  throw_internal("evaluate_method: unreachable");
}

}  // namespace awemet
