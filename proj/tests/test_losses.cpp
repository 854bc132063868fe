// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "awemet/losses.hpp"
#include "awemet/rng.hpp"
#include "oracles.hpp"

using namespace awemet;

namespace {

Mat random_mat(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

std::vector<int> two_per_class(int num_classes) {
  std::vector<int> classes;
  for (int c = 0; c < num_classes; ++c) {
    classes.push_back(c);
    classes.push_back(c);
  }
  return classes;
}

}  // namespace

TEST_CASE("partition: self-pair policy and set contents") {
  const std::vector<int> classes = {0, 0, 1, 1, 2};

  IndexPartition ex = partition(classes, SelfPairPolicy::Exclude);
  CHECK(ex.pos[0] == std::vector<int>{1});
  CHECK(ex.pos[1] == std::vector<int>{0});
  CHECK(ex.pos[4].empty());
  CHECK(ex.neg[0] == std::vector<int>{2, 3, 4});

  IndexPartition in = partition(classes, SelfPairPolicy::Include);
  CHECK(in.pos[0] == std::vector<int>{0, 1});
  CHECK(in.pos[4] == std::vector<int>{4});
  // Negatives never contain the anchor under either policy.
  for (std::size_t i = 0; i < classes.size(); ++i) {
    for (int j : in.neg[i]) CHECK(j != static_cast<int>(i));
    CHECK(in.neg[i] == ex.neg[i]);
  }
}

TEST_CASE("mean-softplus term: worked single-pair values") {
  Mat s(1, 1);
  std::vector<std::vector<int>> sets = {{0}};

  s(0, 0) = 0.5;  // at the margin: softplus(0) = log 2, slope -alpha/2
  PairTerm at = msp_term(s, sets, Polarity::Positive, 2.0, 0.5);
  CHECK(at.value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(at.grad(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));

  s(0, 0) = 0.9;
  PairTerm tight = msp_term(s, sets, Polarity::Positive, 2.0, 0.5);
  CHECK(tight.value == doctest::Approx(0.3711006659477776).epsilon(1e-12));
  CHECK(tight.grad(0, 0) ==
        doctest::Approx(-2.0 / (1.0 + std::exp(0.8))).epsilon(1e-12));

  // Negative polarity mirrors the argument.
  PairTerm neg = msp_term(s, sets, Polarity::Negative, 50.0, 0.5);
  CHECK(neg.value ==
        doctest::Approx(std::log(1.0 + std::exp(50.0 * 0.4))).epsilon(1e-12));
  CHECK(neg.grad(0, 0) > 0.0);
}

TEST_CASE("extended-LSE term: equal pairs share mass, sub-normalized") {
  Mat s(2, 2);
  s.setZero();
  s(0, 0) = s(0, 1) = 0.2;
  std::vector<std::vector<int>> sets = {{0, 1}, {}};
  const double alpha = 2.0, lambda = 0.5;
  PairTerm t = else_term(s, sets, Polarity::Positive, alpha, lambda);

  const double z = alpha * (lambda - 0.2);
  CHECK(t.value ==
        doctest::Approx(std::log(1.0 + 2.0 * std::exp(z)) / alpha)
            .epsilon(1e-14));
  // Identical pairs receive identical (half) shares of the weight, and the
  // uniform scale cancels out of the gradient entirely.
  const double w = std::exp(z) / (1.0 + 2.0 * std::exp(z));
  CHECK(t.grad(0, 0) == doctest::Approx(-w).epsilon(1e-14));
  CHECK(t.grad(0, 1) == doctest::Approx(-w).epsilon(1e-14));
  CHECK(t.grad(1, 0) == 0.0);
  // Empty set contributes nothing.
  CHECK(else_term(s, {{}, {}}, Polarity::Positive, alpha, lambda).value == 0.0);
}

TEST_CASE("margin-free LSE and mean terms: closed forms on singletons") {
  Mat s(1, 1);
  s(0, 0) = 0.3;
  std::vector<std::vector<int>> sets = {{0}};

  PairTerm pull = lse_term(s, sets, Polarity::Positive, 2.0);
  CHECK(pull.value == doctest::Approx(-2.0 * 0.3).epsilon(1e-14));
  CHECK(pull.grad(0, 0) == doctest::Approx(-2.0).epsilon(1e-14));

  PairTerm push = lse_term(s, sets, Polarity::Negative, 1.0);
  CHECK(push.value == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(push.grad(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

  PairTerm mean_pull = neg_mean_term(s, sets, Polarity::Positive, 1.0);
  CHECK(mean_pull.value == doctest::Approx(-0.3).epsilon(1e-14));
  CHECK(mean_pull.grad(0, 0) == doctest::Approx(-1.0).epsilon(1e-14));

  PairTerm mean_push = neg_mean_term(s, sets, Polarity::Negative, 3.0);
  CHECK(mean_push.value == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(mean_push.grad(0, 0) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("symmetric assemblies equal their direct transcriptions") {
  Rng rng(31);
  const int d = 6;
  const std::vector<int> classes = two_per_class(4);
  const int n = static_cast<int>(classes.size());

  for (int rep = 0; rep < 10; ++rep) {
    Mat awes = random_mat(d, n, rng);
    Mat agwes = random_mat(d, n, rng);
    for (SimKind sp :
         {SimKind::Single, SimKind::MultiviewPN, SimKind::MultiviewA})
      for (SimKind sn :
           {SimKind::Single, SimKind::MultiviewPN, SimKind::MultiviewA}) {
        LossSpec spec;
        spec.sp_kind = sp;
        spec.sn_kind = sn;
        spec.alpha = 2.0;
        spec.beta = 50.0;
        spec.lambda = 0.5;

        const Mat s_p = build_similarity(awes, agwes, sp).S;
        const Mat s_n = build_similarity(awes, agwes, sn).S;
        const auto pos = partition(classes, self_policy_for(sp)).pos;
        const auto neg = partition(classes, self_policy_for(sn)).neg;

        spec.fp = spec.fn = PairFn::Msp;
        CHECK(evaluate_gpw(spec, awes, agwes, classes).value ==
              doctest::Approx(oracles::direct_mean_softplus_loss(
                                  s_p, s_n, pos, neg, 2.0, 50.0, 0.5))
                  .epsilon(1e-12));

        spec.fp = spec.fn = PairFn::Else;
        CHECK(evaluate_gpw(spec, awes, agwes, classes).value ==
              doctest::Approx(oracles::direct_extended_lse_loss(
                                  s_p, s_n, pos, neg, 2.0, 50.0, 0.5))
                  .epsilon(1e-12));
      }
  }
}

TEST_CASE("asymmetric-proxy loss: closed form on an orthonormal batch") {
  Mat awes(2, 2), agwes(2, 2);
  awes << 1.0, 0.0, 0.0, 1.0;
  agwes << 1.0, 0.0, 0.0, 1.0;
  const std::vector<int> classes = {0, 1};

  // Text-anchored positives: each anchor sees exactly its own pair at
  // S = 1; acoustic-anchored negatives sit at S = 0.
  const double per_anchor = 0.5 * std::log(1.0 + std::exp(2.0 * (0.5 - 1.0))) +
                            std::log(1.0 + std::exp(50.0 * (0.0 - 0.5)));
  LossResult res = asymmetric_proxy_loss(awes, agwes, classes, 2.0, 50.0, 0.5);
  CHECK(res.value == doctest::Approx(2.0 * per_anchor).epsilon(1e-14));

  // Matches the generic assembler with the default spec.
  LossResult via_spec = evaluate_gpw(LossSpec{}, awes, agwes, classes);
  CHECK(res.value == via_spec.value);
  CHECK((res.grad_awes - via_spec.grad_awes).norm() == 0.0);
}

TEST_CASE("pair-weight sign condition holds for every catalog loss") {
  Rng rng(41);
  const std::vector<int> classes = two_per_class(4);
  const int n = static_cast<int>(classes.size());
  for (const MethodSpec& m : gradcheck_methods()) {
    if (m.kind != MethodKind::Gpw) continue;
    for (int rep = 0; rep < 20; ++rep) {
      Mat awes = random_mat(6, n, rng);
      Mat agwes = random_mat(6, n, rng);
      LossResult res = evaluate_gpw(m.loss, awes, agwes, classes);
      CHECK(res.grad_s_p.maxCoeff() <= 0.0);
      CHECK(res.grad_s_n.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("single-class and all-distinct batches stay finite") {
  Rng rng(43);
  Mat awes = random_mat(5, 3, rng);
  Mat agwes = random_mat(5, 3, rng);

  LossResult same = evaluate_gpw(LossSpec{}, awes, agwes, {2, 2, 2});
  CHECK(std::isfinite(same.value));
  CHECK(same.grad_s_n.cwiseAbs().maxCoeff() == 0.0);  // no negatives exist

  LossResult distinct = evaluate_gpw(LossSpec{}, awes, agwes, {0, 1, 2});
  CHECK(std::isfinite(distinct.value));  // multiview self-pairs still pull
}

TEST_CASE("contrastive: worked example") {
  Mat awes(3, 3);
  awes << 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0;
  // All three embeddings identical; classes {0, 0, 1}.
  LossResult res = contrastive_loss(awes, {0, 0, 1}, 0.5);
  // Anchors 0,1: pull (1-1)=0, push max(0, 1-0.5)=0.5. Anchor 2: no
  // positives, push mean over {0,1} = 0.5. Total 1.5.
  CHECK(res.value == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(res.grad_agwes.size() == 0);  // single view: no text gradient
}

TEST_CASE("triplet: hinge behavior and degenerate batches") {
  Rng rng(47);
  // Perfectly separated: same-class identical, cross-class orthogonal, so
  // margin 0.5 + S_ik - S_ij = 0.5 + 0 - 1 < 0 for every sampled triple.
  Mat awes(4, 4);
  awes.setZero();
  awes(0, 0) = awes(0, 1) = 1.0;
  awes(1, 2) = awes(1, 3) = 1.0;
  LossResult sep = triplet_loss(awes, {0, 0, 1, 1}, 0.5, 123);
  CHECK(sep.value == 0.0);

  // No anchor with both a positive and a negative -> numeric error.
  CHECK_THROWS_AS(triplet_loss(awes, {0, 1, 2, 3}, 0.5, 123), Error);

  // Same seed, same value; loss is never negative.
  Mat r = random_mat(4, 6, rng);
  const std::vector<int> classes = {0, 0, 1, 1, 2, 2};
  CHECK(triplet_loss(r, classes, 0.5, 9).value ==
        triplet_loss(r, classes, 0.5, 9).value);
  CHECK(triplet_loss(r, classes, 0.5, 9).value >= 0.0);
}

TEST_CASE("multi-view triplet: worked two-class example") {
  const double rt = 1.0 / std::sqrt(2.0);
  Mat awes(2, 2), agwes(2, 2);
  awes << 1.0, 0.0, 0.0, 1.0;
  agwes << 1.0, rt, 0.0, rt;
  // With two classes the sampled other-class index is forced, so the value
  // is closed-form regardless of the seed:
  //   anchor 0: acoustic hinge 0.5 + cos(f0,g1) - cos(f0,g0) = rt - 0.5
  //             text hinge     0.5 + cos(g0,f1) - cos(g0,f0) = -0.5 -> 0
  //   anchor 1: acoustic hinge 0.5 + cos(f1,g0) - cos(f1,g1) = 0.5 - rt -> 0
  //             text hinge     0.5 + cos(g1,f0) - cos(g1,f1) = 0.5
  const double expected = ((0.5 + rt - 1.0) + 0.5) / 2.0;
  LossResult res = mv_triplet_loss(awes, agwes, {0, 1}, 0.5, 7);
  CHECK(res.value == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("deterministic losses are permutation equivariant") {
  Rng rng(53);
  const std::vector<int> classes = {0, 0, 1, 1, 2, 2, 3, 3};
  const int n = static_cast<int>(classes.size());
  Mat awes = random_mat(6, n, rng);
  Mat agwes = random_mat(6, n, rng);

  std::vector<int> perm(classes.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  rng.shuffle(perm);
  Mat pawes(6, n), pagwes(6, n);
  std::vector<int> pclasses(classes.size());
  for (int i = 0; i < n; ++i) {
    pawes.col(i) = awes.col(perm[static_cast<std::size_t>(i)]);
    pagwes.col(i) = agwes.col(perm[static_cast<std::size_t>(i)]);
    pclasses[static_cast<std::size_t>(i)] =
        classes[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }

  std::vector<MethodSpec> deterministic;
  for (const MethodSpec& m : gradcheck_methods())
    if (m.kind == MethodKind::Gpw || m.kind == MethodKind::Contrastive)
      deterministic.push_back(m);
  REQUIRE(deterministic.size() > 20);

  for (const MethodSpec& m : deterministic) {
    LossResult base = evaluate_method(m, awes, agwes, classes, 1);
    LossResult permuted = evaluate_method(m, pawes, pagwes, pclasses, 1);
    CHECK(permuted.value == doctest::Approx(base.value).epsilon(1e-12));
    for (int i = 0; i < n; ++i)
      CHECK((permuted.grad_awes.col(i) -
             base.grad_awes.col(perm[static_cast<std::size_t>(i)]))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
  }
}

TEST_CASE("finite-difference audit: validates eps and passes on a preset") {
  Rng rng(59);
  const std::vector<int> classes = two_per_class(3);
  Mat awes = random_mat(5, 6, rng);
  Mat agwes = random_mat(5, 6, rng);
  LossEvaluator eval = assemble_gpw(LossSpec{});

  CHECK_THROWS_AS(finite_difference_audit(eval, awes, agwes, classes, 1e-3),
                  Error);
  CHECK_THROWS_AS(finite_difference_audit(eval, awes, agwes, classes, 1e-9),
                  Error);

  FdReport rep = finite_difference_audit(eval, awes, agwes, classes, 1e-5);
  CHECK_FALSE(rep.zero_grad);
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("finite-difference audit: flags an all-zero gradient") {
  // Separated triplet batch: no hinge fires anywhere near the evaluation
  // point, so both analytic and numeric gradients vanish identically.
  Mat awes(4, 4);
  awes.setZero();
  awes(0, 0) = awes(0, 1) = 1.0;
  awes(1, 2) = awes(1, 3) = 1.0;
  MethodSpec m = method_preset("triplet");
  LossEvaluator eval = [&m](const Mat& a, const Mat& g,
                            const std::vector<int>& cls) {
    return evaluate_method(m, a, g, cls, 123);
  };
  FdReport rep =
      finite_difference_audit(eval, awes, Mat(), {0, 0, 1, 1}, 1e-5);
  CHECK(rep.zero_grad);
  CHECK(rep.max_abs_err < 1e-9);
}

TEST_CASE("method catalog: presets, names, and sizes") {
  MethodSpec nca = method_preset("proxy-nca-pn");
  CHECK(nca.loss.fp == PairFn::NegMean);
  CHECK(nca.loss.fn == PairFn::Lse);
  CHECK(nca.loss.sp_kind == SimKind::MultiviewPN);
  CHECK(nca.loss.sn_kind == SimKind::MultiviewPN);

  MethodSpec bd = method_preset("proxy-bd-a");
  CHECK(bd.loss.fp == PairFn::Msp);
  CHECK(bd.loss.fn == PairFn::Msp);
  CHECK(bd.loss.sp_kind == SimKind::MultiviewA);

  MethodSpec ms = method_preset("proxy-ms-pn");
  CHECK(ms.loss.fp == PairFn::Else);
  CHECK(ms.loss.fn == PairFn::Else);

  MethodSpec asym = method_preset("asymmetric-proxy");
  CHECK(asym.loss.fp == PairFn::Else);
  CHECK(asym.loss.fn == PairFn::Msp);
  CHECK(asym.loss.sp_kind == SimKind::MultiviewA);
  CHECK(asym.loss.sn_kind == SimKind::MultiviewPN);
  CHECK(asym.loss.alpha == 2.0);
  CHECK(asym.loss.beta == 50.0);
  CHECK(asym.loss.lambda == 0.5);

  MethodSpec cell = method_preset("gpw-neg-mean-lse-pn-a");
  CHECK(cell.loss.fp == PairFn::NegMean);
  CHECK(cell.loss.fn == PairFn::Lse);
  CHECK(cell.loss.sp_kind == SimKind::MultiviewPN);
  CHECK(cell.loss.sn_kind == SimKind::MultiviewA);

  CHECK_THROWS_AS(method_preset("proxy-zz"), Error);
  CHECK_THROWS_AS(method_preset("gpw-msp-msp-pn"), Error);

  const auto audit = gradcheck_methods();
  CHECK(audit.size() == 26);
  const auto table = table_methods();
  CHECK(table.size() == 11);
  CHECK(table.front().kind == MethodKind::Dtw);
  const auto grid = asymmetry_grid_methods();
  CHECK(grid.size() == 12);

  std::set<std::string> names;
  for (const auto& m : audit) names.insert(m.name);
  CHECK(names.size() == audit.size());

  CHECK_THROWS_AS(
      evaluate_method(method_preset("dtw"), Mat(), Mat(), {0}, 1), Error);
}
