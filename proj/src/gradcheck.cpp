// SPDX-License-Identifier: Apache-2.0
#include "awemet/gradcheck.hpp"

#include <algorithm>
#include <limits>

#include "awemet/encoder.hpp"
#include "awemet/parallel.hpp"
#include "awemet/rng.hpp"

namespace awemet {

namespace {

constexpr int kAuditClasses = 4;
constexpr int kAuditPerClass = 2;  // N = 8
constexpr int kAuditDim = 6;
constexpr double kEps = 1e-5;

std::vector<int> audit_classes() {
  std::vector<int> classes;
  for (int c = 0; c < kAuditClasses; ++c)
    for (int k = 0; k < kAuditPerClass; ++k) classes.push_back(c);
  return classes;
}

double fd_error(const FdReport& rep) {
  if (!rep.zero_grad) return rep.max_rel_err;
  // Degenerate batch (e.g. no active hinge): both sides must agree on zero.
  return rep.max_abs_err < 1e-9 ? 0.0
                                : std::numeric_limits<double>::infinity();
}

double embed_audit(const MethodSpec& m, const GradCheckOptions& opt) {
  const std::vector<int> classes = audit_classes();
  const int n = static_cast<int>(classes.size());
  double worst = 0.0;
  for (int b = 0; b < opt.embed_batches; ++b) {
    Rng rng(derive_seed(opt.seed, Stream::Audit, 0, static_cast<std::uint64_t>(b)));
    Mat awes(kAuditDim, n);
    Mat agwes(kAuditDim, n);
    for (int j = 0; j < awes.cols(); ++j)
      for (int i = 0; i < awes.rows(); ++i) awes(i, j) = rng.normal();
    for (int j = 0; j < agwes.cols(); ++j)
      for (int i = 0; i < agwes.rows(); ++i) agwes(i, j) = rng.normal();
    const std::uint64_t sample_seed =
        derive_seed(opt.seed, Stream::Audit, 1, static_cast<std::uint64_t>(b));
    LossEvaluator eval = [&m, sample_seed](const Mat& a, const Mat& g,
                                           const std::vector<int>& cls) {
      return evaluate_method(m, a, g, cls, sample_seed);
    };
    worst = std::max(worst,
                     fd_error(finite_difference_audit(eval, awes, agwes,
                                                      classes, kEps)));
  }
  return worst;
}

struct ParamBatch {
  std::vector<Mat> frames;             // one feat_dim x T block per item
  std::vector<std::vector<int>> words; // char ids per class
  std::vector<int> classes;
  std::uint64_t dropout_seed = 0;
  std::uint64_t sample_seed = 0;
};

ParamBatch make_param_batch(const EncoderDims& dims,
                            const GradCheckOptions& opt, int b) {
  ParamBatch batch;
  batch.classes = audit_classes();
  Rng rng(derive_seed(opt.seed, Stream::Audit, 2, static_cast<std::uint64_t>(b)));
  for (int c = 0; c < kAuditClasses; ++c) {
    const int len = rng.uniform_int(2, 5);
    std::vector<int> chars(static_cast<std::size_t>(len));
    for (int& ch : chars) ch = rng.uniform_int(0, dims.alphabet - 1);
    batch.words.push_back(std::move(chars));
  }
  for (std::size_t i = 0; i < batch.classes.size(); ++i) {
    const int t = rng.uniform_int(2, 6);
    Mat f(dims.feat_dim, t);
    for (int col = 0; col < t; ++col)
      for (int row = 0; row < dims.feat_dim; ++row) f(row, col) = rng.normal();
    batch.frames.push_back(std::move(f));
  }
  batch.dropout_seed =
      derive_seed(opt.seed, Stream::Audit, 3, static_cast<std::uint64_t>(b));
  batch.sample_seed =
      derive_seed(opt.seed, Stream::Audit, 4, static_cast<std::uint64_t>(b));
  return batch;
}

// Full-pipeline loss as a function of the flat parameter vector, with
// dropout masks pinned by per-item derived seeds so the map is smooth.
double pipeline_value(const MethodSpec& m, const EncoderDims& dims,
                      const Vec& flat, const ParamBatch& batch) {
  EncoderParams p;
  p.dims = dims;
  p.flat = flat;
  const int n = static_cast<int>(batch.classes.size());
  Mat awes(dims.embed_dim, n);
  for (int i = 0; i < n; ++i) {
    Rng drop(derive_seed(batch.dropout_seed, Stream::Dropout,
                         static_cast<std::uint64_t>(i)));
    awes.col(i) = acoustic_forward(batch.frames[static_cast<std::size_t>(i)],
                                   p, Mode::Train, &drop, nullptr);
  }
  // One text column per item; items of a class share the same word.
  Mat agwes(dims.embed_dim, n);
  for (int i = 0; i < n; ++i)
    agwes.col(i) = text_forward(
        batch.words[static_cast<std::size_t>(batch.classes[static_cast<std::size_t>(i)])],
        p, Mode::Train, nullptr);
  return evaluate_method(m, awes, agwes, batch.classes, batch.sample_seed)
      .value;
}

double param_audit(const MethodSpec& m, const GradCheckOptions& opt) {
  EncoderDims dims;
  dims.feat_dim = 5;
  dims.char_dim = 4;
  dims.alphabet = 6;
  dims.hidden = 5;
  dims.embed_dim = kAuditDim;
  dims.dropout = 0.4;

  double worst = 0.0;
  for (int b = 0; b < opt.param_batches; ++b) {
    const ParamBatch batch = make_param_batch(dims, opt, b);
    const int n = static_cast<int>(batch.classes.size());
    EncoderParams p = init_params(
        dims, derive_seed(opt.seed, Stream::Audit, 5,
                          static_cast<std::uint64_t>(b)));

    // Analytic gradient via cached forwards + manual backward, mirroring
    // the training step: one acoustic and one text column per item.
    std::vector<AcousticCache> acaches(static_cast<std::size_t>(n));
    std::vector<TextCache> tcaches(static_cast<std::size_t>(n));
    Mat awes(dims.embed_dim, n);
    Mat agwes(dims.embed_dim, n);
    for (int i = 0; i < n; ++i) {
      Rng drop(derive_seed(batch.dropout_seed, Stream::Dropout,
                           static_cast<std::uint64_t>(i)));
      awes.col(i) =
          acoustic_forward(batch.frames[static_cast<std::size_t>(i)], p,
                           Mode::Train, &drop,
                           &acaches[static_cast<std::size_t>(i)]);
      agwes.col(i) = text_forward(
          batch.words[static_cast<std::size_t>(
              batch.classes[static_cast<std::size_t>(i)])],
          p, Mode::Train, &tcaches[static_cast<std::size_t>(i)]);
    }
    const LossResult res =
        evaluate_method(m, awes, agwes, batch.classes, batch.sample_seed);
    Vec analytic = Vec::Zero(p.flat.size());
    for (int i = 0; i < n; ++i) {
      acoustic_backward(acaches[static_cast<std::size_t>(i)], p,
                        res.grad_awes.col(i), analytic);
      if (res.grad_agwes.size() > 0)
        text_backward(tcaches[static_cast<std::size_t>(i)], p,
                      res.grad_agwes.col(i), analytic);
    }

    Vec fd(p.flat.size());
    Vec flat = p.flat;
    for (Eigen::Index k = 0; k < flat.size(); ++k) {
      const double keep = flat(k);
      flat(k) = keep + kEps;
      const double up = pipeline_value(m, dims, flat, batch);
      flat(k) = keep - kEps;
      const double down = pipeline_value(m, dims, flat, batch);
      flat(k) = keep;
      fd(k) = (up - down) / (2.0 * kEps);
    }
    const double scale =
        std::max({analytic.lpNorm<Eigen::Infinity>(),
                  fd.lpNorm<Eigen::Infinity>(), 1e-9});
    const double abs_err = (analytic - fd).lpNorm<Eigen::Infinity>();
    if (scale <= 1e-9)
      worst = std::max(worst, abs_err < 1e-9
                                  ? 0.0
                                  : std::numeric_limits<double>::infinity());
    else
      worst = std::max(worst, abs_err / scale);
  }
  return worst;
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckOptions& opt) {
  GradCheckReport report;
  report.tol_embed = opt.tol_embed;
  report.tol_param = opt.tol_param;
  report.embed_batches = opt.embed_batches;
  report.param_batches = opt.param_batches;
  report.seed = opt.seed;

  const std::vector<MethodSpec> methods = gradcheck_methods();
  report.rows.resize(methods.size());
  parallel_for(methods.size(), [&](std::size_t i) {
    GradCheckRow row;
    row.method = methods[i].name;
    row.max_embed_err = embed_audit(methods[i], opt);
    row.max_param_err = param_audit(methods[i], opt);
    row.pass = row.max_embed_err < opt.tol_embed &&
               row.max_param_err < opt.tol_param;
    report.rows[i] = std::move(row);
  });
  report.pass = true;
  for (const GradCheckRow& r : report.rows) report.pass = report.pass && r.pass;
  return report;
}

}  // namespace awemet
