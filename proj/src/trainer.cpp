// SPDX-License-Identifier: Apache-2.0
#include "awemet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

#include "awemet/eval.hpp"
#include "awemet/parallel.hpp"
#include "awemet/records.hpp"

namespace awemet {

void adam_step(Vec& params, const Vec& grad, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
  if (grad.size() != params.size())
    throw_usage("adam_step: gradient/parameter shape mismatch");
  if (state.t == 0) {
    state.m = Vec::Zero(params.size());
    state.v = Vec::Zero(params.size());
  }
  if (state.m.size() != params.size())
    throw_usage("adam_step: state/parameter shape mismatch");
  state.t += 1;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double mc = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double vc = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  params -= lr * (state.m / mc).cwiseQuotient(
                     ((state.v / vc).cwiseSqrt().array() + eps).matrix());
}

Mat encode_items(const std::vector<Item>& items, const EncoderParams& params) {
  Mat emb(params.dims.embed_dim, static_cast<Eigen::Index>(items.size()));
  parallel_for(items.size(), [&](std::size_t i) {
    emb.col(static_cast<Eigen::Index>(i)) = acoustic_forward(
        items[i].frames, params, Mode::Eval, nullptr, nullptr);
  });
  return emb;
}

Mat encode_classes(const std::vector<int>& classes, const Lexicon& lexicon,
                   const EncoderParams& params) {
  Mat emb(params.dims.embed_dim, static_cast<Eigen::Index>(classes.size()));
  parallel_for(classes.size(), [&](std::size_t i) {
    const int cls = classes[i];
    if (cls < 0 || cls >= static_cast<int>(lexicon.words.size()))
      throw_usage("encode_classes: class id outside the lexicon");
    emb.col(static_cast<Eigen::Index>(i)) =
        text_forward(chars_of(lexicon.words[static_cast<std::size_t>(cls)]),
                     params, Mode::Eval, nullptr);
  });
  return emb;
}

namespace {

std::vector<int> class_ids(const std::vector<Item>& items) {
  std::vector<int> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) out[i] = items[i].class_id;
  return out;
}

std::vector<int> distinct_sorted(const std::vector<int>& v) {
  std::set<int> s(v.begin(), v.end());
  return std::vector<int>(s.begin(), s.end());
}

struct SplitEval {
  std::vector<int> classes;
  std::vector<int> present;  // distinct classes, ascending
};

// Dev/test evaluation of a parameter snapshot: acoustic AP over item pairs
// and cross-view AP against one text embedding per present class.
void eval_split(const std::vector<Item>& items, const SplitEval& se,
                const Lexicon& lexicon, const EncoderParams& params,
                std::uint64_t pair_cap, std::uint64_t seed, bool with_text,
                double* acoustic, double* crossview) {
  const Mat awes = encode_items(items, params);
  *acoustic = acoustic_ap(awes, se.classes, pair_cap, seed);
  if (with_text) {
    const Mat agwes = encode_classes(se.present, lexicon, params);
    *crossview =
        crossview_ap(awes, se.classes, agwes, se.present, pair_cap, seed);
  } else {
    *crossview = 0.0;
  }
}

bool method_uses_text(const MethodSpec& m) {
  switch (m.kind) {
    case MethodKind::Gpw:
      return m.loss.sp_kind != SimKind::Single ||
             m.loss.sn_kind != SimKind::Single;
    case MethodKind::MvTriplet:
      return true;
    default:
      return false;
  }
}

}  // namespace

RunRecord train(const TrainConfig& config, const Dataset& data) {
  if (config.epochs < 1) throw_usage("train: epochs must be >= 1");
  if (!(config.lr > 0.0)) throw_usage("train: learning rate must be positive");
  if (config.eval_every < 1) throw_usage("train: eval_every must be >= 1");
  if (config.method.kind == MethodKind::Dtw)
    throw_usage("train: dtw is an evaluation baseline, not trainable");
  if (config.dims.feat_dim != data.spec.feat_dim)
    throw_usage("train: encoder feat_dim does not match the dataset");
  if (config.dims.alphabet < data.spec.alphabet)
    throw_usage("train: encoder alphabet smaller than the dataset's");
  const int N = config.batch_classes * config.batch_items;
  const int steps =
      static_cast<int>(data.train.size()) / std::max(N, 1);
  if (steps < 1) throw_usage("train: batch larger than the training split");
  if (data.dev.empty() || data.test.empty())
    throw_usage("train: dataset needs dev and test splits");
  const std::pair<const std::vector<Item>*, const char*> scored[] = {
      {&data.dev, "dev"}, {&data.test, "test"}};
  for (const auto& [split, name] : scored)
    if (!has_same_class_pair(*split))
      throw_usage(std::string("train: the ") + name +
                  " split has no same-word pair, so AP is undefined; "
                  "regenerate with more instances_per_word or a larger "
                  "split fraction");

  const bool with_text = method_uses_text(config.method);

  EncoderParams params = init_params(config.dims, config.seed);
  AdamState adam;
  const Eigen::Index P = params.flat.size();

  SplitEval dev{class_ids(data.dev), {}};
  dev.present = distinct_sorted(dev.classes);
  SplitEval test{class_ids(data.test), {}};
  test.present = distinct_sorted(test.classes);

  RunRecord rec;
  rec.method_name = config.method.name;
  rec.steps_per_epoch = steps;

  auto record_epoch = [&](int epoch) {
    EpochPoint pt;
    pt.epoch = epoch;
    eval_split(data.dev, dev, data.lexicon, params, config.eval_pair_cap,
               config.seed, with_text, &pt.dev_acoustic_ap,
               &pt.dev_crossview_ap);
    rec.curve.push_back(pt);
    if (rec.curve.size() == 1 ||
        pt.dev_acoustic_ap > rec.best_dev_acoustic_ap) {
      rec.best_dev_acoustic_ap = pt.dev_acoustic_ap;
      rec.best_epoch = epoch;
      rec.best_params = params;
    }
  };
  record_epoch(0);

  constexpr std::size_t kGradChunks = 8;
  std::vector<Vec> chunk_grads(kGradChunks, Vec::Zero(P));
  std::vector<AcousticCache> ac(static_cast<std::size_t>(N));
  std::vector<TextCache> tc(static_cast<std::size_t>(N));
  Mat F(config.dims.embed_dim, N), G(config.dims.embed_dim, N);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    Rng order_rng(derive_seed(config.seed, Stream::BatchOrder,
                              static_cast<std::uint64_t>(epoch)));
    for (int step = 0; step < steps; ++step) {
      const std::vector<int> batch = sample_batch(
          data.train, config.batch_classes, config.batch_items, order_rng);
      std::vector<int> classes(batch.size());

      parallel_for(batch.size(), [&](std::size_t i) {
        const Item& it = data.train[static_cast<std::size_t>(batch[i])];
        classes[i] = it.class_id;
        Rng drop_rng(derive_seed(config.seed, Stream::Dropout,
                                 static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(step),
                                 static_cast<std::uint64_t>(i)));
        const Eigen::Index col = static_cast<Eigen::Index>(i);
        F.col(col) =
            acoustic_forward(it.frames, params, Mode::Train, &drop_rng,
                             &ac[i]);
        if (with_text)
          G.col(col) = text_forward(it.chars, params, Mode::Train, &tc[i]);
      });

      const std::uint64_t pair_seed =
          derive_seed(config.seed, Stream::PairSample,
                      static_cast<std::uint64_t>(epoch),
                      static_cast<std::uint64_t>(step));
      const LossResult loss =
          evaluate_method(config.method, F, with_text ? G : Mat(), classes,
                          pair_seed);
      if (!std::isfinite(loss.value)) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "train: non-finite loss at epoch %d step %d "
                      "(param inf-norm %.3e)",
                      epoch, step, params.flat.lpNorm<Eigen::Infinity>());
        if (!config.out_dir.empty())
          write_divergence_dump(config.out_dir, epoch, step, loss.value,
                                params);
        throw_numeric(buf);
      }

      for (auto& g : chunk_grads) g.setZero();
      parallel_chunks(batch.size(), kGradChunks,
                      [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
                        Vec& g = chunk_grads[chunk];
                        for (std::size_t i = lo; i < hi; ++i) {
                          acoustic_backward(
                              ac[i], params,
                              loss.grad_awes.col(static_cast<Eigen::Index>(i)),
                              g);
                          if (with_text && loss.grad_agwes.size() > 0)
                            text_backward(
                                tc[i], params,
                                loss.grad_agwes.col(
                                    static_cast<Eigen::Index>(i)),
                                g);
                        }
                      });
      Vec grad = Vec::Zero(P);
      for (const auto& g : chunk_grads) grad += g;

      adam_step(params.flat, grad, adam, config.lr);
      if (!params.flat.allFinite()) {
        if (!config.out_dir.empty())
          write_divergence_dump(config.out_dir, epoch, step, loss.value,
                                params);
        throw_numeric("train: parameters diverged to non-finite values");
      }
    }

    if (epoch % config.eval_every == 0 || epoch == config.epochs)
      record_epoch(epoch);
    rec.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
            .count());
  }

  eval_split(data.test, test, data.lexicon, rec.best_params,
             config.eval_pair_cap, config.seed, with_text,
             &rec.test_acoustic_ap, &rec.test_crossview_ap);

  if (!config.out_dir.empty()) {
    write_run_record(config.out_dir, config, rec);
    save_checkpoint(config.out_dir + "/checkpoint.bin", rec.best_params);
  }
  return rec;
}

namespace {

void finish_stats(GridCellResult& cell) {
  auto stats = [](const std::vector<double>& xs, double* mean, double* sd) {
    if (xs.empty()) {
      *mean = 0.0;
      *sd = 0.0;
      return;
    }
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    *mean = m;
    *sd = xs.size() > 1
              ? std::sqrt(s / static_cast<double>(xs.size() - 1))
              : 0.0;
  };
  stats(cell.acoustic_aps, &cell.mean_acoustic, &cell.sd_acoustic);
  stats(cell.crossview_aps, &cell.mean_crossview, &cell.sd_crossview);
}

}  // namespace

GridReport grid_run(const TrainConfig& base,
                    const std::vector<MethodSpec>& methods,
                    const Dataset& data, int repeats) {
  if (repeats < 1) throw_usage("grid_run: repeats must be >= 1");
  GridReport report;
  report.repeats = repeats;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    GridCellResult cell;
    cell.method = methods[mi];
    if (methods[mi].kind == MethodKind::Dtw) {
      // Deterministic given the dataset; one evaluation covers all repeats.
      try {
        cell.acoustic_aps.push_back(
            dtw_acoustic_ap(data.test, base.eval_pair_cap, base.seed));
      } catch (const Error& e) {
        cell.errors.push_back(e.what());
      }
    } else {
      for (int r = 0; r < repeats; ++r) {
        TrainConfig cfg = base;
        cfg.method = methods[mi];
        cfg.seed = derive_seed(base.seed, Stream::Grid,
                               static_cast<std::uint64_t>(r));
        if (!base.out_dir.empty()) {
          char sub[64];
          std::snprintf(sub, sizeof(sub), "/%s-r%d",
                        methods[mi].name.c_str(), r);
          cfg.out_dir = base.out_dir + sub;
        }
        try {
          const RunRecord rec = train(cfg, data);
          cell.acoustic_aps.push_back(rec.test_acoustic_ap);
          if (method_uses_text(methods[mi]))
            cell.crossview_aps.push_back(rec.test_crossview_ap);
        } catch (const Error& e) {
          cell.errors.push_back(e.what());
        }
      }
    }
    finish_stats(cell);
    report.cells.push_back(std::move(cell));
  }
  if (!base.out_dir.empty()) write_grid_report(base.out_dir, report);
  return report;
}

}  // namespace awemet
