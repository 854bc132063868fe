// SPDX-License-Identifier: Apache-2.0
#include "awemet.h"

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>

#include "awemet/config.hpp"
#include "awemet/data.hpp"
#include "awemet/encoder.hpp"
#include "awemet/eval.hpp"
#include "awemet/gradcheck.hpp"
#include "awemet/parallel.hpp"
#include "awemet/records.hpp"
#include "awemet/trainer.hpp"

using namespace awemet;

struct awemet_dataset {
  Dataset data;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
awemet_status guarded(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return AWEMET_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<awemet_status>(static_cast<int>(e.code()));
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AWEMET_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return AWEMET_ERR_INTERNAL;
  }
}

std::string str_or_empty(const char* s) { return s ? std::string(s) : ""; }

ConfigJson load_or_default(const char* config_path) {
  const std::string path = str_or_empty(config_path);
  if (path.empty()) return ConfigJson::object();
  return load_config_file(path);
}

void require(const void* p, const char* what) {
  if (!p) throw_usage(std::string(what) + " must not be null");
}

// Input width and alphabet are dataset properties; adopt them from the
// dataset file unless the config pins them explicitly (train() still
// validates pinned values against the data).
void adapt_dims(EncoderDims& dims, const ConfigJson& j,
                const DatasetSpec& spec) {
  const bool block = j.contains("encoder") && j.at("encoder").is_object();
  if (!block || !j.at("encoder").contains("feat_dim"))
    dims.feat_dim = spec.feat_dim;
  if (!block || !j.at("encoder").contains("alphabet"))
    dims.alphabet = spec.alphabet;
}

std::uint64_t pair_count(std::uint64_t total, std::uint64_t cap) {
  return cap > 0 ? std::min(cap, total) : total;
}

void eval_embedding_split(const char* split_name,
                          const std::vector<Item>& split,
                          const Dataset& data, const EncoderParams& params,
                          const EvalOptions& opt,
                          std::vector<EvalEntry>& entries) {
  if (split.empty()) return;
  if (!has_same_class_pair(split))
    throw_usage(std::string("eval: the ") + split_name +
                " split has no same-word pair, so AP is undefined; "
                "regenerate with more instances_per_word or a larger "
                "split fraction");
  const Mat awes = encode_items(split, params);
  std::vector<int> classes;
  classes.reserve(split.size());
  for (const Item& it : split) classes.push_back(it.class_id);

  const std::uint64_t n = split.size();
  EvalEntry acoustic;
  acoustic.task = "acoustic";
  acoustic.split = split_name;
  acoustic.ap = acoustic_ap(awes, classes, opt.pair_cap, opt.seed);
  acoustic.num_pairs = pair_count(n * (n - 1) / 2, opt.pair_cap);
  acoustic.seed = opt.seed;
  entries.push_back(acoustic);

  std::set<int> unique(classes.begin(), classes.end());
  const std::vector<int> word_ids(unique.begin(), unique.end());
  const Mat agwes = encode_classes(word_ids, data.lexicon, params);
  EvalEntry cross;
  cross.task = "cross-view";
  cross.split = split_name;
  cross.ap = crossview_ap(awes, classes, agwes, word_ids, opt.pair_cap,
                          opt.seed);
  cross.num_pairs = pair_count(n * word_ids.size(), opt.pair_cap);
  cross.seed = opt.seed;
  entries.push_back(cross);
}

}  // namespace

extern "C" {

const char* awemet_version(void) { return "0.1.0"; }

const char* awemet_last_error(void) { return g_last_error.c_str(); }

void awemet_set_workers(int n) { set_num_workers(n); }

awemet_status awemet_dataset_open(const char* path, awemet_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto* handle = new awemet_dataset{load_dataset(path)};
    *out = handle;
  });
}

void awemet_dataset_close(awemet_dataset* ds) { delete ds; }

awemet_status awemet_dataset_counts(const awemet_dataset* ds, uint64_t* train,
                                    uint64_t* dev, uint64_t* test) {
  return guarded([&] {
    require(ds, "dataset");
    if (train) *train = ds->data.train.size();
    if (dev) *dev = ds->data.dev.size();
    if (test) *test = ds->data.test.size();
  });
}

awemet_status awemet_dataset_num_words(const awemet_dataset* ds,
                                       uint64_t* num_words) {
  return guarded([&] {
    require(ds, "dataset");
    require(num_words, "num_words");
    *num_words = ds->data.lexicon.words.size();
  });
}

awemet_status awemet_generate(const char* config_path, const char* out_dir,
                              int has_seed, uint64_t seed) {
  return guarded([&] {
    require(out_dir, "out_dir");
    DatasetSpec spec = parse_dataset_spec(load_or_default(config_path));
    if (has_seed) spec.seed = seed;
    const Dataset data = generate_dataset(spec);
    const std::string dir = str_or_empty(out_dir);
    ensure_dir(dir);
    save_dataset(dir + "/dataset.bin", data);
  });
}

awemet_status awemet_train(const char* config_path, const char* dataset_path,
                           const char* dataset_out, int has_seed,
                           uint64_t seed) {
  return guarded([&] {
    require(dataset_path, "dataset_path");
    const ConfigJson j = load_or_default(config_path);
    TrainConfig cfg = parse_train_config(j);
    if (has_seed) cfg.seed = seed;
    const Dataset data = load_dataset(dataset_path);
    adapt_dims(cfg.dims, j, data.spec);
    cfg.out_dir = str_or_empty(dataset_out);
    train(cfg, data);
  });
}

awemet_status awemet_evaluate(const char* config_path,
                              const char* dataset_path,
                              const char* checkpoint_path, const char* out_dir,
                              int has_seed, uint64_t seed) {
  return guarded([&] {
    require(dataset_path, "dataset_path");
    require(checkpoint_path, "checkpoint_path");
    require(out_dir, "out_dir");
    EvalOptions opt = parse_eval_options(load_or_default(config_path));
    if (has_seed) opt.seed = seed;
    const Dataset data = load_dataset(dataset_path);
    const EncoderParams params = load_checkpoint(checkpoint_path);
    if (params.dims.feat_dim != data.spec.feat_dim)
      throw_usage("checkpoint feature dim " +
                  std::to_string(params.dims.feat_dim) +
                  " does not match dataset feature dim " +
                  std::to_string(data.spec.feat_dim));
    if (params.dims.alphabet < data.spec.alphabet)
      throw_usage("checkpoint alphabet smaller than dataset alphabet");

    std::vector<EvalEntry> entries;
    eval_embedding_split("dev", data.dev, data, params, opt, entries);
    eval_embedding_split("test", data.test, data, params, opt, entries);
    if (opt.with_dtw) {
      const std::uint64_t n = data.test.size();
      EvalEntry dtw;
      dtw.task = "dtw";
      dtw.split = "test";
      dtw.ap = dtw_acoustic_ap(data.test, opt.pair_cap, opt.seed);
      dtw.num_pairs = pair_count(n * (n - 1) / 2, opt.pair_cap);
      dtw.seed = opt.seed;
      entries.push_back(dtw);
    }
    const std::string dir = str_or_empty(out_dir);
    ensure_dir(dir);
    write_eval_report(dir + "/eval_report.json", entries);
    render_report(dir + "/eval_report.json", dir + "/eval_report.txt");
  });
}

awemet_status awemet_grad_check(const char* config_path, const char* out_dir,
                                int has_seed, uint64_t seed) {
  return guarded([&] {
    GradCheckOptions opt = parse_gradcheck_options(load_or_default(config_path));
    if (has_seed) opt.seed = seed;
    const GradCheckReport report = run_gradcheck(opt);
    const std::string dir = str_or_empty(out_dir);
    if (!dir.empty()) write_gradcheck_report(dir, report);
    if (!report.pass) {
      std::string failing;
      for (const GradCheckRow& r : report.rows)
        if (!r.pass) failing += (failing.empty() ? "" : ", ") + r.method;
      throw_numeric("gradient audit failed for: " + failing);
    }
  });
}

awemet_status awemet_grid(const char* config_path, const char* dataset_path,
                          const char* out_dir, int has_seed, uint64_t seed) {
  return guarded([&] {
    require(dataset_path, "dataset_path");
    const ConfigJson j = load_or_default(config_path);
    GridOptions opt = parse_grid_options(j);
    if (has_seed) opt.base.seed = seed;
    const Dataset data = load_dataset(dataset_path);
    adapt_dims(opt.base.dims, j, data.spec);
    opt.base.out_dir = str_or_empty(out_dir);
    grid_run(opt.base, opt.methods, data, opt.repeats);
  });
}

awemet_status awemet_report(const char* record_path, const char* out_path) {
  return guarded([&] {
    require(record_path, "record_path");
    require(out_path, "out_path");
    const auto parent = std::filesystem::path(out_path).parent_path();
    if (!parent.empty()) ensure_dir(parent.string());
    render_report(record_path, out_path);
  });
}

awemet_status awemet_average_precision(const double* scores,
                                       const int32_t* labels, size_t n,
                                       double* out_ap) {
  return guarded([&] {
    require(scores, "scores");
    require(labels, "labels");
    require(out_ap, "out_ap");
    std::vector<double> s(scores, scores + n);
    std::vector<int> l(labels, labels + n);
    *out_ap = average_precision(s, l);
  });
}

awemet_status awemet_dtw_similarity(const double* a, size_t rows,
                                    size_t a_cols, const double* b,
                                    size_t b_cols, double* out_sim) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out_sim, "out_sim");
    if (rows == 0 || a_cols == 0 || b_cols == 0)
      throw_usage("sequences must be non-empty");
    const Eigen::Map<const Mat> ma(a, static_cast<Eigen::Index>(rows),
                                   static_cast<Eigen::Index>(a_cols));
    const Eigen::Map<const Mat> mb(b, static_cast<Eigen::Index>(rows),
                                   static_cast<Eigen::Index>(b_cols));
    *out_sim = dtw_similarity(ma, mb);
  });
}

}  // extern "C"
