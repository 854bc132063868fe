// SPDX-License-Identifier: Apache-2.0
#include "awemet/config.hpp"

#include <fstream>
#include <initializer_list>

namespace awemet {

namespace {

void check_keys(const ConfigJson& j, const char* where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw_usage(std::string(where) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw_usage(std::string("unknown key \"") + it.key() + "\" in " + where);
  }
}

double get_double(const ConfigJson& j, const char* key, double dflt) {
  if (!j.contains(key)) return dflt;
  const auto& v = j.at(key);
  if (!v.is_number()) throw_usage(std::string(key) + " must be a number");
  return v.get<double>();
}

int get_int(const ConfigJson& j, const char* key, int dflt) {
  if (!j.contains(key)) return dflt;
  const auto& v = j.at(key);
  if (!v.is_number_integer())
    throw_usage(std::string(key) + " must be an integer");
  return v.get<int>();
}

std::uint64_t get_seed(const ConfigJson& j, const char* key,
                       std::uint64_t dflt) {
  if (!j.contains(key)) return dflt;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw_usage(std::string(key) + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const ConfigJson& j, const char* key, bool dflt) {
  if (!j.contains(key)) return dflt;
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw_usage(std::string(key) + " must be a boolean");
  return v.get<bool>();
}

std::string get_string(const ConfigJson& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw_usage(std::string(key) + " must be a string");
  return v.get<std::string>();
}

std::string canonical_gpw_name(const LossSpec& s) {
  return std::string("gpw-") + pair_fn_name(s.fp) + "-" + pair_fn_name(s.fn) +
         "-" + sim_kind_name(s.sp_kind) + "-" + sim_kind_name(s.sn_kind);
}

void apply_scalar_overrides(const ConfigJson& j, MethodSpec& m) {
  if (j.contains("margin")) {
    if (m.kind == MethodKind::Gpw || m.kind == MethodKind::Dtw)
      throw_usage("margin only applies to contrastive/triplet methods");
    m.margin = get_double(j, "margin", m.margin);
  }
  const bool scalars =
      j.contains("alpha") || j.contains("beta") || j.contains("lambda");
  if (scalars) {
    if (m.kind != MethodKind::Gpw)
      throw_usage("alpha/beta/lambda only apply to proxy methods");
    m.loss.alpha = get_double(j, "alpha", m.loss.alpha);
    m.loss.beta = get_double(j, "beta", m.loss.beta);
    m.loss.lambda = get_double(j, "lambda", m.loss.lambda);
  }
}

}  // namespace

ConfigJson load_config_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_io("cannot open config: " + path);
  try {
    ConfigJson j;
    is >> j;
    return j;
  } catch (const nlohmann::ordered_json::exception& e) {
    throw_usage("malformed config " + path + ": " + e.what());
  }
}

LossSpec parse_loss_spec(const ConfigJson& j) {
  check_keys(j, "loss",
             {"fp", "fn", "sp_kind", "sn_kind", "alpha", "beta", "lambda"});
  LossSpec s;
  if (j.contains("fp")) s.fp = pair_fn_from_name(get_string(j, "fp"));
  if (j.contains("fn")) s.fn = pair_fn_from_name(get_string(j, "fn"));
  if (j.contains("sp_kind"))
    s.sp_kind = sim_kind_from_name(get_string(j, "sp_kind"));
  if (j.contains("sn_kind"))
    s.sn_kind = sim_kind_from_name(get_string(j, "sn_kind"));
  s.alpha = get_double(j, "alpha", s.alpha);
  s.beta = get_double(j, "beta", s.beta);
  s.lambda = get_double(j, "lambda", s.lambda);
  if (s.alpha <= 0 || s.beta <= 0)
    throw_usage("alpha and beta must be positive");
  return s;
}

MethodSpec parse_method(const ConfigJson& j) {
  if (j.is_string()) return method_preset(j.get<std::string>());
  check_keys(j, "method",
             {"name", "loss", "margin", "alpha", "beta", "lambda"});
  MethodSpec m;
  if (j.contains("loss")) {
    if (j.contains("alpha") || j.contains("beta") || j.contains("lambda"))
      throw_usage("put alpha/beta/lambda inside the loss object");
    m.kind = MethodKind::Gpw;
    m.loss = parse_loss_spec(j.at("loss"));
    m.name = j.contains("name") ? get_string(j, "name")
                                : canonical_gpw_name(m.loss);
    apply_scalar_overrides(j, m);
    return m;
  }
  if (!j.contains("name"))
    throw_usage("method object needs \"name\" or \"loss\"");
  m = method_preset(get_string(j, "name"));
  apply_scalar_overrides(j, m);
  return m;
}

DatasetSpec parse_dataset_spec(const ConfigJson& j) {
  check_keys(j, "dataset spec",
             {"num_words", "instances_per_word", "alphabet", "min_word_len",
              "max_word_len", "feat_dim", "base_duration", "duration_jitter",
              "noise_sigma", "speaker_sigma", "train_frac", "dev_frac",
              "unseen_eval_words", "seed"});
  DatasetSpec s;
  s.num_words = get_int(j, "num_words", s.num_words);
  s.instances_per_word = get_int(j, "instances_per_word", s.instances_per_word);
  s.alphabet = get_int(j, "alphabet", s.alphabet);
  s.min_word_len = get_int(j, "min_word_len", s.min_word_len);
  s.max_word_len = get_int(j, "max_word_len", s.max_word_len);
  s.feat_dim = get_int(j, "feat_dim", s.feat_dim);
  s.base_duration = get_int(j, "base_duration", s.base_duration);
  s.duration_jitter = get_int(j, "duration_jitter", s.duration_jitter);
  s.noise_sigma = get_double(j, "noise_sigma", s.noise_sigma);
  s.speaker_sigma = get_double(j, "speaker_sigma", s.speaker_sigma);
  s.train_frac = get_double(j, "train_frac", s.train_frac);
  s.dev_frac = get_double(j, "dev_frac", s.dev_frac);
  s.unseen_eval_words = get_int(j, "unseen_eval_words", s.unseen_eval_words);
  s.seed = get_seed(j, "seed", s.seed);
  return s;
}

EncoderDims parse_encoder_dims(const ConfigJson& j) {
  check_keys(j, "encoder",
             {"feat_dim", "char_dim", "alphabet", "hidden", "embed_dim",
              "dropout"});
  EncoderDims d;
  d.feat_dim = get_int(j, "feat_dim", d.feat_dim);
  d.char_dim = get_int(j, "char_dim", d.char_dim);
  d.alphabet = get_int(j, "alphabet", d.alphabet);
  d.hidden = get_int(j, "hidden", d.hidden);
  d.embed_dim = get_int(j, "embed_dim", d.embed_dim);
  d.dropout = get_double(j, "dropout", d.dropout);
  return d;
}

namespace {

// Shared between train and grid configs; `extra` lists the additional
// keys the caller accepts.
TrainConfig parse_train_common(const ConfigJson& j, bool allow_method,
                               std::initializer_list<const char*> extra) {
  std::vector<const char*> allowed = {"lr",          "epochs",
                                      "batch_classes", "batch_items",
                                      "seed",        "eval_every",
                                      "eval_pair_cap", "encoder"};
  if (allow_method) allowed.push_back("method");
  for (const char* k : extra) allowed.push_back(k);
  if (!j.is_object()) throw_usage("config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw_usage("unknown key \"" + it.key() + "\" in config");
  }
  TrainConfig c;
  if (allow_method && j.contains("method"))
    c.method = parse_method(j.at("method"));
  c.lr = get_double(j, "lr", c.lr);
  c.epochs = get_int(j, "epochs", c.epochs);
  c.batch_classes = get_int(j, "batch_classes", c.batch_classes);
  c.batch_items = get_int(j, "batch_items", c.batch_items);
  c.seed = get_seed(j, "seed", c.seed);
  c.eval_every = get_int(j, "eval_every", c.eval_every);
  c.eval_pair_cap = get_seed(j, "eval_pair_cap", c.eval_pair_cap);
  if (j.contains("encoder")) c.dims = parse_encoder_dims(j.at("encoder"));
  return c;
}

}  // namespace

TrainConfig parse_train_config(const ConfigJson& j) {
  return parse_train_common(j, /*allow_method=*/true, {});
}

GridOptions parse_grid_options(const ConfigJson& j) {
  GridOptions g;
  g.base = parse_train_common(j, /*allow_method=*/false,
                              {"methods", "repeats"});
  g.repeats = get_int(j, "repeats", g.repeats);
  if (g.repeats < 1) throw_usage("repeats must be >= 1");
  if (j.contains("methods")) {
    const auto& arr = j.at("methods");
    if (!arr.is_array() || arr.empty())
      throw_usage("methods must be a non-empty array");
    for (const auto& mj : arr) g.methods.push_back(parse_method(mj));
  } else {
    g.methods = table_methods();
  }
  return g;
}

EvalOptions parse_eval_options(const ConfigJson& j) {
  check_keys(j, "eval config", {"pair_cap", "seed", "with_dtw"});
  EvalOptions o;
  o.pair_cap = get_seed(j, "pair_cap", o.pair_cap);
  o.seed = get_seed(j, "seed", o.seed);
  o.with_dtw = get_bool(j, "with_dtw", o.with_dtw);
  return o;
}

GradCheckOptions parse_gradcheck_options(const ConfigJson& j) {
  check_keys(j, "grad-check config",
             {"embed_batches", "param_batches", "tol_embed", "tol_param",
              "seed"});
  GradCheckOptions o;
  o.embed_batches = get_int(j, "embed_batches", o.embed_batches);
  o.param_batches = get_int(j, "param_batches", o.param_batches);
  o.tol_embed = get_double(j, "tol_embed", o.tol_embed);
  o.tol_param = get_double(j, "tol_param", o.tol_param);
  o.seed = get_seed(j, "seed", o.seed);
  if (o.embed_batches < 1 || o.param_batches < 1)
    throw_usage("batch counts must be >= 1");
  if (o.tol_embed <= 0 || o.tol_param <= 0)
    throw_usage("tolerances must be positive");
  return o;
}

}  // namespace awemet
