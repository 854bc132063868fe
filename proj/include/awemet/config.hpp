// SPDX-License-Identifier: Apache-2.0
//
// Structured-text (JSON) configuration for every command. Parsers are
// strict: unknown keys are usage errors, never silently ignored.
#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "awemet/data.hpp"
#include "awemet/losses.hpp"
#include "awemet/trainer.hpp"

namespace awemet {

using ConfigJson = nlohmann::ordered_json;

// Reads and parses a JSON config file. Missing file -> io error,
// malformed JSON -> usage error.
ConfigJson load_config_file(const std::string& path);

// "method": either a preset name string, or an object
//   {"name": ..., "margin": ...} / {"loss": {fp, fn, sp_kind, sn_kind,
//   alpha, beta, lambda}}.
MethodSpec parse_method(const ConfigJson& j);

LossSpec parse_loss_spec(const ConfigJson& j);
DatasetSpec parse_dataset_spec(const ConfigJson& j);
EncoderDims parse_encoder_dims(const ConfigJson& j);
TrainConfig parse_train_config(const ConfigJson& j);

struct GridOptions {
  TrainConfig base;
  std::vector<MethodSpec> methods;  // default: the full comparison table
  int repeats = 3;
};
GridOptions parse_grid_options(const ConfigJson& j);

struct EvalOptions {
  std::uint64_t pair_cap = 0;  // 0 = all pairs
  std::uint64_t seed = 1;
  bool with_dtw = false;
};
EvalOptions parse_eval_options(const ConfigJson& j);

struct GradCheckOptions {
  int embed_batches = 100;
  int param_batches = 3;
  double tol_embed = 1e-5;
  double tol_param = 1e-4;
  std::uint64_t seed = 1;
};
GradCheckOptions parse_gradcheck_options(const ConfigJson& j);

}  // namespace awemet
