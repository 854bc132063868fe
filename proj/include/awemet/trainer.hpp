// SPDX-License-Identifier: Apache-2.0
//
// Adam-based training over class-balanced multi-view batches for any method
// in the catalog, per-epoch dev evaluation with best-checkpoint selection,
// and a grid runner that trains a method list with repeated derived seeds.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "awemet/data.hpp"
#include "awemet/encoder.hpp"
#include "awemet/losses.hpp"

namespace awemet {

struct AdamState {
  Vec m, v;
  long long t = 0;
};

// Bias-corrected Adam; state is created lazily on the first call.
void adam_step(Vec& params, const Vec& grad, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct TrainConfig {
  MethodSpec method = method_preset("asymmetric-proxy");
  EncoderDims dims;
  double lr = 1e-3;
  int epochs = 30;
  int batch_classes = 64;  // M distinct classes per batch
  int batch_items = 1;     // K instances per class; wide batches favor proxy positives
  std::uint64_t seed = 1;
  int eval_every = 1;
  std::uint64_t eval_pair_cap = 0;  // 0 = exact all-pairs AP
  std::string out_dir;              // empty = keep results in memory only
};

struct EpochPoint {
  int epoch = 0;
  double dev_acoustic_ap = 0.0;
  double dev_crossview_ap = 0.0;
};

struct RunRecord {
  std::string method_name;
  std::vector<EpochPoint> curve;  // starts at epoch 0 (untrained encoder)
  int best_epoch = 0;
  double best_dev_acoustic_ap = 0.0;
  double test_acoustic_ap = 0.0;
  double test_crossview_ap = 0.0;
  int steps_per_epoch = 0;
  EncoderParams best_params;
  std::vector<double> epoch_seconds;  // wall clock; never part of records
};

// Deterministic given (config, dataset): batch order, dropout, pair
// sampling, and initialization all come from independent streams derived
// from config.seed.  Keeps the checkpoint with the highest dev acoustic AP
// (ties resolved to the earlier epoch) and evaluates it on test.  When
// out_dir is nonempty, writes curve.csv, run_record.json, checkpoint.bin,
// and timings.csv there.
RunRecord train(const TrainConfig& config, const Dataset& data);

// Embeddings for a list of items under fixed parameters (eval mode).
Mat encode_items(const std::vector<Item>& items, const EncoderParams& params);

// One text embedding per entry of `classes` (eval mode).
Mat encode_classes(const std::vector<int>& classes, const Lexicon& lexicon,
                   const EncoderParams& params);

struct GridCellResult {
  MethodSpec method;
  std::vector<double> acoustic_aps;   // one per successful repeat
  std::vector<double> crossview_aps;  // empty for methods without a text view
  std::vector<std::string> errors;    // one per failed repeat
  double mean_acoustic = 0.0;
  double sd_acoustic = 0.0;
  double mean_crossview = 0.0;
  double sd_crossview = 0.0;
};

struct GridReport {
  int repeats = 0;
  std::vector<GridCellResult> cells;
};

// Trains every method `repeats` times with per-repeat derived seeds (the
// same seed serves all methods in a repeat, so comparisons are paired).
// Individual run failures are recorded and the grid continues.  The dtw
// entry is evaluated directly on the test split, no training.
GridReport grid_run(const TrainConfig& base,
                    const std::vector<MethodSpec>& methods,
                    const Dataset& data, int repeats);

}  // namespace awemet
