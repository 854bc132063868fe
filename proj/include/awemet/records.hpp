// SPDX-License-Identifier: Apache-2.0
//
// Structured record emission: run records, convergence-curve CSVs, grid
// tables, evaluation reports, and re-rendering of stored records.  Every
// writer is byte-deterministic for identical inputs; wall-clock timings go
// to a separate file that reproducibility comparisons must skip.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "awemet/encoder.hpp"
#include "awemet/trainer.hpp"

namespace awemet {

void ensure_dir(const std::string& dir);

// run_record.json + curve.csv into dir, plus timings.csv (wall clock).
void write_run_record(const std::string& dir, const TrainConfig& config,
                      const RunRecord& rec);

// grid_report.json + grid_table.txt + grid_table.csv into dir.
void write_grid_report(const std::string& dir, const GridReport& report);

struct EvalEntry {
  std::string task;   // "acoustic", "cross-view", "dtw"
  std::string split;  // "dev" or "test"
  double ap = 0.0;
  std::uint64_t num_pairs = 0;
  std::uint64_t seed = 0;
};

void write_eval_report(const std::string& path,
                       const std::vector<EvalEntry>& entries);

// Diagnostic state dump for the divergence guard.
void write_divergence_dump(const std::string& dir, int epoch, int step,
                           double loss_value, const EncoderParams& params);

// Gradient-audit report (one row per method).
struct GradCheckRow {
  std::string method;
  double max_embed_err = 0.0;
  double max_param_err = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double tol_embed = 0.0;
  double tol_param = 0.0;
  int embed_batches = 0;
  int param_batches = 0;
  std::uint64_t seed = 0;
  bool pass = false;
};

void write_gradcheck_report(const std::string& dir,
                            const GradCheckReport& report);

// Re-renders a stored JSON record (run record, grid report, eval report, or
// gradient audit) as the human-readable table it came from.
void render_report(const std::string& record_path,
                   const std::string& out_path);

}  // namespace awemet
