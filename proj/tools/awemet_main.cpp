// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Everything goes through the public C interface;
// this file never touches the C++ internals.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "awemet.h"

namespace {

constexpr const char* kDescription =
    "awemet: joint acoustic / written word embedding training and "
    "word-discrimination evaluation.\n"
    "Worker threads come from the AWEMET_WORKERS environment variable "
    "(default 1); results are identical for any worker count.";

int finish(awemet_status status) {
  if (status != AWEMET_OK)
    std::cerr << "error: " << awemet_last_error() << std::endl;
  return static_cast<int>(status);
}

void print_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (is) std::cout << is.rdbuf();
}

const char* opt_cstr(const std::string& s) { return s.empty() ? "" : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{kDescription};
  app.require_subcommand(1);
  app.set_version_flag("--version", awemet_version());

  std::string config, dataset, out, checkpoint, record;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_dataset) {
    cmd->add_option("--config", config, "JSON config path (defaults apply when omitted)");
    cmd->add_option("--out", out, "output directory")->required();
    cmd->add_option("--seed", seed, "seed override (takes precedence over the config)");
    if (needs_dataset)
      cmd->add_option("--dataset", dataset, "dataset file produced by `generate`")
          ->required();
    return cmd;
  };

  CLI::App* generate = add_common(
      app.add_subcommand("generate", "synthesize a dataset (writes dataset.bin)"),
      false);
  CLI::App* train = add_common(
      app.add_subcommand("train",
                         "train one method (writes run_record.json, curve.csv, "
                         "checkpoint.bin, timings.csv)"),
      true);
  CLI::App* eval = add_common(
      app.add_subcommand("eval",
                         "score a checkpoint on dev/test (writes "
                         "eval_report.json/.txt)"),
      true);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file from `train`")
      ->required();
  CLI::App* gradcheck = add_common(
      app.add_subcommand("grad-check",
                         "finite-difference audit of every method (writes "
                         "grad_check.json/.txt); nonzero exit on failure"),
      false);
  CLI::App* grid = add_common(
      app.add_subcommand("grid",
                         "train a method list with repeated seeds (writes "
                         "grid_report.json, grid_table.txt/.csv)"),
      true);
  CLI::App* report = app.add_subcommand(
      "report", "re-render a stored record JSON as text (writes report.txt)");
  report->add_option("--record", record, "stored record JSON path")->required();
  report->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(AWEMET_ERR_USAGE);
  }

  const int has_seed = app.get_subcommand()->count("--seed") > 0 ? 1 : 0;

  if (generate->parsed()) {
    const awemet_status st =
        awemet_generate(opt_cstr(config), out.c_str(), has_seed, seed);
    if (st == AWEMET_OK) std::cout << "wrote " << out << "/dataset.bin\n";
    return finish(st);
  }
  if (train->parsed()) {
    const awemet_status st = awemet_train(opt_cstr(config), dataset.c_str(),
                                          out.c_str(), has_seed, seed);
    if (st == AWEMET_OK)
      std::cout << "wrote " << out << "/run_record.json and checkpoint.bin\n";
    return finish(st);
  }
  if (eval->parsed()) {
    const awemet_status st =
        awemet_evaluate(opt_cstr(config), dataset.c_str(), checkpoint.c_str(),
                        out.c_str(), has_seed, seed);
    if (st == AWEMET_OK) print_file(out + "/eval_report.txt");
    return finish(st);
  }
  if (gradcheck->parsed()) {
    const awemet_status st =
        awemet_grad_check(opt_cstr(config), out.c_str(), has_seed, seed);
    print_file(out + "/grad_check.txt");
    return finish(st);
  }
  if (grid->parsed()) {
    const awemet_status st = awemet_grid(opt_cstr(config), dataset.c_str(),
                                         out.c_str(), has_seed, seed);
    if (st == AWEMET_OK) print_file(out + "/grid_table.txt");
    return finish(st);
  }
  if (report->parsed()) {
    const std::string out_path = out + "/report.txt";
    const awemet_status st = awemet_report(record.c_str(), out_path.c_str());
    if (st == AWEMET_OK) print_file(out_path);
    return finish(st);
  }
  return static_cast<int>(AWEMET_ERR_USAGE);
}
