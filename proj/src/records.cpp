// SPDX-License-Identifier: Apache-2.0
#include "awemet/records.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace awemet {

namespace {
using json = nlohmann::ordered_json;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw_io("cannot open for writing: " + path);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw_io("short write: " + path);
}

// Shortest round-trip decimal form, the same one the JSON records use.
std::string num(double v) { return json(v).dump(); }

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

json method_json(const MethodSpec& m) {
  json j;
  j["name"] = m.name;
  if (m.kind == MethodKind::Gpw) {
    j["loss"] = {{"fp", pair_fn_name(m.loss.fp)},
                 {"fn", pair_fn_name(m.loss.fn)},
                 {"sp_kind", sim_kind_name(m.loss.sp_kind)},
                 {"sn_kind", sim_kind_name(m.loss.sn_kind)},
                 {"alpha", m.loss.alpha},
                 {"beta", m.loss.beta},
                 {"lambda", m.loss.lambda}};
  } else if (m.kind != MethodKind::Dtw) {
    j["margin"] = m.margin;
  }
  return j;
}

json config_json(const TrainConfig& c) {
  json j;
  j["method"] = method_json(c.method);
  j["lr"] = c.lr;
  j["epochs"] = c.epochs;
  j["batch_classes"] = c.batch_classes;
  j["batch_items"] = c.batch_items;
  j["seed"] = c.seed;
  j["eval_every"] = c.eval_every;
  j["eval_pair_cap"] = c.eval_pair_cap;
  j["encoder"] = {{"feat_dim", c.dims.feat_dim},
                  {"char_dim", c.dims.char_dim},
                  {"alphabet", c.dims.alphabet},
                  {"hidden", c.dims.hidden},
                  {"embed_dim", c.dims.embed_dim},
                  {"dropout", c.dims.dropout}};
  return j;
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

std::string grid_table_text(const json& report) {
  const std::vector<std::string> head = {"method",  "pos_fn",      "neg_fn",
                                         "pos_sim", "neg_sim",     "acoustic_ap",
                                         "sd",      "crossview_ap", "sd",
                                         "runs",    "errors"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& cell : report.at("cells")) {
    std::vector<std::string> row;
    row.push_back(cell.at("method").at("name").get<std::string>());
    if (cell.at("method").contains("loss")) {
      const auto& l = cell.at("method").at("loss");
      row.push_back(l.at("fp").get<std::string>());
      row.push_back(l.at("fn").get<std::string>());
      row.push_back(l.at("sp_kind").get<std::string>());
      row.push_back(l.at("sn_kind").get<std::string>());
    } else {
      for (int i = 0; i < 4; ++i) row.push_back("-");
    }
    const bool any = !cell.at("acoustic_aps").empty();
    row.push_back(any ? fixed4(cell.at("mean_acoustic").get<double>()) : "-");
    row.push_back(any ? fixed4(cell.at("sd_acoustic").get<double>()) : "-");
    const bool cv = !cell.at("crossview_aps").empty();
    row.push_back(cv ? fixed4(cell.at("mean_crossview").get<double>()) : "-");
    row.push_back(cv ? fixed4(cell.at("sd_crossview").get<double>()) : "-");
    row.push_back(std::to_string(cell.at("acoustic_aps").size()));
    row.push_back(std::to_string(cell.at("errors").size()));
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    width[c] = head[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t c = 0; c < head.size(); ++c)
    out += pad(head[c], width[c] + 2);
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out += pad(row[c], width[c] + 2);
    out += '\n';
  }
  return out;
}

std::string run_record_text(const json& rec) {
  std::string out;
  out += "method: " + rec.at("method").get<std::string>() + "\n";
  out += "best_epoch: " + rec.at("best_epoch").dump() + "\n";
  out += "best_dev_acoustic_ap: " + rec.at("best_dev_acoustic_ap").dump() +
         "\n";
  out += "test_acoustic_ap: " + rec.at("test_acoustic_ap").dump() + "\n";
  out += "test_crossview_ap: " + rec.at("test_crossview_ap").dump() + "\n";
  out += "epochs_recorded: " + std::to_string(rec.at("curve").size()) + "\n";
  return out;
}

std::string eval_report_text(const json& entries) {
  std::string out = "task  split  ap  num_pairs  seed\n";
  for (const auto& e : entries) {
    out += e.at("task").get<std::string>() + "  " +
           e.at("split").get<std::string>() + "  " + e.at("ap").dump() +
           "  " + e.at("num_pairs").dump() + "  " + e.at("seed").dump() +
           "\n";
  }
  return out;
}

std::string gradcheck_text(const json& rep) {
  std::string out;
  out += "tolerances: embed " + rep.at("tol_embed").dump() + ", params " +
         rep.at("tol_param").dump() + "\n";
  for (const auto& row : rep.at("rows")) {
    out += pad(row.at("method").get<std::string>(), 26) + "embed " +
           num(row.at("max_embed_err").get<double>()) + "  params " +
           num(row.at("max_param_err").get<double>()) +
           (row.at("pass").get<bool>() ? "  ok" : "  FAIL") + "\n";
  }
  out += std::string("overall: ") +
         (rep.at("pass").get<bool>() ? "ok" : "FAIL") + "\n";
  return out;
}

}  // namespace

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw_io("cannot create directory " + dir + ": " + ec.message());
}

void write_run_record(const std::string& dir, const TrainConfig& config,
                      const RunRecord& rec) {
  ensure_dir(dir);
  json j;
  j["method"] = rec.method_name;
  j["config"] = config_json(config);
  j["steps_per_epoch"] = rec.steps_per_epoch;
  j["best_epoch"] = rec.best_epoch;
  j["best_dev_acoustic_ap"] = rec.best_dev_acoustic_ap;
  j["test_acoustic_ap"] = rec.test_acoustic_ap;
  j["test_crossview_ap"] = rec.test_crossview_ap;
  json curve = json::array();
  for (const EpochPoint& p : rec.curve)
    curve.push_back({{"epoch", p.epoch},
                     {"dev_acoustic_ap", p.dev_acoustic_ap},
                     {"dev_crossview_ap", p.dev_crossview_ap}});
  j["curve"] = curve;
  write_text(dir + "/run_record.json", j.dump(2) + "\n");

  std::string csv = "epoch,dev_acoustic_ap,dev_crossview_ap\n";
  for (const EpochPoint& p : rec.curve)
    csv += std::to_string(p.epoch) + "," + num(p.dev_acoustic_ap) + "," +
           num(p.dev_crossview_ap) + "\n";
  write_text(dir + "/curve.csv", csv);

  // Wall clock lives apart from the deterministic records.
  std::string timings = "epoch,seconds\n";
  for (std::size_t e = 0; e < rec.epoch_seconds.size(); ++e)
    timings += std::to_string(e + 1) + "," + num(rec.epoch_seconds[e]) + "\n";
  write_text(dir + "/timings.csv", timings);
}

void write_grid_report(const std::string& dir, const GridReport& report) {
  ensure_dir(dir);
  json j;
  j["repeats"] = report.repeats;
  json cells = json::array();
  for (const GridCellResult& c : report.cells) {
    json cj;
    cj["method"] = method_json(c.method);
    cj["acoustic_aps"] = c.acoustic_aps;
    cj["crossview_aps"] = c.crossview_aps;
    cj["errors"] = c.errors;
    cj["mean_acoustic"] = c.mean_acoustic;
    cj["sd_acoustic"] = c.sd_acoustic;
    cj["mean_crossview"] = c.mean_crossview;
    cj["sd_crossview"] = c.sd_crossview;
    cells.push_back(std::move(cj));
  }
  j["cells"] = cells;
  write_text(dir + "/grid_report.json", j.dump(2) + "\n");
  write_text(dir + "/grid_table.txt", grid_table_text(j));

  std::string csv =
      "method,pos_fn,neg_fn,pos_sim,neg_sim,mean_acoustic_ap,sd_acoustic_ap,"
      "mean_crossview_ap,sd_crossview_ap,runs,errors\n";
  for (const GridCellResult& c : report.cells) {
    csv += c.method.name + ",";
    if (c.method.kind == MethodKind::Gpw) {
      csv += std::string(pair_fn_name(c.method.loss.fp)) + "," +
             pair_fn_name(c.method.loss.fn) + "," +
             sim_kind_name(c.method.loss.sp_kind) + "," +
             sim_kind_name(c.method.loss.sn_kind) + ",";
    } else {
      csv += "-,-,-,-,";
    }
    csv += num(c.mean_acoustic) + "," + num(c.sd_acoustic) + "," +
           num(c.mean_crossview) + "," + num(c.sd_crossview) + "," +
           std::to_string(c.acoustic_aps.size()) + "," +
           std::to_string(c.errors.size()) + "\n";
  }
  write_text(dir + "/grid_table.csv", csv);
}

void write_eval_report(const std::string& path,
                       const std::vector<EvalEntry>& entries) {
  json arr = json::array();
  for (const EvalEntry& e : entries)
    arr.push_back({{"task", e.task},
                   {"split", e.split},
                   {"ap", e.ap},
                   {"num_pairs", e.num_pairs},
                   {"seed", e.seed}});
  write_text(path, arr.dump(2) + "\n");
}

void write_divergence_dump(const std::string& dir, int epoch, int step,
                           double loss_value, const EncoderParams& params) {
  ensure_dir(dir);
  json j;
  j["epoch"] = epoch;
  j["step"] = step;
  j["loss_value"] = loss_value;
  j["param_inf_norm"] = params.flat.lpNorm<Eigen::Infinity>();
  j["param_finite"] = params.flat.allFinite();
  write_text(dir + "/divergence.json", j.dump(2) + "\n");
}

void write_gradcheck_report(const std::string& dir,
                            const GradCheckReport& report) {
  ensure_dir(dir);
  json j;
  j["tol_embed"] = report.tol_embed;
  j["tol_param"] = report.tol_param;
  j["embed_batches"] = report.embed_batches;
  j["param_batches"] = report.param_batches;
  j["seed"] = report.seed;
  j["pass"] = report.pass;
  json rows = json::array();
  for (const GradCheckRow& r : report.rows)
    rows.push_back({{"method", r.method},
                    {"max_embed_err", r.max_embed_err},
                    {"max_param_err", r.max_param_err},
                    {"pass", r.pass}});
  j["rows"] = rows;
  write_text(dir + "/grad_check.json", j.dump(2) + "\n");
  write_text(dir + "/grad_check.txt", gradcheck_text(j));
}

void render_report(const std::string& record_path,
                   const std::string& out_path) {
  std::ifstream is(record_path, std::ios::binary);
  if (!is) throw_io("cannot open record: " + record_path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw_io("cannot parse record " + record_path + ": " + e.what());
  }
  std::string text;
  if (j.is_array())
    text = eval_report_text(j);
  else if (j.contains("cells"))
    text = grid_table_text(j);
  else if (j.contains("curve"))
    text = run_record_text(j);
  else if (j.contains("rows"))
    text = gradcheck_text(j);
  else
    throw_io("unrecognized record shape: " + record_path);
  write_text(out_path, text);
}

}  // namespace awemet
