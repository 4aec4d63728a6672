/*
 * Copyright 2026 The mpai-sim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "mpai/cli.hpp"

#include "mpai/calibrate.hpp"
#include "mpai/partitioner.hpp"
#include "mpai/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <system_error>
#include <unistd.h>

namespace mpai {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunConfig {
  std::vector<std::string> graphs;
  std::string platform, measurements, assignment, accuracy_model, fig2_targets, device;
  std::vector<std::string> exclude;
  std::optional<double> max_loce, max_orie, max_energy;
  bool per_layer = false, pipelined = false, pareto = false, scalar_rate_ablation = false;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

/// Stages every output in memory; commit() writes temporaries and renames
/// them into place so a failed run leaves no partial files.
class OutputSet {
public:
  void add(std::string name, std::string content) {
    files_.emplace_back(std::move(name), std::move(content));
  }

  void commit(const fs::path &dir) const {
    if (files_.empty())
      return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
      throw ConfigError("output directory '" + dir.string() + "' is not writable");
    std::vector<std::pair<fs::path, fs::path>> staged;
    auto cleanup = [&] {
      for (const auto &[tmp, dst] : staged)
        fs::remove(tmp, ec);
    };
    for (const auto &[name, content] : files_) {
      const fs::path dst = dir / name;
      const fs::path tmp = dir / ("." + name + ".tmp." + std::to_string(::getpid()));
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      f << content;
      f.close();
      staged.emplace_back(tmp, dst);
      if (!f) {
        cleanup();
        throw ConfigError("cannot write '" + tmp.string() + "'");
      }
    }
    for (const auto &[tmp, dst] : staged) {
      fs::rename(tmp, dst, ec);
      if (ec) {
        cleanup();
        throw ConfigError("cannot rename into '" + dst.string() + "': " + ec.message());
      }
    }
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto &f : files_)
      out.push_back(f.first);
    return out;
  }

private:
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string with_newline(std::string s) {
  if (s.empty() || s.back() != '\n')
    s += '\n';
  return s;
}

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  s.append(s.size() < w ? w - s.size() : 1, ' ');
  return s;
}

std::string device_label(const Platform &p, const std::string &dev) {
  if (!p.has_device(dev))
    return dev;
  return dev + " " + std::string(to_string(p.device(dev).native_precision));
}

/// Device of each group, or "mixed" when a group spans devices.
std::string group_device(const NetworkGraph &g, const Assignment &a, LayerGroup grp) {
  std::set<std::string> devs;
  for (const auto &id : g.group_layers(grp))
    devs.insert(a.at(id));
  if (devs.empty())
    return "-";
  return devs.size() == 1 ? *devs.begin() : "mixed";
}

const NetworkGraph &only_graph(const std::vector<NetworkGraph> &graphs) {
  if (graphs.size() != 1)
    throw ConfigError("this subcommand takes exactly one --graph");
  return graphs.front();
}

Constraints constraints_of(const RunConfig &c) {
  Constraints k;
  k.max_loce = c.max_loce;
  k.max_orie = c.max_orie;
  k.max_energy = c.max_energy;
  k.group_homogeneous = !c.per_layer;
  k.validate();
  return k;
}

Assignment assignment_of(const RunConfig &c, const NetworkGraph &g, const Platform &p) {
  if (!c.assignment.empty() && !c.device.empty())
    throw ConfigError("give either --assignment or --device, not both");
  Assignment a;
  if (!c.assignment.empty())
    a = load_assignment(g, read_text_file(c.assignment));
  else if (!c.device.empty())
    a = single_device_assignment(g, c.device);
  else
    throw ConfigError("an assignment is required: --assignment FILE or --device NAME");
  validate_assignment(g, a, p);
  return a;
}

void print_schedule(std::ostream &out, const NetworkGraph &g, const Assignment &a,
                    const Platform &p, const ScheduleReport &r) {
  out << pad("PRE", 20) << pad("BACKBONE", 20) << pad("HEAD", 20) << pad("Inference ms", 14)
      << pad("Total ms", 12) << pad("LOCE m", 9) << pad("ORIE deg", 10) << "Energy J\n";
  out << pad(device_label(p, group_device(g, a, LayerGroup::Pre)), 20)
      << pad(device_label(p, group_device(g, a, LayerGroup::Backbone)), 20)
      << pad(device_label(p, group_device(g, a, LayerGroup::Head)), 20)
      << pad(fmt("%.2f", r.inference_latency_s * 1e3), 14)
      << pad(fmt("%.2f", r.total_latency_s * 1e3), 12)
      << pad(r.accuracy ? fmt("%.3f", r.accuracy->loce_m) : "-", 9)
      << pad(r.accuracy ? fmt("%.3f", r.accuracy->orie_deg) : "-", 10) << fmt("%.4f", r.energy_j)
      << "\n";
}

std::string group_cell(const Platform &p, const GroupAssignment &ga, LayerGroup g) {
  auto it = ga.find(g);
  return it == ga.end() ? "-" : device_label(p, it->second);
}

// ---------------------------------------------------------------- calibrate

json fig2_report(const Fig2Fit &fit) {
  json doc = json::parse(serialize_fit_report(fit.report));
  doc.erase("residuals");
  json targets = json::array();
  for (const auto &a : fit.achieved) {
    json t{{"graph", a.target.graph}, {"achieved", a.achieved}, {"within", a.within}};
    if (a.target.kind == Fig2Target::Kind::Ratio) {
      t["kind"] = "ratio";
      t["numerator"] = a.target.numerator;
      t["denominator"] = a.target.denominator;
      t["target"] = a.target.value;
      t["rel_tol"] = a.target.rel_tol;
    } else {
      t["kind"] = "fps";
      t["device"] = a.target.device;
      t["min"] = a.target.min;
      t["max"] = a.target.max;
    }
    targets.push_back(std::move(t));
  }
  doc["targets"] = std::move(targets);
  doc["notes"] = "Single-accelerator profiles fitted to throughput relations. The fit searches in "
                 "time-per-op coordinates, where each acceptance band is a linear constraint.";
  return doc;
}

void print_fig2(std::ostream &out, const std::vector<Fig2Achieved> &achieved) {
  out << pad("Graph", 16) << pad("Target", 22) << pad("Achieved", 12) << "Status\n";
  for (const auto &a : achieved) {
    std::string what = a.target.kind == Fig2Target::Kind::Ratio
                           ? "FPS " + a.target.numerator + "/" + a.target.denominator + " " +
                                 fmt("%.3g", a.target.value)
                           : "FPS " + a.target.device + " " + fmt("%.3g", a.target.min) + "-" +
                                 fmt("%.3g", a.target.max);
    out << pad(a.target.graph, 16) << pad(what, 22) << pad(fmt("%.3f", a.achieved), 12)
        << (a.within ? "ok" : "outside") << "\n";
  }
}

int cmd_calibrate_fig2(const RunConfig &c, const std::vector<NetworkGraph> &graphs,
                       OutputSet &outs, std::ostream &out, std::ostream &err) {
  const auto targets = load_fig2_targets(read_text_file(c.fig2_targets));
  std::map<std::string, NetworkGraph> by_name;
  for (const auto &g : graphs)
    if (!by_name.emplace(g.name(), g).second)
      throw ConfigError("graph '" + g.name() + "' given twice");
  const auto sk = load_skeleton_file(c.platform);
  Fig2Options o;
  o.seed = c.seed;
  o.scalar_rate_ablation = c.scalar_rate_ablation;
  try {
    auto fit = fit_fig2_profiles(targets, by_name, sk, o);
    print_fig2(out, fit.achieved);
    outs.add("fitted_platform.json", with_newline(serialize_platform(fit.platform)));
    outs.add("fit_report.json", with_newline(fig2_report(fit).dump(2)));
    return kExitOk;
  } catch (const Fig2InfeasibleError &e) {
    print_fig2(out, e.best());
    err << "error: " << e.what() << "\n";
    return kExitInfeasible;
  }
}

int cmd_calibrate(const RunConfig &c, OutputSet &outs, std::ostream &out, std::ostream &err) {
  if (c.platform.empty())
    throw ConfigError("calibrate needs --platform SKELETON");
  std::vector<NetworkGraph> graphs;
  for (const auto &path : c.graphs)
    graphs.push_back(load_graph_file(path));
  if (!c.fig2_targets.empty()) {
    if (!c.measurements.empty())
      throw ConfigError("give either --measurements or --fig2-targets, not both");
    return cmd_calibrate_fig2(c, graphs, outs, out, err);
  }
  if (c.measurements.empty())
    throw ConfigError("calibrate needs --measurements or --fig2-targets");
  const NetworkGraph &g = only_graph(graphs);
  const auto sk = load_skeleton_file(c.platform);
  MeasurementSet set = load_measurements_file(c.measurements);
  if (!set.graph.empty() && set.graph != g.name())
    throw ConfigError("measurements were taken on '" + set.graph + "' but --graph is '" +
                      g.name() + "'");
  for (const auto &label : c.exclude) {
    auto it = std::find_if(set.rows.begin(), set.rows.end(),
                           [&](const MeasurementRow &r) { return r.label == label; });
    if (it == set.rows.end())
      throw ConfigError("--exclude names unknown row '" + label + "'");
    set.rows.erase(it);
  }

  FitOptions fo;
  fo.seed = c.seed;
  const FitResult fit = fit_profiles(set.rows, g, sk, fo);
  std::optional<AccuracyFit> acc;
  const bool has_acc = set.baseline && std::any_of(set.rows.begin(), set.rows.end(),
                                                   [](const auto &r) { return r.accuracy; });
  if (has_acc)
    acc = calibrate_accuracy(set);

  out << pad("Configuration", 34) << pad("Inference ms", 20) << pad("Total ms", 20)
      << pad("LOCE m", 16) << "ORIE deg\n";
  out << pad("", 34) << pad("meas / sim", 20) << pad("meas / sim", 20) << pad("meas / pred", 16)
      << "meas / pred\n";
  for (std::size_t i = 0; i < fit.report.residuals.size(); ++i) {
    const auto &r = fit.report.residuals[i];
    std::string loce = "-", orie = "-";
    if (acc)
      for (const auto &ar : acc->residuals)
        if (ar.label == r.label) {
          loce = fmt("%.2f", ar.measured.loce_m) + " / " + fmt("%.2f", ar.predicted.loce_m);
          orie = fmt("%.2f", ar.measured.orie_deg) + " / " + fmt("%.2f", ar.predicted.orie_deg);
        }
    out << pad(r.label, 34)
        << pad(fmt("%.0f", r.meas_inference_ms) + " / " + fmt("%.1f", r.inference_ms), 20)
        << pad(fmt("%.0f", r.meas_total_ms) + " / " + fmt("%.1f", r.total_ms), 20)
        << pad(loce, 16) << orie << "\n";
  }
  for (const auto &w : fit.report.warnings)
    err << "warning: " << w << "\n";

  outs.add("fitted_platform.json", with_newline(serialize_platform(fit.platform)));
  outs.add("fit_report.json", with_newline(serialize_fit_report(fit.report)));
  if (acc)
    outs.add("accuracy_model.json", with_newline(serialize_accuracy_model(acc->model)));
  return kExitOk;
}

// ---------------------------------------------------------------- partition

int cmd_partition(const RunConfig &c, OutputSet &outs, std::ostream &out, std::ostream &err) {
  std::vector<NetworkGraph> graphs;
  for (const auto &path : c.graphs)
    graphs.push_back(load_graph_file(path));
  const NetworkGraph &g = only_graph(graphs);
  if (c.platform.empty() || c.accuracy_model.empty())
    throw ConfigError("partition needs --platform and --accuracy-model");
  const Platform p = load_platform_file(c.platform);
  const AccuracyModel model = load_accuracy_model(read_text_file(c.accuracy_model));
  const Constraints k = constraints_of(c);
  if (c.pareto && c.per_layer)
    throw ConfigError("--pareto is group-level; drop --per-layer");

  std::optional<std::vector<ParetoPoint>> frontier;
  if (c.pareto)
    frontier = pareto_frontier(g, p, model);
  try {
    const PartitionResult r = optimize_chain_dp(g, p, model, k);
    const ScheduleReport rep = simulate(g, r.assignment, p, &model);
    print_schedule(out, g, r.assignment, p, rep);
    outs.add("assignment.json", with_newline(serialize_assignment(g, r.assignment)));
    outs.add("schedule_report.json", with_newline(serialize_report(rep)));
    if (frontier)
      outs.add("pareto.csv", pareto_csv(g, *frontier));
    return kExitOk;
  } catch (const InfeasibleError &e) {
    err << "error: " << e.what() << "\n";
    outs.add("infeasibility.json", with_newline(serialize_infeasibility(g, e.report())));
    if (frontier)
      outs.add("pareto.csv", pareto_csv(g, *frontier));
    return kExitInfeasible;
  }
}

int cmd_pareto(const RunConfig &c, OutputSet &outs, std::ostream &out) {
  std::vector<NetworkGraph> graphs;
  for (const auto &path : c.graphs)
    graphs.push_back(load_graph_file(path));
  const NetworkGraph &g = only_graph(graphs);
  if (c.platform.empty() || c.accuracy_model.empty())
    throw ConfigError("pareto needs --platform and --accuracy-model");
  const Platform p = load_platform_file(c.platform);
  const AccuracyModel model = load_accuracy_model(read_text_file(c.accuracy_model));
  const auto frontier = pareto_frontier(g, p, model);
  out << pad("PRE", 20) << pad("BACKBONE", 20) << pad("HEAD", 20) << pad("Total ms", 12)
      << pad("LOCE m", 9) << pad("ORIE deg", 10) << "Energy J\n";
  for (const auto &pt : frontier)
    out << pad(group_cell(p, pt.groups, LayerGroup::Pre), 20)
        << pad(group_cell(p, pt.groups, LayerGroup::Backbone), 20)
        << pad(group_cell(p, pt.groups, LayerGroup::Head), 20)
        << pad(fmt("%.2f", pt.result.latency_s * 1e3), 12)
        << pad(fmt("%.3f", pt.result.accuracy.loce_m), 9)
        << pad(fmt("%.3f", pt.result.accuracy.orie_deg), 10)
        << fmt("%.4f", pt.result.energy_j) << "\n";
  outs.add("pareto.csv", pareto_csv(g, frontier));
  return kExitOk;
}

// ----------------------------------------------------------------- simulate

int cmd_simulate(const RunConfig &c, OutputSet &outs, std::ostream &out) {
  std::vector<NetworkGraph> graphs;
  for (const auto &path : c.graphs)
    graphs.push_back(load_graph_file(path));
  const NetworkGraph &g = only_graph(graphs);
  if (c.platform.empty())
    throw ConfigError("simulate needs --platform");
  const Platform p = load_platform_file(c.platform);
  const Assignment a = assignment_of(c, g, p);
  std::optional<AccuracyModel> model;
  if (!c.accuracy_model.empty())
    model = load_accuracy_model(read_text_file(c.accuracy_model));
  const ScheduleReport rep = simulate(g, a, p, model ? &*model : nullptr);
  print_schedule(out, g, a, p, rep);
  outs.add("schedule_report.json", with_newline(serialize_report(rep)));
  outs.add("traces.csv", traces_csv(rep));
  return kExitOk;
}

json fps_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int cmd_throughput(const RunConfig &c, OutputSet &outs, std::ostream &out) {
  std::vector<NetworkGraph> graphs;
  for (const auto &path : c.graphs)
    graphs.push_back(load_graph_file(path));
  if (graphs.empty())
    throw ConfigError("throughput needs at least one --graph");
  if (c.platform.empty())
    throw ConfigError("throughput needs --platform");
  const Platform p = load_platform_file(c.platform);
  if (graphs.size() > 1 && !c.assignment.empty())
    throw ConfigError("--assignment applies to one graph; use --device with several graphs");
  json doc = json::array();
  out << pad("Graph", 16) << pad("Assignment", 20) << (c.pipelined ? "FPS pipelined" : "FPS")
      << "\n";
  for (const auto &g : graphs) {
    const Assignment a = assignment_of(c, g, p);
    const FpsPair f = throughput(g, a, p);
    const std::string who = c.device.empty() ? "from " + fs::path(c.assignment).filename().string()
                                             : c.device;
    out << pad(g.name(), 16) << pad(who, 20)
        << fmt("%.3f", c.pipelined ? f.pipelined : f.sequential) << "\n";
    doc.push_back({{"graph", g.name()},
                   {"assignment", who},
                   {"fps_sequential", fps_json(f.sequential)},
                   {"fps_pipelined", fps_json(f.pipelined)}});
  }
  outs.add("throughput.json", with_newline(doc.dump(2)));
  return kExitOk;
}

// ----------------------------------------------------------------- validate

int cmd_validate(const RunConfig &c, std::ostream &out) {
  std::vector<NetworkGraph> graphs;
  for (const auto &path : c.graphs) {
    graphs.push_back(load_graph_file(path));
    out << "graph " << graphs.back().name() << ": " << graphs.back().size() << " layers, ok\n";
  }
  std::optional<Platform> p;
  if (!c.platform.empty()) {
    // A skeleton is a platform with parameter annotations; accept either.
    try {
      p = load_platform_file(c.platform);
      out << "platform: " << p->devices().size() << " devices, ok\n";
    } catch (const ParseError &) {
      p = load_skeleton_file(c.platform).base;
      out << "platform skeleton: " << p->devices().size() << " devices, ok\n";
    }
  }
  if (!c.measurements.empty()) {
    const auto set = load_measurements_file(c.measurements);
    if (p)
      for (const auto &r : set.rows)
        for (const auto &[grp, dev] : r.assignment)
          if (!p->has_device(dev))
            throw ConfigError("row '" + r.label + "' uses undeclared device '" + dev + "'");
    out << "measurements: " << set.rows.size() << " rows, ok\n";
  }
  if (!c.accuracy_model.empty()) {
    const auto m = load_accuracy_model(read_text_file(c.accuracy_model));
    out << "accuracy model: " << m.deltas.size() << " deltas, ok\n";
  }
  if (!c.fig2_targets.empty())
    out << "throughput targets: " << load_fig2_targets(read_text_file(c.fig2_targets)).size()
        << ", ok\n";
  if (!c.assignment.empty() || !c.device.empty()) {
    if (!p)
      throw ConfigError("validating an assignment needs --platform");
    assignment_of(c, only_graph(graphs), *p);
    out << "assignment: ok\n";
  }
  constraints_of(c);
  return kExitOk;
}

void add_common(CLI::App *sub, RunConfig &c) {
  sub->add_option("--graph", c.graphs, "Network graph JSON (repeatable)");
  sub->add_option("--platform", c.platform, "Platform or platform skeleton JSON");
  sub->add_option("--out-dir", c.out_dir, "Directory for output files")->capture_default_str();
}

void add_constraints(CLI::App *sub, RunConfig &c) {
  sub->add_option("--max-loce", c.max_loce, "Upper bound on LOCE (m)");
  sub->add_option("--max-orie", c.max_orie, "Upper bound on ORIE (deg)");
  sub->add_option("--max-energy", c.max_energy, "Upper bound on energy per frame (J)");
  sub->add_flag("--per-layer", c.per_layer, "Place layers individually instead of whole groups");
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  RunConfig c;
  CLI::App app{"Mixed-precision DNN partitioning simulator"};
  app.name("mpai");
  app.require_subcommand(1);

  auto *cal = app.add_subcommand("calibrate", "Fit device profiles and the accuracy model");
  add_common(cal, c);
  cal->add_option("--measurements", c.measurements, "Measured latency/accuracy rows");
  cal->add_option("--exclude", c.exclude, "Drop a measurement row by label (repeatable)");
  cal->add_option("--fig2-targets", c.fig2_targets, "Fit to throughput relations instead");
  cal->add_flag("--scalar-rate-ablation", c.scalar_rate_ablation,
                "Throughput fit with one rate per device and no overhead");
  cal->add_option("--seed", c.seed, "Seed for fit restarts")->capture_default_str();

  auto *part = app.add_subcommand("partition", "Find the fastest assignment under constraints");
  add_common(part, c);
  add_constraints(part, c);
  part->add_option("--accuracy-model", c.accuracy_model, "Calibrated accuracy model JSON");
  part->add_flag("--pareto", c.pareto, "Also write the latency/accuracy/energy frontier");

  auto *sim = app.add_subcommand("simulate", "Simulate one assignment");
  add_common(sim, c);
  sim->add_option("--assignment", c.assignment, "Assignment JSON");
  sim->add_option("--device", c.device, "Run every layer on this device");
  sim->add_option("--accuracy-model", c.accuracy_model, "Accuracy model for predicted metrics");

  auto *thr = app.add_subcommand("throughput", "Frames per second of an assignment");
  add_common(thr, c);
  thr->add_option("--assignment", c.assignment, "Assignment JSON");
  thr->add_option("--device", c.device, "Run every layer on this device");
  thr->add_flag("--pipelined", c.pipelined, "Report steady-state pipelined FPS");

  auto *par = app.add_subcommand("pareto", "Group-level trade-off frontier as CSV");
  add_common(par, c);
  par->add_option("--accuracy-model", c.accuracy_model, "Calibrated accuracy model JSON");

  auto *val = app.add_subcommand("validate", "Parse and cross-check input files");
  add_common(val, c);
  add_constraints(val, c);
  val->add_option("--measurements", c.measurements, "Measurement rows");
  val->add_option("--accuracy-model", c.accuracy_model, "Accuracy model JSON");
  val->add_option("--assignment", c.assignment, "Assignment JSON");
  val->add_option("--device", c.device, "Single-device assignment");
  val->add_option("--fig2-targets", c.fig2_targets, "Throughput targets");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  OutputSet outs;
  try {
    int rc = kExitOk;
    if (cal->parsed())
      rc = cmd_calibrate(c, outs, out, err);
    else if (part->parsed())
      rc = cmd_partition(c, outs, out, err);
    else if (sim->parsed())
      rc = cmd_simulate(c, outs, out);
    else if (thr->parsed())
      rc = cmd_throughput(c, outs, out);
    else if (par->parsed())
      rc = cmd_pareto(c, outs, out);
    else if (val->parsed())
      rc = cmd_validate(c, out);
    outs.commit(c.out_dir);
    for (const auto &n : outs.names())
      err << "wrote " << (fs::path(c.out_dir) / n).string() << "\n";
    return rc;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

} // namespace mpai
