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
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any selected criterion fails. `--only N` runs one.
#include "../oracles.hpp"
#include "mpai/calibrate.hpp"
#include "mpai/cli.hpp"
#include "mpai/partitioner.hpp"
#include "mpai/quantlab.hpp"
#include "mpai/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mpai;

namespace {

fs::path data(const std::string &rel) { return fs::path(MPAI_DATA_DIR) / rel; }

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GroupAssignment groups(const std::string &pre, const std::string &bb, const std::string &head) {
  return {{LayerGroup::Pre, pre}, {LayerGroup::Backbone, bb}, {LayerGroup::Head, head}};
}

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Calibrated {
  NetworkGraph graph;
  MeasurementSet set;
  PlatformSkeleton skeleton;
  Platform platform;
  AccuracyModel model;
  AccuracyFit acc;
};

/// Calibration through the command-line entry point, outputs read back.
const Calibrated &calibrated() {
  static const Calibrated c = [] {
    const auto dir = fs::temp_directory_path() / "mpai_acceptance_cal";
    fs::remove_all(dir);
    std::ostringstream out, err;
    const int rc = run_cli({"calibrate", "--graph", data("graphs/ursonet_proxy.json").string(),
                            "--platform", data("platforms/table1_skeleton.json").string(),
                            "--measurements", data("measurements/table1.json").string(),
                            "--out-dir", dir.string()},
                           out, err);
    if (rc != kExitOk)
      throw std::runtime_error("calibrate failed: " + err.str());
    auto set = load_measurements_file(data("measurements/table1.json"));
    auto acc = calibrate_accuracy(set);
    Calibrated r{load_graph_file(data("graphs/ursonet_proxy.json")),
                 std::move(set),
                 load_skeleton_file(data("platforms/table1_skeleton.json")),
                 load_platform_file(dir / "fitted_platform.json"),
                 load_accuracy_model(slurp(dir / "accuracy_model.json")),
                 std::move(acc)};
    fs::remove_all(dir);
    return r;
  }();
  return c;
}

double total_ms(const Calibrated &c, const GroupAssignment &g) {
  return simulate(c.graph, expand(c.graph, g), c.platform).total_latency_s * 1e3;
}

Outcome table1_reproduction() {
  const auto &c = calibrated();
  Outcome o;
  double worst = 0.0;
  for (const auto &r : c.set.rows) {
    const auto rep = simulate(c.graph, expand(c.graph, r.assignment), c.platform);
    const double ei = rel(rep.inference_latency_s * 1e3, r.inference_ms);
    const double et = rel(rep.total_latency_s * 1e3, r.total_ms);
    worst = std::max({worst, ei, et});
    if (ei > 0.10 || et > 0.10) {
      o.pass = false;
      o.detail += r.label + " ";
    }
  }
  o.detail += "6 rows, worst relative error " + std::to_string(worst);
  return o;
}

Outcome speedup_ratios() {
  const auto &c = calibrated();
  const double dpu = total_ms(c, groups("dpu", "dpu", "dpu"));
  const double vpu = total_ms(c, groups("vpu", "vpu", "vpu"));
  const double tpu = total_ms(c, groups("tpu", "tpu", "tpu"));
  const double mp = total_ms(c, groups("dpu", "dpu", "vpu"));
  struct R {
    const char *name;
    double got, want;
  } rs[] = {{"DPU/VPU", vpu / dpu, 3.8},
            {"DPU/TPU", tpu / dpu, 2.8},
            {"MPAI/VPU", vpu / mp, 2.7},
            {"MPAI/TPU", tpu / mp, 2.0}};
  Outcome o;
  for (const auto &r : rs) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s %.2fx ", r.name, r.got);
    o.detail += buf;
    o.pass &= rel(r.got, r.want) <= 0.10;
  }
  return o;
}

Outcome hold_out() {
  const auto &c = calibrated();
  std::vector<MeasurementRow> rows;
  for (const auto &r : c.set.rows)
    if (r.label.rfind("MPAI", 0) != 0)
      rows.push_back(r);
  const auto fit = fit_profiles(rows, c.graph, c.skeleton);
  const auto rep = simulate(c.graph, expand(c.graph, groups("dpu", "dpu", "vpu")), fit.platform);
  const double ms = rep.total_latency_s * 1e3;
  return {rows.size() == 5 && rel(ms, 92.0) <= 0.25,
          "predicted MPAI total " + std::to_string(ms) + " ms from 5 rows"};
}

Outcome partition_discovery() {
  const auto &c = calibrated();
  Constraints k;
  k.max_orie = 7.5;
  const auto r = optimize_chain_dp(c.graph, c.platform, c.model, k);
  const auto g = group_view(c.graph, r.assignment);
  const auto expect = predict_accuracy(g, c.model);
  const auto free = optimize_chain_dp(c.graph, c.platform, c.model, {});
  const bool ok = g.at(LayerGroup::Backbone) == "dpu" && g.at(LayerGroup::Head) == "vpu" &&
                  r.accuracy == expect && std::fabs(r.accuracy.loce_m - 0.68) < 5e-3 &&
                  std::fabs(r.accuracy.orie_deg - 7.32) < 5e-3 &&
                  group_view(c.graph, free.assignment) == groups("dpu", "dpu", "dpu");
  char buf[160];
  std::snprintf(buf, sizeof buf, "ORIE<=7.5: BACKBONE=%s HEAD=%s %.2f m / %.2f deg; unconstrained %s",
                g.at(LayerGroup::Backbone).c_str(), g.at(LayerGroup::Head).c_str(),
                r.accuracy.loce_m, r.accuracy.orie_deg,
                group_view(c.graph, free.assignment).at(LayerGroup::Backbone).c_str());
  return {ok, buf};
}

Outcome fig2_expressiveness() {
  const auto targets = load_fig2_targets(slurp(data("fig2_targets.json")));
  std::map<std::string, NetworkGraph> graphs;
  for (const char *n : {"mobilenet_v2", "resnet50", "inception_v4"})
    graphs.emplace(n, load_graph_file(data(std::string("graphs/") + n + ".json")));
  const auto sk = load_skeleton_file(data("platforms/fig2_skeleton.json"));
  Outcome o;
  try {
    const auto fit = fit_fig2_profiles(targets, graphs, sk);
    for (const auto &a : fit.achieved) {
      // Judge from a fresh simulation, not from the fitter's own numbers.
      const auto &g = graphs.at(a.target.graph);
      auto fps = [&](const std::string &d) {
        return 1.0 / simulate(g, single_device_assignment(g, d), fit.platform).total_latency_s;
      };
      double v;
      bool in;
      if (a.target.kind == Fig2Target::Kind::Ratio) {
        v = fps(a.target.numerator) / fps(a.target.denominator);
        in = std::fabs(v / a.target.value - 1.0) <= a.target.rel_tol;
      } else {
        v = fps(a.target.device);
        in = v >= a.target.min && v <= a.target.max;
      }
      o.pass &= in;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s %.2f ", a.target.graph.c_str(), v);
      o.detail += buf;
    }
  } catch (const Fig2InfeasibleError &e) {
    o.pass = false;
    o.detail += std::string("full model infeasible: ") + e.what() + " ";
  }
  Fig2Options ab;
  ab.scalar_rate_ablation = true;
  try {
    fit_fig2_profiles(targets, graphs, sk, ab);
    o.pass = false;
    o.detail += "; scalar-rate ablation unexpectedly feasible";
  } catch (const Fig2InfeasibleError &) {
    o.detail += "; scalar-rate ablation infeasible";
  }
  return o;
}

/// Random platforms with 1..4 devices, some cloned to force ties.
Platform random_platform(std::mt19937_64 &rng, int n) {
  std::uniform_real_distribution<double> lg(0.0, 1.0);
  auto logu = [&](double lo, double hi) { return lo * std::pow(hi / lo, lg(rng)); };
  const Precision precs[] = {Precision::INT8, Precision::FP16, Precision::FP32};
  std::vector<DeviceProfile> devs;
  for (int i = 0; i < n; ++i) {
    DeviceProfile d;
    if (i > 0 && rng() % 4 == 0) {
      d = devs[rng() % devs.size()];
    } else {
      d.native_precision = precs[rng() % 3];
      d.rate.conv = logu(1e5, 1e7);
      d.rate.fc = logu(1e5, 1e7);
      d.rate.other = logu(1e5, 1e7);
      d.invocation_overhead_s = rng() % 3 == 0 ? 0.0 : logu(1e-4, 1e-2);
      d.preproc_s = logu(1e-4, 1e-2);
      d.power_active_w = logu(0.5, 5.0);
      d.power_idle_w = d.power_active_w * lg(rng);
    }
    d.name = std::string(1, static_cast<char>('a' + i));
    devs.push_back(d);
  }
  std::vector<LinkProfile> links;
  const bool star = rng() % 3 == 0;
  for (const auto &x : devs)
    for (const auto &y : devs) {
      if (x.name == y.name || (star && x.name != "a" && y.name != "a"))
        continue;
      links.push_back({x.name, y.name, logu(1e3, 1e6), rng() % 2 ? 0.0 : logu(1e-5, 1e-3)});
    }
  return Platform(devs, links, "a");
}

/// PRE resample followed by a chain of 1..5 units; some units are diamonds.
NetworkGraph random_graph(std::mt19937_64 &rng, int units) {
  std::vector<Layer> ls;
  const std::int64_t h = 2 + rng() % 4, w = 2 + rng() % 4;
  std::int64_t c = 3;
  ls.push_back({"r", ResampleParams{}, {"input"}, TensorShape{{h, w, c}}, LayerGroup::Pre});
  std::string prev = "r";
  const int head_from = 1 + static_cast<int>(rng() % units);
  for (int u = 0; u < units; ++u) {
    const auto grp = u >= head_from ? LayerGroup::Head : LayerGroup::Backbone;
    const std::string id = "u" + std::to_string(u);
    const int kind = static_cast<int>(rng() % 4);
    if (kind == 3 && grp == LayerGroup::Head) {
      const std::int64_t out = 1 + rng() % 8;
      ls.push_back({id, FullyConnectedParams{h * w * c, out}, {prev}, TensorShape{{out}}, grp});
      prev = id;
      // After a flatten only elementwise layers keep shapes simple.
      for (int v = u + 1; v < units; ++v) {
        const std::string a = "u" + std::to_string(v);
        ls.push_back({a, ActivationParams{}, {prev}, TensorShape{{out}}, LayerGroup::Head});
        prev = a;
      }
      break;
    }
    const std::int64_t co = 1 + rng() % 6;
    ConvParams p;
    p.kernel_h = p.kernel_w = 1 + 2 * static_cast<std::int64_t>(rng() % 2);
    p.in_channels = c;
    p.out_channels = co;
    if (kind == 2) {
      // Diamond: two convs joined by an add; moves as one unit.
      ls.push_back({id + "a", p, {prev}, TensorShape{{h, w, co}}, grp});
      ls.push_back({id + "b", p, {prev}, TensorShape{{h, w, co}}, grp});
      ls.push_back({id, ElementwiseAddParams{}, {id + "a", id + "b"}, TensorShape{{h, w, co}}, grp});
    } else {
      ls.push_back({id, p, {prev}, TensorShape{{h, w, co}}, grp});
    }
    c = co;
    prev = id;
  }
  return NetworkGraph("rand", TensorShape{{h, w, 3}}, ls);
}

AccuracyModel random_model(std::mt19937_64 &rng, const Platform &p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AccuracyModel m;
  m.baseline = {0.5, 5.0};
  for (const auto &d : p.devices())
    for (auto g : {LayerGroup::Backbone, LayerGroup::Head})
      m.deltas[{d.name, g}] = rng() % 4 == 0 ? AccuracyMetrics{0.0, 0.0}
                                             : AccuracyMetrics{u(rng), 3 * u(rng)};
  return m;
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(20240601);
  int instances = 0, infeasible = 0, mismatches = 0, max_units = 0;
  std::string first;
  for (int i = 0; i < 300; ++i) {
    const int nd = 1 + static_cast<int>(rng() % 4);
    const auto p = random_platform(rng, nd);
    const auto g = random_graph(rng, 1 + static_cast<int>(rng() % 5));
    const auto m = random_model(rng, p);
    Constraints k;
    k.group_homogeneous = rng() % 3 == 0;
    if (rng() % 2)
      k.max_orie = 5.0 + 6.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (rng() % 3 == 0)
      k.max_loce = 0.5 + 1.5 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (rng() % 4 == 0)
      k.max_energy = std::exp(std::uniform_real_distribution<double>(-8.0, 0.0)(rng));
    std::vector<DecisionUnit> units;
    try {
      units = decision_units(g, k.group_homogeneous);
    } catch (const ContractError &) {
      continue; // group mode needs a non-empty HEAD
    }
    max_units = std::max(max_units, static_cast<int>(units.size()));
    if (units.size() > 6)
      continue;
    ++instances;
    std::optional<PartitionResult> dp, ex;
    try {
      dp = optimize_chain_dp(g, p, m, k);
    } catch (const InfeasibleError &) {
    }
    try {
      ex = exhaustive_search(g, p, m, k);
    } catch (const InfeasibleError &) {
    }
    bool same = dp.has_value() == ex.has_value();
    if (same && dp)
      same = dp->latency_s == ex->latency_s && dp->assignment == ex->assignment &&
             dp->switches == ex->switches;
    if (!dp && !ex)
      ++infeasible;
    if (!same) {
      ++mismatches;
      if (first.empty())
        first = " first mismatch at instance " + std::to_string(i);
    }
  }
  return {instances >= 200 && mismatches == 0,
          std::to_string(instances) + " instances (" + std::to_string(infeasible) +
              " infeasible, max " + std::to_string(max_units) + " units), " +
              std::to_string(mismatches) + " mismatches" + first};
}

Outcome quantization_properties() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto &table = oracle::fp16_table();
  int failures = 0;
  const int cases = 10000;
  for (int i = 0; i < cases; ++i) {
    const double span = std::exp2(-10.0 + 20.0 * u(rng));
    const double lo = -span * u(rng), hi = span * u(rng) + 1e-300;
    const std::size_t n = 64 + rng() % 193;
    std::vector<double> v(n);
    for (auto &x : v)
      x = lo + (hi - lo) * u(rng);
    const TensorSample t(v);
    const auto scheme = rng() % 2 ? QuantScheme::Symmetric : QuantScheme::Asymmetric;
    const auto qp = fit_quant_params(t, scheme);
    const auto q = quantize_dequantize(t, qp);
    bool ok = true;
    for (std::size_t j = 0; j < n; ++j)
      ok &= std::fabs(q.values()[j] - v[j]) <= qp.scale / 2 * (1 + 1e-12);
    ok &= quantize_dequantize(q, qp).values() == q.values();
    const double f16 = table[rng() % table.size()] * (rng() % 2 ? 1 : -1);
    ok &= round_to_fp16(f16) == f16;
    const auto h = round_fp16(t);
    ok &= round_fp16(h).values() == h.values();
    ok &= sqnr(t, h) >= sqnr(t, q);
    failures += !ok;
  }
  return {failures == 0,
          std::to_string(cases) + " cases, " + std::to_string(failures) + " failures"};
}

Outcome accuracy_fit() {
  const auto &c = calibrated();
  Outcome o;
  double wl = 0.0, wo = 0.0;
  for (const auto &r : c.set.rows) {
    const auto p = predict_accuracy(r.assignment, c.model);
    wl = std::max(wl, std::fabs(p.loce_m - r.accuracy->loce_m));
    wo = std::max(wo, std::fabs(p.orie_deg - r.accuracy->orie_deg));
  }
  o.pass = wl <= 0.02 && wo <= 0.2;
  // Raising any delta never lowers a prediction.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  const std::vector<std::string> devs{"cpu_devboard", "cpu_zcu104", "dpu", "tpu", "vpu"};
  for (int i = 0; i < 2000; ++i) {
    const auto asg = groups(devs[rng() % 5], devs[rng() % 5], devs[rng() % 5]);
    const auto before = predict_accuracy(asg, c.model);
    auto m = c.model;
    const auto grp = rng() % 2 ? LayerGroup::Backbone : LayerGroup::Head;
    auto &d = m.deltas.at({devs[rng() % 5], grp});
    d.loce_m += u(rng);
    d.orie_deg += u(rng);
    const auto after = predict_accuracy(asg, m);
    violations += after.loce_m < before.loce_m || after.orie_deg < before.orie_deg;
  }
  o.pass &= violations == 0;
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "worst residual %.4f m / %.4f deg; 2000 monotonicity cases, %d violations", wl, wo,
                violations);
  o.detail = buf;
  return o;
}

} // namespace

int main(int argc, char **argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--only" && i + 1 < argc)
      only = std::stoi(argv[++i]);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Table 1 reproduction", table1_reproduction},
      {"Speedup ratios", speedup_ratios},
      {"Hold-out prediction", hold_out},
      {"Partition discovery", partition_discovery},
      {"Fig. 2 expressiveness", fig2_expressiveness},
      {"Oracle equivalence", oracle_equivalence},
      {"Quantization properties", quantization_properties},
      {"Accuracy-model fit", accuracy_fit},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (only && only != id)
      continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << "): " << o.detail << "\n";
    all &= o.pass;
  }
  return all ? 0 : 1;
}
