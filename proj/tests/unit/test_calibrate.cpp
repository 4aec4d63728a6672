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
#include "helpers.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace mpai;
using namespace mpai::test;

namespace {

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, NetworkGraph> fig2_graphs() {
  std::map<std::string, NetworkGraph> out;
  for (const char *n : {"mobilenet_v2", "resnet50", "inception_v4"})
    out.emplace(n, load_graph_file(data(std::string("graphs/") + n + ".json")));
  return out;
}

const FittedParam &param(const FitReport &r, const std::string &name) {
  for (const auto &p : r.params)
    if (p.name == name)
      return p;
  throw std::runtime_error("no param " + name);
}

} // namespace

TEST(FitProfiles, ReproducesEveryRowWithinTenPercent) {
  const auto &t = table1();
  for (const auto &r : t.set.rows) {
    const auto rep = simulate(t.graph, expand(t.graph, r.assignment), t.fit.platform);
    EXPECT_LE(rel_err(rep.inference_latency_s * 1e3, r.inference_ms), 0.10) << r.label;
    EXPECT_LE(rel_err(rep.total_latency_s * 1e3, r.total_ms), 0.10) << r.label;
  }
  EXPECT_TRUE(t.fit.report.warnings.empty());
}

TEST(FitProfiles, ReportResidualsMatchResimulation) {
  const auto &t = table1();
  ASSERT_EQ(t.fit.report.residuals.size(), t.set.rows.size());
  for (std::size_t i = 0; i < t.set.rows.size(); ++i) {
    const auto &res = t.fit.report.residuals[i];
    const auto rep =
        simulate(t.graph, expand(t.graph, t.set.rows[i].assignment), t.fit.platform);
    EXPECT_NEAR(res.total_ms, rep.total_latency_s * 1e3, 1e-9);
    EXPECT_NEAR(res.inference_ms, rep.inference_latency_s * 1e3, 1e-9);
    EXPECT_EQ(res.meas_total_ms, t.set.rows[i].total_ms);
  }
}

TEST(FitProfiles, PreprocInitialisedFromRowGap) {
  // total - inference of the single-device row: 4338 - 4210 ms.
  const auto &p = param(table1().fit.report, "cpu_zcu104.preproc_s");
  EXPECT_NEAR(p.init, 0.128, 1e-12);
  EXPECT_EQ(p.mode, "free");
}

TEST(FitProfiles, FittedValuesStayInsideBounds) {
  for (const auto &p : table1().fit.report.params) {
    if (p.min)
      EXPECT_GE(p.value, *p.min * (1 - 1e-12)) << p.name;
    if (p.max)
      EXPECT_LE(p.value, *p.max * (1 + 1e-12)) << p.name;
  }
}

TEST(FitProfiles, TiedRatesFollowConv) {
  const auto &d = table1().fit.platform.device("dpu");
  EXPECT_NEAR(*d.rate.fc / *d.rate.conv, 0.5, 1e-12);
  EXPECT_NEAR(*d.rate.other / *d.rate.conv, 0.1, 1e-12);
}

TEST(FitProfiles, SameSeedSameResult) {
  const auto &t = table1();
  FitOptions o;
  o.seed = 0;
  const auto a = fit_profiles(t.set.rows, t.graph, t.skeleton, o);
  const auto b = fit_profiles(t.set.rows, t.graph, t.skeleton, o);
  EXPECT_EQ(serialize_platform(a.platform), serialize_platform(b.platform));
  EXPECT_EQ(serialize_fit_report(a.report), serialize_fit_report(b.report));
}

TEST(FitProfiles, HoldOutPredictsMpaiRow) {
  const auto &t = table1();
  std::vector<MeasurementRow> rows;
  for (const auto &r : t.set.rows)
    if (r.label.rfind("MPAI", 0) != 0)
      rows.push_back(r);
  ASSERT_EQ(rows.size(), 5u);
  const auto fit = fit_profiles(rows, t.graph, t.skeleton);
  const auto rep = simulate(t.graph, expand(t.graph, groups("dpu", "dpu", "vpu")), fit.platform);
  EXPECT_LE(rel_err(rep.total_latency_s * 1e3, 92.0), 0.25) << rep.total_latency_s;
}

TEST(FitProfiles, UnidentifiableParameterRejected) {
  // Only the DPU row: nothing constrains the VPU.
  const auto &t = table1();
  std::vector<MeasurementRow> rows{row("MPSoC DPU")};
  EXPECT_THROW(fit_profiles(rows, t.graph, t.skeleton), CalibrationError);
}

TEST(FitProfiles, EmptyRowsRejected) {
  const auto &t = table1();
  EXPECT_THROW(fit_profiles({}, t.graph, t.skeleton), CalibrationError);
}

TEST(Measurements, LoadErrors) {
  EXPECT_THROW(load_measurements("[]x"), ParseError);
  EXPECT_THROW(load_measurements(R"([{"label": "a", "assignment": {"PRE": "x", "BACKBONE": "x",
      "HEAD": "x"}, "inference_ms": 10, "total_ms": 5}])"),
               Error);
  EXPECT_THROW(load_measurements(R"([{"label": "a", "assignment": {"PRE": "x", "BACKBONE": "x",
      "HEAD": "x"}, "inference_ms": 0, "total_ms": 5}])"),
               Error);
  const auto bare = load_measurements(R"([{"label": "a", "assignment": {"PRE": "x",
      "BACKBONE": "x", "HEAD": "x"}, "inference_ms": 3, "total_ms": 5}])");
  EXPECT_EQ(bare.rows.size(), 1u);
  EXPECT_FALSE(bare.baseline.has_value());
}

TEST(CalibrateAccuracySet, NeedsBaseline) {
  auto set = table1().set;
  set.baseline.reset();
  EXPECT_THROW(calibrate_accuracy(set), CalibrationError);
}

TEST(Fig2, TargetsMetAndReportedHonestly) {
  const auto targets = load_fig2_targets(slurp(data("fig2_targets.json")));
  const auto graphs = fig2_graphs();
  const auto sk = load_skeleton_file(data("platforms/fig2_skeleton.json"));
  const auto fit = fit_fig2_profiles(targets, graphs, sk);
  ASSERT_EQ(fit.achieved.size(), 4u);
  for (const auto &a : fit.achieved) {
    EXPECT_TRUE(a.within) << a.target.graph;
    // Recompute from an independent simulation of the fitted platform.
    const auto &g = graphs.at(a.target.graph);
    auto fps = [&](const std::string &dev) {
      return 1.0 / simulate(g, single_device_assignment(g, dev), fit.platform).total_latency_s;
    };
    const double v = a.target.kind == Fig2Target::Kind::Ratio
                         ? fps(a.target.numerator) / fps(a.target.denominator)
                         : fps(a.target.device);
    EXPECT_NEAR(v, a.achieved, 1e-9 * v);
  }
  const auto &m = fit.achieved[0];
  EXPECT_LE(std::fabs(m.achieved / 8.0 - 1.0), 0.15);
  EXPECT_LE(std::fabs(fit.achieved[1].achieved / 2.0 - 1.0), 0.15);
  EXPECT_GE(fit.achieved[2].achieved, 8.0);
  EXPECT_LE(fit.achieved[3].achieved, 12.0);
}

TEST(Fig2, ScalarRateAblationInfeasible) {
  const auto targets = load_fig2_targets(slurp(data("fig2_targets.json")));
  const auto sk = load_skeleton_file(data("platforms/fig2_skeleton.json"));
  Fig2Options o;
  o.scalar_rate_ablation = true;
  try {
    fit_fig2_profiles(targets, fig2_graphs(), sk, o);
    FAIL();
  } catch (const Fig2InfeasibleError &e) {
    ASSERT_EQ(e.best().size(), 4u);
    bool some_missed = false;
    for (const auto &a : e.best())
      some_missed |= !a.within;
    EXPECT_TRUE(some_missed);
  }
}

TEST(Fig2, BadTargets) {
  const auto sk = load_skeleton_file(data("platforms/fig2_skeleton.json"));
  EXPECT_THROW(fit_fig2_profiles({}, fig2_graphs(), sk), Error);
  EXPECT_THROW(load_fig2_targets(R"({"targets": [{"graph": "g", "kind": "speed"}]})"), Error);
  Fig2Target t;
  t.graph = "no_such_graph";
  t.numerator = "tpu";
  t.denominator = "vpu";
  EXPECT_THROW(fit_fig2_profiles({t}, fig2_graphs(), sk), Error);
}

TEST(Uniform01, PortableDraws) {
  EXPECT_EQ(uniform01(0), 0.0);
  EXPECT_EQ(uniform01(~0ull), 1.0 - std::ldexp(1.0, -53));
  EXPECT_EQ(uniform01(1ull << 63), 0.5);
}
