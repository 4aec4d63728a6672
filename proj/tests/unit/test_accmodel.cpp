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
#include "../oracles.hpp"
#include "helpers.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mpai;
using namespace mpai::test;

namespace {

const AccuracyModel &model() { return table1().acc.model; }

std::vector<AccuracyRow> accuracy_rows(bool with_mixed) {
  std::vector<AccuracyRow> out;
  for (const auto &r : table1().set.rows) {
    const bool mixed = r.assignment.at(LayerGroup::Backbone) != r.assignment.at(LayerGroup::Head);
    if (mixed && !with_mixed)
      continue;
    out.push_back({r.label, r.assignment, *r.accuracy});
  }
  return out;
}

} // namespace

TEST(PredictAccuracy, TableRows) {
  const auto cpu = predict_accuracy(groups("cpu_devboard", "cpu_devboard", "cpu_devboard"), model());
  EXPECT_NEAR(cpu.loce_m, 0.68, 1e-4);
  EXPECT_NEAR(cpu.orie_deg, 7.28, 1e-4);
  const auto mpai = predict_accuracy(groups("dpu", "dpu", "vpu"), model());
  EXPECT_NEAR(mpai.loce_m, 0.68, 1e-4);
  EXPECT_NEAR(mpai.orie_deg, 7.32, 1e-4);
  const auto vpu = predict_accuracy(groups("vpu", "vpu", "vpu"), model());
  EXPECT_NEAR(vpu.loce_m, 0.69, 1e-4);
  EXPECT_NEAR(vpu.orie_deg, 8.71, 1e-4);
}

TEST(PredictAccuracy, IsSumOfBaselineOffsetAndDeltas) {
  AccuracyModel m;
  m.baseline = {0.5, 5.0};
  m.model_offset = {0.1, 1.0};
  m.deltas[{"x", LayerGroup::Backbone}] = {0.01, 0.2};
  m.deltas[{"y", LayerGroup::Head}] = {0.02, 0.4};
  const auto p = predict_accuracy(groups("z", "x", "y"), m);
  EXPECT_DOUBLE_EQ(p.loce_m, 0.5 + 0.1 + 0.01 + 0.02);
  EXPECT_DOUBLE_EQ(p.orie_deg, 5.0 + 1.0 + 0.2 + 0.4);
}

TEST(PredictAccuracy, MissingPairIsCoverageError) {
  AccuracyModel m;
  m.deltas[{"x", LayerGroup::Backbone}] = {0.01, 0.2};
  EXPECT_THROW(predict_accuracy(groups("x", "x", "x"), m), CoverageError);
}

TEST(PredictAccuracy, PreDeviceDoesNotMatter) {
  for (const auto &pre : {"cpu_devboard", "cpu_zcu104", "dpu", "tpu", "vpu"}) {
    const auto p = predict_accuracy(groups(pre, "dpu", "vpu"), model());
    EXPECT_EQ(p, predict_accuracy(groups("dpu", "dpu", "vpu"), model())) << pre;
  }
}

TEST(PredictAccuracy, MonotoneInEachDelta) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    AccuracyModel m;
    m.baseline = {u(rng), 10 * u(rng)};
    for (auto d : {"a", "b"})
      for (auto g : {LayerGroup::Backbone, LayerGroup::Head})
        m.deltas[{d, g}] = {u(rng), u(rng)};
    const auto asg = groups("a", rng() & 1 ? "a" : "b", rng() & 1 ? "a" : "b");
    const auto before = predict_accuracy(asg, m);
    auto bigger = m;
    auto &d = bigger.deltas[{asg.at(LayerGroup::Head), LayerGroup::Head}];
    d.loce_m += u(rng);
    d.orie_deg += u(rng);
    const auto after = predict_accuracy(asg, bigger);
    EXPECT_GE(after.loce_m, before.loce_m);
    EXPECT_GE(after.orie_deg, before.orie_deg);
  }
}

TEST(CalibrateAccuracy, EmptyRowsRejected) {
  EXPECT_THROW(calibrate_accuracy(std::vector<AccuracyRow>{}, {0.63, 7.2}), CalibrationError);
}

TEST(CalibrateAccuracy, SingleDeviceRowsSplitThirtySeventy) {
  const auto rows = accuracy_rows(false);
  const auto fit = calibrate_accuracy(rows, {0.63, 7.20});
  for (const auto &r : fit.residuals) {
    EXPECT_NEAR(r.residual.loce_m, 0.0, 1e-6) << r.label;
    EXPECT_NEAR(r.residual.orie_deg, 0.0, 1e-6) << r.label;
  }
  // The offset absorbs the shared part; the rest is split 30/70.
  const AccuracyMetrics start = fit.model.start();
  for (const auto &r : rows) {
    const std::string dev = r.assignment.at(LayerGroup::Backbone);
    const auto &b = fit.model.deltas.at({dev, LayerGroup::Backbone});
    const auto &h = fit.model.deltas.at({dev, LayerGroup::Head});
    const double total = r.measured.orie_deg - start.orie_deg;
    EXPECT_NEAR(b.orie_deg, 0.3 * total, 1e-4) << dev;
    EXPECT_NEAR(h.orie_deg, 0.7 * total, 1e-4) << dev;
  }
}

TEST(CalibrateAccuracy, MixedRowIdentifiesDpuBackboneAndVpuHead) {
  const auto &fit = table1().acc;
  for (const auto &r : fit.residuals) {
    EXPECT_LE(std::fabs(r.residual.loce_m), 0.02) << r.label;
    EXPECT_LE(std::fabs(r.residual.orie_deg), 0.2) << r.label;
  }
  // MPAI row differs from the all-DPU row only by swapping HEAD, so the
  // fitted HEAD deltas must explain the difference up to the prior's pull.
  const auto &m = fit.model;
  const double diff = m.deltas.at({"dpu", LayerGroup::Head}).orie_deg -
                      m.deltas.at({"vpu", LayerGroup::Head}).orie_deg;
  EXPECT_NEAR(diff, 9.29 - 7.32, 1e-4);
}

TEST(CalibrateAccuracy, UnidentifiablePairsListed) {
  std::vector<AccuracyRow> rows{{"mixed", groups("a", "a", "b"), {0.7, 8.0}}};
  try {
    calibrate_accuracy(rows, {0.63, 7.2});
    FAIL();
  } catch (const CalibrationError &e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("a/BACKBONE"), std::string::npos) << msg;
    EXPECT_NE(msg.find("b/HEAD"), std::string::npos) << msg;
  }
}

TEST(CalibrateAccuracy, DeltasAreNonNegative) {
  for (const auto &[k, d] : model().deltas) {
    EXPECT_GE(d.loce_m, 0.0);
    EXPECT_GE(d.orie_deg, 0.0);
  }
  EXPECT_GE(model().model_offset.loce_m, 0.0);
  EXPECT_GE(model().model_offset.orie_deg, 0.0);
}

TEST(Nnls, MatchesSupportEnumeration) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 3 + static_cast<int>(rng() % 6), n = 1 + static_cast<int>(rng() % 5);
    std::vector<double> A(m * n), b(m);
    for (auto &v : A)
      v = nd(rng);
    for (auto &v : b)
      v = nd(rng);
    const auto x = solve_nnls(A, b, n);
    const auto ref = oracle::nnls_brute(A, b, m, n);
    auto cost = [&](const std::vector<double> &z) {
      double c = 0;
      for (int i = 0; i < m; ++i) {
        double r = -b[i];
        for (int j = 0; j < n; ++j)
          r += A[i * n + j] * z[j];
        c += r * r;
      }
      return c;
    };
    for (double v : x)
      ASSERT_GE(v, 0.0);
    ASSERT_NEAR(cost(x), cost(ref), 1e-9 * (1 + cost(ref))) << trial;
  }
}

TEST(AccuracyModelJson, RoundTripAndValidation) {
  const auto m2 = load_accuracy_model(serialize_accuracy_model(model()));
  EXPECT_EQ(m2.baseline, model().baseline);
  EXPECT_EQ(m2.model_offset, model().model_offset);
  EXPECT_EQ(m2.deltas, model().deltas);
  EXPECT_THROW(load_accuracy_model(R"({"baseline": {"loce_m": 0.6, "orie_deg": 7},
     "model_offset": {"loce_m": 0, "orie_deg": 0},
     "deltas": [{"device": "x", "group": "HEAD", "loce_m": -1, "orie_deg": 0}]})"),
               Error);
  EXPECT_THROW(load_accuracy_model(R"({"baseline": {"loce_m": 0.6, "orie_deg": 7},
     "model_offset": {"loce_m": 0, "orie_deg": 0},
     "deltas": [{"device": "x", "group": "PRE", "loce_m": 0, "orie_deg": 0}]})"),
               Error);
}

TEST(PerLayerAccuracy, SharesFollowOpsAndSumToGroupDelta) {
  const auto &g = table1().graph;
  double sum = 0.0;
  for (const auto &id : g.group_layers(LayerGroup::Head))
    sum += layer_accuracy_share(g, id);
  EXPECT_NEAR(sum, 1.0, 1e-12);
  // Homogeneous assignment reproduces the group-level prediction.
  const auto ga = groups("dpu", "dpu", "vpu");
  const auto per = predict_accuracy_per_layer(g, expand(g, ga), model());
  const auto grp = predict_accuracy(ga, model());
  EXPECT_NEAR(per.loce_m, grp.loce_m, 1e-12);
  EXPECT_NEAR(per.orie_deg, grp.orie_deg, 1e-12);
}

TEST(GroupView, SplitGroupIsContractError) {
  const auto &g = table1().graph;
  auto a = expand(g, groups("dpu", "dpu", "dpu"));
  a.at(g.group_layers(LayerGroup::Head).front()) = "vpu";
  EXPECT_THROW(group_view(g, a), ContractError);
  EXPECT_EQ(group_view(g, expand(g, groups("dpu", "tpu", "vpu"))), groups("dpu", "tpu", "vpu"));
}
