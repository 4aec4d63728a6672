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
// Builders and shared fixtures for the unit tests.
#ifndef MPAI_TESTS_HELPERS_HPP
#define MPAI_TESTS_HELPERS_HPP

#include "mpai/calibrate.hpp"
#include "mpai/partitioner.hpp"
#include "mpai/simulator.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpai::test {

inline std::filesystem::path data_dir() { return MPAI_DATA_DIR; }
inline std::filesystem::path data(const std::string &rel) { return data_dir() / rel; }

inline Layer conv(std::string id, std::vector<std::string> in, std::vector<std::int64_t> out,
                  std::int64_t k, std::int64_t cin, std::int64_t cout,
                  LayerGroup g = LayerGroup::Backbone, std::int64_t groups = 1) {
  ConvParams p;
  p.kernel_h = p.kernel_w = k;
  p.in_channels = cin;
  p.out_channels = cout;
  p.groups = groups;
  return Layer{std::move(id), p, std::move(in), TensorShape{std::move(out)}, g};
}

inline Layer fc(std::string id, std::vector<std::string> in, std::int64_t fin, std::int64_t fout,
                LayerGroup g = LayerGroup::Head) {
  return Layer{std::move(id), FullyConnectedParams{fin, fout}, std::move(in),
               TensorShape{{fout}}, g};
}

inline Layer add(std::string id, std::vector<std::string> in, std::vector<std::int64_t> out,
                 LayerGroup g = LayerGroup::Backbone) {
  return Layer{std::move(id), ElementwiseAddParams{}, std::move(in), TensorShape{std::move(out)},
               g};
}

inline Layer act(std::string id, std::vector<std::string> in, std::vector<std::int64_t> out,
                 LayerGroup g = LayerGroup::Backbone) {
  return Layer{std::move(id), ActivationParams{}, std::move(in), TensorShape{std::move(out)}, g};
}

inline Layer resample(std::string id, std::vector<std::int64_t> out) {
  return Layer{std::move(id), ResampleParams{}, {"input"}, TensorShape{std::move(out)},
               LayerGroup::Pre};
}

inline DeviceProfile device(std::string name, Precision p, double conv, double fc, double other,
                            double overhead = 0.0, double preproc = 0.0, double pa = 1.0,
                            double pi = 0.5) {
  DeviceProfile d;
  d.name = std::move(name);
  d.native_precision = p;
  d.rate.conv = conv;
  d.rate.fc = fc;
  d.rate.other = other;
  d.invocation_overhead_s = overhead;
  d.preproc_s = preproc;
  d.power_active_w = pa;
  d.power_idle_w = pi;
  return d;
}

inline LinkProfile link(std::string src, std::string dst, double bw, double lat) {
  return LinkProfile{std::move(src), std::move(dst), bw, lat};
}

/// Links in both directions between every pair of devices.
inline std::vector<LinkProfile> full_mesh(const std::vector<DeviceProfile> &devs, double bw,
                                          double lat) {
  std::vector<LinkProfile> out;
  for (const auto &a : devs)
    for (const auto &b : devs)
      if (a.name != b.name)
        out.push_back(link(a.name, b.name, bw, lat));
  return out;
}

/// Table 1 inputs fitted once per test binary.
struct Table1 {
  NetworkGraph graph;
  PlatformSkeleton skeleton;
  MeasurementSet set;
  FitResult fit;
  AccuracyFit acc;
};

inline const Table1 &table1() {
  static const Table1 t = [] {
    auto g = load_graph_file(data("graphs/ursonet_proxy.json"));
    auto sk = load_skeleton_file(data("platforms/table1_skeleton.json"));
    auto set = load_measurements_file(data("measurements/table1.json"));
    auto fit = fit_profiles(set.rows, g, sk);
    auto acc = calibrate_accuracy(set);
    return Table1{std::move(g), std::move(sk), std::move(set), std::move(fit), std::move(acc)};
  }();
  return t;
}

inline const MeasurementRow &row(const std::string &prefix) {
  for (const auto &r : table1().set.rows)
    if (r.label.rfind(prefix, 0) == 0)
      return r;
  throw std::runtime_error("no row " + prefix);
}

inline GroupAssignment groups(const std::string &pre, const std::string &bb,
                              const std::string &head) {
  return {{LayerGroup::Pre, pre}, {LayerGroup::Backbone, bb}, {LayerGroup::Head, head}};
}

inline double rel_err(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

} // namespace mpai::test

#endif // MPAI_TESTS_HELPERS_HPP
