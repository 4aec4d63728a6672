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
#include "mpai/simulator.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

namespace mpai {

using detail::json;

std::string_view to_string(TraceKind k) {
  switch (k) {
  case TraceKind::Preproc:
    return "preproc";
  case TraceKind::Compute:
    return "compute";
  case TraceKind::Transfer:
    return "transfer";
  }
  return "?";
}

void validate_assignment(const NetworkGraph &graph, const Assignment &assignment,
                         const Platform &platform) {
  for (const auto &[id, dev] : assignment) {
    if (!graph.contains(id))
      throw ContractError("assignment names unknown layer '" + id + "'");
    if (!platform.has_device(dev))
      throw ConfigError("assignment maps layer '" + id + "' to unknown device '" + dev + "'");
  }
  std::string pre_dev;
  for (const auto &id : graph.topological_order()) {
    auto it = assignment.find(id);
    if (it == assignment.end())
      throw ContractError("assignment does not cover layer '" + id + "'");
    if (graph.layer(id).group != LayerGroup::Pre)
      continue;
    if (pre_dev.empty())
      pre_dev = it->second;
    else if (pre_dev != it->second)
      throw ContractError("PRE layers must share one device ('" + pre_dev + "' vs '" +
                          it->second + "' for layer '" + id + "')");
  }
}

namespace {

bool group_homogeneous(const NetworkGraph &graph, const Assignment &assignment) {
  std::map<LayerGroup, std::string> seen;
  for (const auto &l : graph.layers()) {
    auto [it, inserted] = seen.emplace(l.group, assignment.at(l.id));
    if (!inserted && it->second != assignment.at(l.id))
      return false;
  }
  return true;
}

} // namespace

ScheduleReport simulate(const NetworkGraph &graph, const Assignment &assignment,
                        const Platform &platform, const AccuracyModel *acc_model) {
  validate_assignment(graph, assignment, platform);
  const auto &devices = platform.devices();
  ScheduleReport rep;
  std::vector<double> busy(devices.size(), 0.0), inbound(devices.size(), 0.0);

  // Devices holding each produced tensor.
  std::unordered_map<std::string, std::set<std::string>> present;
  double clock = 0.0;
  double inference = 0.0;

  const auto pre_layers = graph.group_layers(LayerGroup::Pre);
  if (!pre_layers.empty()) {
    const std::string &dev = assignment.at(pre_layers.front());
    const double t = platform.device(dev).preproc_s;
    SegmentTrace tr{dev, TraceKind::Preproc, pre_layers, clock, clock + t, {}, false};
    clock += t;
    busy[platform.device_index(dev)] += t;
    rep.traces.push_back(std::move(tr));
    for (const auto &id : pre_layers)
      present[id].insert(dev);
  }

  const auto &order = graph.topological_order();
  std::size_t i = 0;
  while (i < order.size()) {
    if (graph.layer(order[i]).group == LayerGroup::Pre) {
      ++i;
      continue;
    }
    const std::string &dev = assignment.at(order[i]);
    std::size_t j = i;
    while (j < order.size() && graph.layer(order[j]).group != LayerGroup::Pre &&
           assignment.at(order[j]) == dev)
      ++j;
    const std::vector<std::string> seg(order.begin() + i, order.begin() + j);
    const std::set<std::string> inside(seg.begin(), seg.end());
    const std::size_t di = platform.device_index(dev);

    // Missing inputs, ordered by producer position then id.
    std::vector<std::string> needed;
    for (const auto &id : seg)
      for (const auto &in : graph.layer(id).inputs) {
        if (in == kInputId || inside.count(in) || present[in].count(dev))
          continue;
        if (std::find(needed.begin(), needed.end(), in) == needed.end())
          needed.push_back(in);
      }
    std::sort(needed.begin(), needed.end(), [&](const std::string &a, const std::string &b) {
      const int pa = graph.position(a), pb = graph.position(b);
      return pa != pb ? pa < pb : a < b;
    });
    for (const auto &tensor : needed) {
      const std::string &src = assignment.at(tensor);
      const auto route = platform.route(src, dev);
      const double t = route_transfer_latency(graph.tensor_shape(tensor),
                                              platform.device(src).native_precision, route);
      const bool delivery = graph.layer(tensor).group == LayerGroup::Pre;
      rep.traces.push_back({dev, TraceKind::Transfer, {tensor}, clock, clock + t, src, delivery});
      clock += t;
      if (!delivery)
        inference += t;
      inbound[di] += t;
      present[tensor].insert(dev);
    }

    const DeviceProfile &prof = devices[di];
    const double start = clock;
    clock += prof.invocation_overhead_s;
    for (const auto &id : seg)
      clock += layer_compute_latency(graph.layer(id), prof);
    rep.traces.push_back({dev, TraceKind::Compute, seg, start, clock, {}, false});
    inference += clock - start;
    busy[di] += clock - start;
    for (const auto &id : seg)
      present[id].insert(dev);
    i = j;
  }

  rep.inference_latency_s = inference;
  rep.total_latency_s = clock;
  double max_stage = 0.0;
  std::vector<DeviceBusy> segments;
  for (std::size_t d = 0; d < devices.size(); ++d) {
    rep.stages.push_back({devices[d].name, busy[d], busy[d] + inbound[d]});
    max_stage = std::max(max_stage, busy[d] + inbound[d]);
    segments.push_back({devices[d].name, busy[d]});
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  rep.fps_sequential = clock > 0.0 ? 1.0 / clock : kInf;
  rep.fps_pipelined = max_stage > 0.0 ? 1.0 / max_stage : kInf;
  rep.energy_j = energy(segments, platform, clock);
  if (acc_model)
    rep.accuracy = group_homogeneous(graph, assignment)
                       ? predict_accuracy(group_view(graph, assignment), *acc_model)
                       : predict_accuracy_per_layer(graph, assignment, *acc_model);
  return rep;
}

FpsPair throughput(const NetworkGraph &graph, const Assignment &assignment,
                   const Platform &platform) {
  const auto rep = simulate(graph, assignment, platform);
  return {rep.fps_sequential, rep.fps_pipelined};
}

Assignment single_device_assignment(const NetworkGraph &graph, const std::string &device) {
  Assignment a;
  for (const auto &l : graph.layers())
    a[l.id] = device;
  return a;
}

namespace {
json finite_or_null(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}
} // namespace

std::string serialize_report(const ScheduleReport &r) {
  json doc;
  doc["inference_latency_s"] = r.inference_latency_s;
  doc["total_latency_s"] = r.total_latency_s;
  doc["fps_sequential"] = finite_or_null(r.fps_sequential);
  doc["fps_pipelined"] = finite_or_null(r.fps_pipelined);
  doc["energy_j"] = r.energy_j;
  if (r.accuracy)
    doc["accuracy"] = {{"loce_m", r.accuracy->loce_m}, {"orie_deg", r.accuracy->orie_deg}};
  json stages = json::array();
  for (const auto &s : r.stages)
    stages.push_back({{"device", s.device}, {"busy_s", s.busy_s}, {"stage_s", s.stage_s}});
  doc["stages"] = std::move(stages);
  json traces = json::array();
  for (const auto &t : r.traces) {
    json j{{"device", t.device},
           {"kind", std::string(to_string(t.kind))},
           {"layers", t.layer_ids},
           {"start_s", t.start_s},
           {"end_s", t.end_s}};
    if (t.kind == TraceKind::Transfer) {
      j["src_device"] = t.src_device;
      j["input_delivery"] = t.input_delivery;
    }
    traces.push_back(std::move(j));
  }
  doc["traces"] = std::move(traces);
  return doc.dump(2);
}

std::string traces_csv(const ScheduleReport &r) {
  std::ostringstream os;
  os << "device,kind,start_s,end_s,layers\n";
  char buf[64];
  for (const auto &t : r.traces) {
    os << (t.kind == TraceKind::Transfer ? t.src_device + "->" + t.device : t.device) << ','
       << to_string(t.kind) << ',';
    std::snprintf(buf, sizeof buf, "%.17g", t.start_s);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", t.end_s);
    os << buf << ',';
    for (std::size_t k = 0; k < t.layer_ids.size(); ++k)
      os << (k ? ";" : "") << t.layer_ids[k];
    os << '\n';
  }
  return os.str();
}

} // namespace mpai
