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
// Single-frame execution timeline of an assignment.
//
// The clock advances strictly sequentially: the PRE device's fixed
// pre-processing cost first, then for every segment the transfers of the
// tensors it is missing, its invocation overhead, and its layers in
// topological order. The raw network input is available on every device.
#ifndef MPAI_SIMULATOR_HPP
#define MPAI_SIMULATOR_HPP

#include "mpai/accmodel.hpp"
#include "mpai/devmodel.hpp"
#include "mpai/netgraph.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mpai {

enum class TraceKind { Preproc, Compute, Transfer };
std::string_view to_string(TraceKind k);

struct SegmentTrace {
  /// Executing device; the destination for transfers.
  std::string device;
  TraceKind kind = TraceKind::Compute;
  /// Layers run by a compute or preproc trace; the moved tensor for transfers.
  std::vector<std::string> layer_ids;
  double start_s = 0.0;
  double end_s = 0.0;
  /// Transfers only.
  std::string src_device;
  /// Transfers only: hands the PRE output to compute (not inference time).
  bool input_delivery = false;

  double duration() const { return end_s - start_s; }
};

struct StageTime {
  std::string device;
  double busy_s = 0.0;     ///< preproc plus compute segments
  double stage_s = 0.0;    ///< busy plus inbound transfers
};

struct ScheduleReport {
  double inference_latency_s = 0.0;
  double total_latency_s = 0.0;
  double fps_sequential = 0.0;
  double fps_pipelined = 0.0;
  double energy_j = 0.0;
  std::optional<AccuracyMetrics> accuracy;
  std::vector<SegmentTrace> traces;
  /// One entry per platform device, in platform order.
  std::vector<StageTime> stages;
};

/// Checks that every layer is assigned to a platform device, that no unknown
/// layer is named, and that the PRE group sits on one device.
void validate_assignment(const NetworkGraph &graph, const Assignment &assignment,
                         const Platform &platform);

/// Simulates one frame. With an accuracy model the report carries a
/// prediction: group level when every group sits on one device, otherwise
/// per layer.
ScheduleReport simulate(const NetworkGraph &graph, const Assignment &assignment,
                        const Platform &platform, const AccuracyModel *acc_model = nullptr);

struct FpsPair {
  double sequential = 0.0;
  double pipelined = 0.0;
};

FpsPair throughput(const NetworkGraph &graph, const Assignment &assignment,
                   const Platform &platform);

/// Every layer on one device.
Assignment single_device_assignment(const NetworkGraph &graph, const std::string &device);

std::string serialize_report(const ScheduleReport &report);
/// CSV with columns device,kind,start_s,end_s,layers.
std::string traces_csv(const ScheduleReport &report);

} // namespace mpai

#endif // MPAI_SIMULATOR_HPP
