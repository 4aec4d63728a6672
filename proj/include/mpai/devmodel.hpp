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
#ifndef MPAI_DEVMODEL_HPP
#define MPAI_DEVMODEL_HPP

#include "mpai/common.hpp"
#include "mpai/netgraph.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mpai {

/// Effective ops/second per layer class. A class may be left unset; asking a
/// device to run a layer of an unset class is a ConfigError.
struct ClassRates {
  std::optional<double> conv, fc, other;

  std::optional<double> get(LayerClass c) const;
  void set(LayerClass c, double rate);
  bool operator==(const ClassRates &) const = default;
};

struct DeviceProfile {
  std::string name;
  Precision native_precision = Precision::FP32;
  ClassRates rate;
  /// Charged once per contiguous segment launched on the device.
  double invocation_overhead_s = 0.0;
  /// Fixed pre-processing cost when this device's host prepares the input.
  double preproc_s = 0.0;
  double power_active_w = 0.0;
  double power_idle_w = 0.0;

  bool operator==(const DeviceProfile &) const = default;
};

/// Directed interconnect between two devices.
struct LinkProfile {
  std::string src, dst;
  double bandwidth_Bps = 1.0;
  double latency_s = 0.0;

  bool operator==(const LinkProfile &) const = default;
};

/// Devices, links and the host device that performs I/O.
class Platform {
public:
  Platform() = default;
  /// Validates all invariants; throws ValidationError.
  Platform(std::vector<DeviceProfile> devices, std::vector<LinkProfile> links,
           std::string host);

  /// Devices sorted by name.
  const std::vector<DeviceProfile> &devices() const { return devices_; }
  const std::vector<LinkProfile> &links() const { return links_; }
  const std::string &host() const { return host_; }

  bool has_device(std::string_view name) const;
  const DeviceProfile &device(std::string_view name) const;
  /// Index into devices().
  std::size_t device_index(std::string_view name) const;
  const LinkProfile *find_link(std::string_view src, std::string_view dst) const;

  /// Links crossed from src to dst: empty for src == dst, the direct link when
  /// present, otherwise src -> host -> dst. Throws ConfigError if unresolvable.
  std::vector<const LinkProfile *> route(std::string_view src, std::string_view dst) const;

  /// Mutable access for calibration; call revalidate() afterwards.
  DeviceProfile &mutable_device(std::string_view name);
  LinkProfile &mutable_link(std::string_view src, std::string_view dst);
  void revalidate();

private:
  std::vector<DeviceProfile> devices_;
  std::vector<LinkProfile> links_;
  std::string host_;
};

/// op_count / rate[class]. Invocation overhead is charged per segment elsewhere.
double layer_compute_latency(const Layer &layer, const DeviceProfile &device);

/// link.latency + byte_size / bandwidth.
double transfer_latency(const TensorShape &shape, Precision precision,
                        const LinkProfile &link);

/// Sum of transfer_latency over a route's hops; 0 for an empty route.
double route_transfer_latency(const TensorShape &shape, Precision precision,
                              std::span<const LinkProfile *const> route);

/// Busy time attributed to one device.
struct DeviceBusy {
  std::string device;
  double seconds = 0.0;
};

/// Sum over platform devices of active power x busy + idle power x (makespan -
/// busy). Entries for the same device accumulate. Throws ContractError when a
/// device's busy time exceeds the makespan.
double energy(std::span<const DeviceBusy> segments, const Platform &platform,
              double makespan);

Platform load_platform(std::string_view document);
Platform load_platform_file(const std::filesystem::path &path);
std::string serialize_platform(const Platform &platform);

} // namespace mpai

#endif // MPAI_DEVMODEL_HPP
