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
#include "mpai/devmodel.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace mpai {

using detail::json;

std::optional<double> ClassRates::get(LayerClass c) const {
  switch (c) {
  case LayerClass::Conv:
    return conv;
  case LayerClass::FC:
    return fc;
  case LayerClass::Other:
    return other;
  }
  return std::nullopt;
}

void ClassRates::set(LayerClass c, double rate) {
  switch (c) {
  case LayerClass::Conv:
    conv = rate;
    break;
  case LayerClass::FC:
    fc = rate;
    break;
  case LayerClass::Other:
    other = rate;
    break;
  }
}

Platform::Platform(std::vector<DeviceProfile> devices, std::vector<LinkProfile> links,
                   std::string host)
    : devices_(std::move(devices)), links_(std::move(links)), host_(std::move(host)) {
  revalidate();
}

void Platform::revalidate() {
  std::sort(devices_.begin(), devices_.end(),
            [](const DeviceProfile &a, const DeviceProfile &b) { return a.name < b.name; });
  if (devices_.empty())
    throw ValidationError("platform: at least one device is required");
  std::set<std::string> names;
  for (const auto &d : devices_) {
    const std::string ctx = "device '" + d.name + "'";
    if (d.name.empty())
      throw ValidationError("platform: device names must be non-empty");
    if (!names.insert(d.name).second)
      throw ValidationError(ctx + ": duplicate device name");
    for (auto c : {LayerClass::Conv, LayerClass::FC, LayerClass::Other})
      if (auto r = d.rate.get(c); r && !(*r > 0.0))
        throw ValidationError(ctx + ": " + std::string(to_string(c)) + " rate must be > 0");
    if (!(d.invocation_overhead_s >= 0.0) || !(d.preproc_s >= 0.0))
      throw ValidationError(ctx + ": overheads must be >= 0");
    if (!(d.power_idle_w >= 0.0) || !(d.power_active_w >= d.power_idle_w))
      throw ValidationError(ctx + ": power must satisfy active >= idle >= 0");
  }
  if (!names.count(host_))
    throw ValidationError("platform: host '" + host_ + "' is not a declared device");

  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto &l : links_) {
    const std::string ctx = "link " + l.src + "->" + l.dst;
    if (!names.count(l.src) || !names.count(l.dst))
      throw ValidationError(ctx + ": endpoint is not a declared device");
    if (l.src == l.dst)
      throw ValidationError(ctx + ": links must join distinct devices");
    if (!(l.bandwidth_Bps > 0.0) || !(l.latency_s >= 0.0))
      throw ValidationError(ctx + ": bandwidth must be > 0 and latency >= 0");
    if (!pairs.emplace(l.src, l.dst).second)
      throw ValidationError(ctx + ": duplicate link");
  }
  for (const auto &a : devices_)
    for (const auto &b : devices_)
      if (a.name != b.name) {
        try {
          route(a.name, b.name);
        } catch (const ConfigError &e) {
          throw ValidationError(std::string("platform: ") + e.what());
        }
      }
}

bool Platform::has_device(std::string_view name) const {
  return std::any_of(devices_.begin(), devices_.end(),
                     [&](const DeviceProfile &d) { return d.name == name; });
}

std::size_t Platform::device_index(std::string_view name) const {
  for (std::size_t i = 0; i < devices_.size(); ++i)
    if (devices_[i].name == name)
      return i;
  throw ConfigError("platform has no device '" + std::string(name) + "'");
}

const DeviceProfile &Platform::device(std::string_view name) const {
  return devices_[device_index(name)];
}

DeviceProfile &Platform::mutable_device(std::string_view name) {
  return devices_[device_index(name)];
}

const LinkProfile *Platform::find_link(std::string_view src, std::string_view dst) const {
  for (const auto &l : links_)
    if (l.src == src && l.dst == dst)
      return &l;
  return nullptr;
}

LinkProfile &Platform::mutable_link(std::string_view src, std::string_view dst) {
  for (auto &l : links_)
    if (l.src == src && l.dst == dst)
      return l;
  throw ConfigError("platform has no link " + std::string(src) + "->" + std::string(dst));
}

std::vector<const LinkProfile *> Platform::route(std::string_view src,
                                                 std::string_view dst) const {
  if (src == dst)
    return {};
  if (const auto *l = find_link(src, dst))
    return {l};
  if (src != host_ && dst != host_) {
    const auto *up = find_link(src, host_);
    const auto *down = find_link(host_, dst);
    if (up && down)
      return {up, down};
  }
  throw ConfigError("no transfer path from '" + std::string(src) + "' to '" +
                    std::string(dst) + "' (neither direct nor via host '" + host_ + "')");
}

double layer_compute_latency(const Layer &layer, const DeviceProfile &device) {
  const LayerClass c = layer_class(layer);
  auto rate = device.rate.get(c);
  if (!rate)
    throw ConfigError("device '" + device.name + "' has no " + std::string(to_string(c)) +
                      " rate for layer '" + layer.id + "'");
  return static_cast<double>(op_count(layer)) / *rate;
}

double transfer_latency(const TensorShape &shape, Precision precision,
                        const LinkProfile &link) {
  return link.latency_s + static_cast<double>(shape.byte_size(precision)) / link.bandwidth_Bps;
}

double route_transfer_latency(const TensorShape &shape, Precision precision,
                              std::span<const LinkProfile *const> route) {
  double t = 0.0;
  for (const auto *l : route)
    t += transfer_latency(shape, precision, *l);
  return t;
}

double energy(std::span<const DeviceBusy> segments, const Platform &platform,
              double makespan) {
  if (!(makespan >= 0.0))
    throw ContractError("energy: makespan must be >= 0");
  std::vector<double> busy(platform.devices().size(), 0.0);
  for (const auto &s : segments) {
    if (!(s.seconds >= 0.0))
      throw ContractError("energy: busy time for '" + s.device + "' must be >= 0");
    busy[platform.device_index(s.device)] += s.seconds;
  }
  double joules = 0.0;
  for (std::size_t i = 0; i < busy.size(); ++i) {
    const auto &d = platform.devices()[i];
    // Busy sums and the makespan are accumulated in different orders.
    const double slack = 1e-12 * makespan + 1e-15;
    if (busy[i] > makespan + slack)
      throw ContractError("energy: device '" + d.name + "' busy " +
                          std::to_string(busy[i]) + " s exceeds makespan " +
                          std::to_string(makespan) + " s");
    const double b = std::min(busy[i], makespan);
    joules += d.power_active_w * b + d.power_idle_w * (makespan - b);
  }
  return joules;
}

// ---------------------------------------------------------------------------
// Document format

namespace {

DeviceProfile parse_device(const json &j) {
  std::string name = j.is_object() && j.contains("name") && j["name"].is_string()
                         ? j["name"].get<std::string>()
                         : "?";
  const std::string ctx = "device '" + name + "'";
  detail::check_fields(j, {"name", "precision", "rates", "overhead_s", "preproc_s", "power_w"},
                       ctx);
  DeviceProfile d;
  d.name = detail::get_string(j, "name", ctx);
  d.native_precision = parse_precision(detail::get_string(j, "precision", ctx));
  const json &rates = detail::require(j, "rates", ctx);
  detail::check_fields(rates, {"conv", "fc", "other"}, ctx + " rates");
  for (auto c : {LayerClass::Conv, LayerClass::FC, LayerClass::Other}) {
    auto key = to_string(c);
    if (rates.contains(key))
      d.rate.set(c, detail::get_number(rates, key, ctx + " rates"));
  }
  d.invocation_overhead_s = j.contains("overhead_s") ? detail::get_number(j, "overhead_s", ctx) : 0.0;
  d.preproc_s = j.contains("preproc_s") ? detail::get_number(j, "preproc_s", ctx) : 0.0;
  if (j.contains("power_w")) {
    const json &p = j["power_w"];
    detail::check_fields(p, {"active", "idle"}, ctx + " power_w");
    d.power_active_w = detail::get_number(p, "active", ctx + " power_w");
    d.power_idle_w = detail::get_number(p, "idle", ctx + " power_w");
  }
  return d;
}

LinkProfile parse_link(const json &j) {
  detail::check_fields(j, {"src", "dst", "bandwidth_Bps", "latency_s"}, "link");
  LinkProfile l;
  l.src = detail::get_string(j, "src", "link");
  l.dst = detail::get_string(j, "dst", "link");
  const std::string ctx = "link " + l.src + "->" + l.dst;
  l.bandwidth_Bps = detail::get_number(j, "bandwidth_Bps", ctx);
  l.latency_s = j.contains("latency_s") ? detail::get_number(j, "latency_s", ctx) : 0.0;
  return l;
}

} // namespace

Platform load_platform(std::string_view document) {
  json doc = detail::parse_document(document, "platform document");
  detail::check_fields(doc, {"devices", "links", "host", "notes"}, "platform document");
  const json &devs = detail::require(doc, "devices", "platform document");
  if (!devs.is_array())
    throw ParseError("platform document: devices must be an array");
  std::vector<DeviceProfile> devices;
  for (const auto &d : devs)
    devices.push_back(parse_device(d));
  std::vector<LinkProfile> links;
  if (doc.contains("links")) {
    if (!doc["links"].is_array())
      throw ParseError("platform document: links must be an array");
    for (const auto &l : doc["links"])
      links.push_back(parse_link(l));
  }
  return Platform(std::move(devices), std::move(links),
                  detail::get_string(doc, "host", "platform document"));
}

Platform load_platform_file(const std::filesystem::path &path) {
  return load_platform(read_text_file(path));
}

std::string serialize_platform(const Platform &platform) {
  json doc;
  json devs = json::array();
  for (const auto &d : platform.devices()) {
    json j;
    j["name"] = d.name;
    j["precision"] = std::string(to_string(d.native_precision));
    json rates = json::object();
    for (auto c : {LayerClass::Conv, LayerClass::FC, LayerClass::Other})
      if (auto r = d.rate.get(c))
        rates[std::string(to_string(c))] = *r;
    j["rates"] = rates;
    j["overhead_s"] = d.invocation_overhead_s;
    j["preproc_s"] = d.preproc_s;
    j["power_w"] = {{"active", d.power_active_w}, {"idle", d.power_idle_w}};
    devs.push_back(std::move(j));
  }
  doc["devices"] = std::move(devs);
  json links = json::array();
  for (const auto &l : platform.links())
    links.push_back({{"src", l.src},
                     {"dst", l.dst},
                     {"bandwidth_Bps", l.bandwidth_Bps},
                     {"latency_s", l.latency_s}});
  doc["links"] = std::move(links);
  doc["host"] = platform.host();
  return doc.dump(2);
}

} // namespace mpai
