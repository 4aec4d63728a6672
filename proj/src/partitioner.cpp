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
#include "mpai/partitioner.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

namespace mpai {

using detail::json;

void Constraints::validate() const {
  for (const auto &[name, v] : {std::pair{"max_loce", max_loce}, std::pair{"max_orie", max_orie},
                                std::pair{"max_energy", max_energy}})
    if (v && !(*v > 0.0 && std::isfinite(*v)))
      throw ContractError(std::string("constraint ") + name + " must be a finite value > 0");
}

bool Constraints::satisfied_by(const AccuracyMetrics &acc, double energy_j) const {
  return (!max_loce || acc.loce_m <= *max_loce) && (!max_orie || acc.orie_deg <= *max_orie) &&
         (!max_energy || energy_j <= *max_energy);
}

Constraints load_constraints(std::string_view document) {
  json doc = detail::parse_document(document, "constraints");
  detail::check_fields(doc, {"max_loce", "max_orie", "max_energy", "group_homogeneous"},
                       "constraints");
  Constraints c;
  if (doc.contains("max_loce"))
    c.max_loce = detail::get_number(doc, "max_loce", "constraints");
  if (doc.contains("max_orie"))
    c.max_orie = detail::get_number(doc, "max_orie", "constraints");
  if (doc.contains("max_energy"))
    c.max_energy = detail::get_number(doc, "max_energy", "constraints");
  if (doc.contains("group_homogeneous")) {
    if (!doc["group_homogeneous"].is_boolean())
      throw ParseError("constraints: group_homogeneous must be a boolean");
    c.group_homogeneous = doc["group_homogeneous"].get<bool>();
  }
  c.validate();
  return c;
}

namespace {
std::string infeasible_message(const InfeasibilityReport &r) {
  std::string msg = "no assignment satisfies the constraints; binding:";
  for (const auto &b : r.binding)
    msg += " " + b;
  return msg;
}
} // namespace

InfeasibleError::InfeasibleError(InfeasibilityReport report)
    : Error(infeasible_message(report)), report_(std::move(report)) {}

// ---------------------------------------------------------------------------
// Decision units

namespace {

/// Tensors produced at or before topological index i and consumed after it.
std::vector<std::string> crossing(const NetworkGraph &graph, std::size_t i) {
  const auto &order = graph.topological_order();
  std::vector<std::string> out;
  for (std::size_t p = 0; p <= i; ++p)
    for (const auto &c : graph.consumers(order[p]))
      if (static_cast<std::size_t>(graph.position(c)) > i) {
        out.push_back(order[p]);
        break;
      }
  return out;
}

/// A cut after index i is valid when at most the layer at i crosses it.
bool valid_cut(const NetworkGraph &graph, std::size_t i, std::string *incoming) {
  const auto x = crossing(graph, i);
  if (x.size() > 1 || (x.size() == 1 && x[0] != graph.topological_order()[i]))
    return false;
  if (incoming)
    *incoming = x.empty() ? std::string() : x[0];
  return true;
}

} // namespace

std::vector<DecisionUnit> decision_units(const NetworkGraph &graph, bool group_homogeneous) {
  const auto &order = graph.topological_order();
  std::size_t npre = 0;
  while (npre < order.size() && graph.layer(order[npre]).group == LayerGroup::Pre)
    ++npre;
  for (std::size_t i = npre; i < order.size(); ++i)
    if (graph.layer(order[i]).group == LayerGroup::Pre)
      throw ContractError("PRE layer '" + order[i] +
                          "' follows a compute layer; PRE must lead the topological order");

  std::vector<DecisionUnit> units;
  std::string incoming;
  if (npre > 0) {
    units.push_back({{order.begin(), order.begin() + npre}, true, {}});
    if (npre < order.size() && !valid_cut(graph, npre - 1, &incoming))
      throw ContractError("PRE group must hand a single tensor, its last layer's output, to "
                          "the rest of the network");
  }
  if (npre == order.size())
    return units;

  if (group_homogeneous) {
    for (std::size_t i = npre + 1; i < order.size(); ++i)
      if (graph.layer(order[i]).group < graph.layer(order[i - 1]).group)
        throw ContractError("group mode needs groups contiguous in PRE, BACKBONE, HEAD order; "
                            "layer '" + order[i] + "' breaks it");
  }
  std::size_t start = npre;
  for (std::size_t i = npre; i < order.size(); ++i) {
    const bool last = i + 1 == order.size();
    bool cut = last;
    std::string next_incoming;
    if (!last) {
      if (group_homogeneous) {
        if (graph.layer(order[i]).group != graph.layer(order[i + 1]).group) {
          if (!valid_cut(graph, i, &next_incoming))
            throw ContractError("group boundary after layer '" + order[i] +
                                "' is crossed by more than that layer's output");
          cut = true;
        }
      } else {
        cut = valid_cut(graph, i, &next_incoming);
      }
    }
    if (cut) {
      units.push_back({{order.begin() + start, order.begin() + i + 1}, false, incoming});
      incoming = next_incoming;
      start = i + 1;
    }
  }
  return units;
}

Assignment assignment_from_units(const std::vector<DecisionUnit> &units,
                                 const std::vector<std::size_t> &unit_devices,
                                 const Platform &platform) {
  if (units.size() != unit_devices.size())
    throw ContractError("assignment_from_units: one device per unit required");
  Assignment a;
  for (std::size_t u = 0; u < units.size(); ++u)
    for (const auto &id : units[u].layers)
      a[id] = platform.devices().at(unit_devices[u]).name;
  return a;
}

// ---------------------------------------------------------------------------
// Shared cost tables

namespace {

/// Per (unit, device) costs, evaluated in exactly the order simulate() uses.
struct CostTables {
  const std::vector<DecisionUnit> &units;
  const Platform &platform;
  std::size_t nd = 0;
  std::vector<std::vector<std::vector<double>>> compute;          // [u][d] per layer
  std::vector<std::vector<std::vector<AccuracyMetrics>>> acc;     // [u][d] increments
  std::vector<std::vector<std::vector<double>>> transfer;         // [u][src][dst]
  double idle_sum = 0.0;

  CostTables(const NetworkGraph &graph, const std::vector<DecisionUnit> &us, const Platform &p,
             const AccuracyModel &model, bool per_layer)
      : units(us), platform(p), nd(p.devices().size()) {
    const std::size_t nu = units.size();
    compute.assign(nu, std::vector<std::vector<double>>(nd));
    acc.assign(nu, std::vector<std::vector<AccuracyMetrics>>(nd));
    transfer.assign(nu, std::vector<std::vector<double>>(nd, std::vector<double>(nd, 0.0)));
    for (const auto &d : p.devices())
      idle_sum += d.power_idle_w;
    for (std::size_t u = 0; u < nu; ++u) {
      const auto &unit = units[u];
      for (std::size_t d = 0; d < nd; ++d) {
        const auto &dev = p.devices()[d];
        if (unit.pre)
          continue;
        std::vector<LayerGroup> groups_seen;
        for (const auto &id : unit.layers) {
          const Layer &l = graph.layer(id);
          compute[u][d].push_back(layer_compute_latency(l, dev));
          if (per_layer) {
            const auto &delta = model.delta(dev.name, l.group);
            const double share = layer_accuracy_share(graph, id);
            acc[u][d].push_back({delta.loce_m * share, delta.orie_deg * share});
          } else if (std::find(groups_seen.begin(), groups_seen.end(), l.group) ==
                     groups_seen.end()) {
            groups_seen.push_back(l.group);
            acc[u][d].push_back(model.delta(dev.name, l.group));
          }
        }
      }
      if (!unit.incoming.empty())
        for (std::size_t s = 0; s < nd; ++s)
          for (std::size_t t = 0; t < nd; ++t)
            if (s != t) {
              const auto &src = p.devices()[s];
              transfer[u][s][t] = route_transfer_latency(
                  graph.tensor_shape(unit.incoming), src.native_precision,
                  p.route(src.name, p.devices()[t].name));
            }
    }
  }

  struct Step {
    double lat;
    double ebusy;
    AccuracyMetrics acc;
  };

  /// Places unit u on device d after `prev` (ignored for u == 0).
  Step apply(Step s, std::size_t u, std::size_t d, std::size_t prev) const {
    const auto &dev = platform.devices()[d];
    const double active = dev.power_active_w - dev.power_idle_w;
    if (units[u].pre) {
      s.lat += dev.preproc_s;
      s.ebusy += active * dev.preproc_s;
      return s;
    }
    const bool new_segment = u == 0 || units[u - 1].pre || prev != d;
    double seg = 0.0;
    if (new_segment) {
      if (u > 0 && prev != d && !units[u].incoming.empty())
        s.lat += transfer[u][prev][d];
      s.lat += dev.invocation_overhead_s;
      seg += dev.invocation_overhead_s;
    }
    for (double c : compute[u][d]) {
      s.lat += c;
      seg += c;
    }
    s.ebusy += active * seg;
    for (const auto &a : acc[u][d])
      s.acc += a;
    return s;
  }

  double final_energy(const Step &s) const { return s.ebusy + idle_sum * s.lat; }
};

struct Label {
  CostTables::Step st;
  int switches = 0;
  std::vector<std::size_t> path;
};

bool key_less(double lat_a, int sw_a, const std::vector<std::size_t> &pa, double lat_b,
              int sw_b, const std::vector<std::size_t> &pb) {
  if (lat_a != lat_b)
    return lat_a < lat_b;
  if (sw_a != sw_b)
    return sw_a < sw_b;
  return pa < pb;
}

/// a dominates b in every quantity that can influence the final choice.
bool dominates(const Label &a, const Label &b, const Constraints &c) {
  if (!(a.st.lat <= b.st.lat && a.switches <= b.switches && a.path < b.path))
    return false;
  if (c.max_loce && a.st.acc.loce_m > b.st.acc.loce_m)
    return false;
  if (c.max_orie && a.st.acc.orie_deg > b.st.acc.orie_deg)
    return false;
  if (c.max_energy && a.st.ebusy > b.st.ebusy)
    return false;
  return true;
}

bool partial_ok(const Label &l, const Constraints &c, const CostTables &t) {
  if (c.max_loce && l.st.acc.loce_m > *c.max_loce)
    return false;
  if (c.max_orie && l.st.acc.orie_deg > *c.max_orie)
    return false;
  if (c.max_energy && t.final_energy(l.st) > *c.max_energy)
    return false;
  return true;
}

PartitionResult finish(const NetworkGraph &graph, const Platform &platform,
                       const std::vector<DecisionUnit> &units, std::vector<std::size_t> devs,
                       double latency, AccuracyMetrics acc, int switches) {
  PartitionResult r;
  r.assignment = assignment_from_units(units, devs, platform);
  r.unit_devices = std::move(devs);
  r.latency_s = latency;
  r.accuracy = acc;
  r.switches = switches;
  r.energy_j = simulate(graph, r.assignment, platform).energy_j;
  return r;
}

std::optional<PartitionResult> run_dp(const NetworkGraph &graph, const Platform &platform,
                                      const std::vector<DecisionUnit> &units,
                                      const CostTables &t, const AccuracyModel &model,
                                      const Constraints &c) {
  const std::size_t nd = t.nd;
  std::vector<std::vector<Label>> frontier(nd);
  for (std::size_t u = 0; u < units.size(); ++u) {
    std::vector<std::vector<Label>> next(nd);
    for (std::size_t d = 0; d < nd; ++d) {
      std::vector<Label> cand;
      if (u == 0) {
        Label l{t.apply({0.0, 0.0, model.start()}, 0, d, 0), 0, {d}};
        if (partial_ok(l, c, t))
          cand.push_back(std::move(l));
      } else {
        for (std::size_t p = 0; p < nd; ++p)
          for (const auto &prev : frontier[p]) {
            Label l{t.apply(prev.st, u, d, p), prev.switches + (p != d ? 1 : 0), prev.path};
            l.path.push_back(d);
            if (partial_ok(l, c, t))
              cand.push_back(std::move(l));
          }
      }
      std::sort(cand.begin(), cand.end(), [](const Label &a, const Label &b) {
        return key_less(a.st.lat, a.switches, a.path, b.st.lat, b.switches, b.path);
      });
      for (auto &l : cand) {
        bool dominated = false;
        for (const auto &k : next[d])
          if (dominates(k, l, c)) {
            dominated = true;
            break;
          }
        if (!dominated)
          next[d].push_back(std::move(l));
      }
    }
    frontier = std::move(next);
  }
  const Label *best = nullptr;
  for (std::size_t d = 0; d < nd; ++d)
    for (const auto &l : frontier[d]) {
      if (!c.satisfied_by(l.st.acc, t.final_energy(l.st)))
        continue;
      if (!best || key_less(l.st.lat, l.switches, l.path, best->st.lat, best->switches,
                            best->path))
        best = &l;
    }
  if (!best)
    return std::nullopt;
  return finish(graph, platform, units, best->path, best->st.lat, best->st.acc, best->switches);
}

/// Minimum of one additive quantity over all unit placements.
template <class Cost> double min_over_paths(const CostTables &t, Cost cost) {
  const std::size_t nd = t.nd;
  std::vector<double> best(nd, 0.0);
  for (std::size_t u = 0; u < t.units.size(); ++u) {
    std::vector<double> next(nd, std::numeric_limits<double>::infinity());
    for (std::size_t d = 0; d < nd; ++d)
      for (std::size_t p = 0; p < (u == 0 ? 1 : nd); ++p) {
        const auto s = t.apply({0.0, 0.0, AccuracyMetrics{}}, u, d, u == 0 ? 0 : p);
        next[d] = std::min(next[d], (u == 0 ? 0.0 : best[p]) + cost(s, d));
      }
    best = std::move(next);
  }
  return *std::min_element(best.begin(), best.end());
}

InfeasibilityReport build_report(const NetworkGraph &graph, const Platform &platform,
                                 const std::vector<DecisionUnit> &units, const CostTables &t,
                                 const AccuracyModel &model, const Constraints &c) {
  InfeasibilityReport r;
  r.constraints = c;
  Constraints none;
  none.group_homogeneous = c.group_homogeneous;
  r.best_violating = *run_dp(graph, platform, units, t, model, none);
  const auto start = model.start();
  r.min_loce = start.loce_m + min_over_paths(t, [](const CostTables::Step &s,
                                                          std::size_t) { return s.acc.loce_m; });
  r.min_orie = start.orie_deg + min_over_paths(t, [](const CostTables::Step &s,
                                                            std::size_t) {
                 return s.acc.orie_deg;
               });
  r.min_energy = min_over_paths(t, [&](const CostTables::Step &s, std::size_t) {
    return t.final_energy(s);
  });
  if (c.max_loce && r.min_loce > *c.max_loce)
    r.binding.push_back("max_loce");
  if (c.max_orie && r.min_orie > *c.max_orie)
    r.binding.push_back("max_orie");
  if (c.max_energy && r.min_energy > *c.max_energy)
    r.binding.push_back("max_energy");
  if (r.binding.empty()) {
    const auto &b = r.best_violating;
    if (c.max_loce && b.accuracy.loce_m > *c.max_loce)
      r.binding.push_back("max_loce");
    if (c.max_orie && b.accuracy.orie_deg > *c.max_orie)
      r.binding.push_back("max_orie");
    if (c.max_energy && b.energy_j > *c.max_energy)
      r.binding.push_back("max_energy");
  }
  return r;
}

double search_space(std::size_t devices, std::size_t units) {
  return std::pow(static_cast<double>(devices), static_cast<double>(units));
}

void check_space(std::size_t devices, std::size_t units) {
  const double n = search_space(devices, units);
  if (n > kMaxEnumeration) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "search space of %zu^%zu = %.3g assignments exceeds the enumeration limit "
                  "of %.0f",
                  devices, units, n, kMaxEnumeration);
    throw SearchSpaceError(buf);
  }
}

/// Calls f(devices) for every unit placement in lexicographic order.
template <class F>
void enumerate(std::size_t nd, std::size_t nu, F f) {
  std::vector<std::size_t> devs(nu, 0);
  while (true) {
    f(devs);
    std::size_t k = nu;
    while (k > 0) {
      --k;
      if (++devs[k] < nd)
        break;
      devs[k] = 0;
      if (k == 0)
        return;
    }
    if (nu == 0)
      return;
  }
}

int count_switches(const std::vector<std::size_t> &devs) {
  int s = 0;
  for (std::size_t u = 1; u < devs.size(); ++u)
    s += devs[u] != devs[u - 1];
  return s;
}

AccuracyMetrics mode_accuracy(const NetworkGraph &graph, const Assignment &a,
                              const AccuracyModel &model, bool group_mode) {
  return group_mode ? predict_accuracy(group_view(graph, a), model)
                    : predict_accuracy_per_layer(graph, a, model);
}

} // namespace

PartitionResult optimize_chain_dp(const NetworkGraph &graph, const Platform &platform,
                                  const AccuracyModel &acc_model,
                                  const Constraints &constraints) {
  constraints.validate();
  const auto units = decision_units(graph, constraints.group_homogeneous);
  const CostTables t(graph, units, platform, acc_model, !constraints.group_homogeneous);
  if (auto r = run_dp(graph, platform, units, t, acc_model, constraints))
    return *r;
  throw InfeasibleError(build_report(graph, platform, units, t, acc_model, constraints));
}

PartitionResult exhaustive_search(const NetworkGraph &graph, const Platform &platform,
                                  const AccuracyModel &acc_model,
                                  const Constraints &constraints) {
  constraints.validate();
  const auto units = decision_units(graph, constraints.group_homogeneous);
  const std::size_t nd = platform.devices().size();
  check_space(nd, units.size());
  std::optional<PartitionResult> best;
  enumerate(nd, units.size(), [&](const std::vector<std::size_t> &devs) {
    auto a = assignment_from_units(units, devs, platform);
    const auto rep = simulate(graph, a, platform);
    const auto acc = mode_accuracy(graph, a, acc_model, constraints.group_homogeneous);
    if (!constraints.satisfied_by(acc, rep.energy_j))
      return;
    const int sw = count_switches(devs);
    if (best && !key_less(rep.total_latency_s, sw, devs, best->latency_s, best->switches,
                          best->unit_devices))
      return;
    best = PartitionResult{std::move(a), devs, rep.total_latency_s, acc, rep.energy_j, sw};
  });
  if (best)
    return *best;
  const CostTables t(graph, units, platform, acc_model, !constraints.group_homogeneous);
  throw InfeasibleError(build_report(graph, platform, units, t, acc_model, constraints));
}

std::vector<ParetoPoint> pareto_frontier(const NetworkGraph &graph, const Platform &platform,
                                         const AccuracyModel &acc_model) {
  const auto units = decision_units(graph, true);
  const std::size_t nd = platform.devices().size();
  check_space(nd, units.size());
  std::vector<ParetoPoint> all;
  enumerate(nd, units.size(), [&](const std::vector<std::size_t> &devs) {
    auto a = assignment_from_units(units, devs, platform);
    const auto rep = simulate(graph, a, platform);
    ParetoPoint p;
    p.groups = group_view(graph, a);
    p.result = PartitionResult{std::move(a), devs, rep.total_latency_s,
                               predict_accuracy(p.groups, acc_model), rep.energy_j,
                               count_switches(devs)};
    all.push_back(std::move(p));
  });
  auto dom = [](const PartitionResult &a, const PartitionResult &b) {
    const bool le = a.latency_s <= b.latency_s && a.accuracy.orie_deg <= b.accuracy.orie_deg &&
                    a.energy_j <= b.energy_j;
    const bool lt = a.latency_s < b.latency_s || a.accuracy.orie_deg < b.accuracy.orie_deg ||
                    a.energy_j < b.energy_j;
    return le && lt;
  };
  std::vector<ParetoPoint> front;
  for (const auto &p : all) {
    bool dominated = false;
    for (const auto &q : all)
      if (dom(q.result, p.result)) {
        dominated = true;
        break;
      }
    if (!dominated)
      front.push_back(p);
  }
  std::sort(front.begin(), front.end(), [](const ParetoPoint &a, const ParetoPoint &b) {
    return key_less(a.result.latency_s, a.result.switches, a.result.unit_devices,
                    b.result.latency_s, b.result.switches, b.result.unit_devices);
  });
  return front;
}

// ---------------------------------------------------------------------------
// Documents

namespace {

json group_summary(const NetworkGraph &graph, const Assignment &a) {
  json groups = json::object();
  for (auto g : kAllGroups) {
    const auto ids = graph.group_layers(g);
    if (ids.empty())
      continue;
    std::set<std::string> devs;
    for (const auto &id : ids)
      devs.insert(a.at(id));
    groups[std::string(to_string(g))] = devs.size() == 1 ? *devs.begin() : std::string("mixed");
  }
  return groups;
}

json result_json(const NetworkGraph &graph, const PartitionResult &r) {
  return {{"groups", group_summary(graph, r.assignment)},
          {"latency_s", r.latency_s},
          {"loce_m", r.accuracy.loce_m},
          {"orie_deg", r.accuracy.orie_deg},
          {"energy_j", r.energy_j},
          {"switches", r.switches}};
}

} // namespace

std::string serialize_assignment(const NetworkGraph &graph, const Assignment &assignment) {
  json doc;
  json layers = json::object();
  for (const auto &id : graph.topological_order())
    layers[id] = assignment.at(id);
  doc["assignment"] = std::move(layers);
  doc["groups"] = group_summary(graph, assignment);
  return doc.dump(2);
}

Assignment load_assignment(const NetworkGraph &graph, std::string_view document) {
  json doc = detail::parse_document(document, "assignment");
  if (!doc.is_object())
    throw ParseError("assignment: expected an object");
  auto read_groups = [&](const json &g) {
    detail::check_fields(g, {"PRE", "BACKBONE", "HEAD"}, "assignment groups");
    GroupAssignment ga;
    for (auto it = g.begin(); it != g.end(); ++it) {
      if (!it.value().is_string())
        throw ParseError("assignment groups: device for " + it.key() + " must be a string");
      ga[parse_group(it.key())] = it.value().get<std::string>();
    }
    return expand(graph, ga);
  };
  if (doc.contains("assignment")) {
    detail::check_fields(doc, {"assignment", "groups"}, "assignment");
    const json &m = doc["assignment"];
    if (!m.is_object())
      throw ParseError("assignment: 'assignment' must map layer ids to devices");
    Assignment a;
    for (auto it = m.begin(); it != m.end(); ++it) {
      if (!it.value().is_string())
        throw ParseError("assignment: device for layer '" + it.key() + "' must be a string");
      a[it.key()] = it.value().get<std::string>();
    }
    return a;
  }
  if (doc.contains("groups")) {
    detail::check_fields(doc, {"groups"}, "assignment");
    return read_groups(doc["groups"]);
  }
  return read_groups(doc);
}

std::string serialize_infeasibility(const NetworkGraph &graph, const InfeasibilityReport &r) {
  json doc;
  doc["feasible"] = false;
  doc["binding"] = r.binding;
  json c = json::object();
  if (r.constraints.max_loce)
    c["max_loce"] = *r.constraints.max_loce;
  if (r.constraints.max_orie)
    c["max_orie"] = *r.constraints.max_orie;
  if (r.constraints.max_energy)
    c["max_energy"] = *r.constraints.max_energy;
  c["group_homogeneous"] = r.constraints.group_homogeneous;
  doc["constraints"] = std::move(c);
  doc["min_achievable"] = {
      {"loce_m", r.min_loce}, {"orie_deg", r.min_orie}, {"energy_j", r.min_energy}};
  doc["best_violating"] = result_json(graph, r.best_violating);
  return doc.dump(2);
}

std::string pareto_csv(const NetworkGraph &graph, const std::vector<ParetoPoint> &points) {
  std::ostringstream os;
  os << "pre,backbone,head,latency_ms,loce_m,orie_deg,energy_j,switches\n";
  char buf[256];
  for (const auto &p : points) {
    auto dev = [&](LayerGroup g) {
      auto it = p.groups.find(g);
      return it == p.groups.end() ? std::string() : it->second;
    };
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%d", p.result.latency_s * 1e3,
                  p.result.accuracy.loce_m, p.result.accuracy.orie_deg, p.result.energy_j,
                  p.result.switches);
    os << dev(LayerGroup::Pre) << ',' << dev(LayerGroup::Backbone) << ','
       << dev(LayerGroup::Head) << ',' << buf << '\n';
  }
  (void)graph;
  return os.str();
}

} // namespace mpai
