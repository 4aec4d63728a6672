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
// Latency-optimal placement of decision units under accuracy and energy
// bounds.
//
// A decision unit is a run of layers in topological order that moves as a
// whole. PRE is always one unit. Units meet only at cuts crossed by exactly
// one tensor, the output of the unit's last layer, so the chain DP state
// (unit, device) is exact. Group mode uses one unit per group.
#ifndef MPAI_PARTITIONER_HPP
#define MPAI_PARTITIONER_HPP

#include "mpai/accmodel.hpp"
#include "mpai/devmodel.hpp"
#include "mpai/netgraph.hpp"
#include "mpai/simulator.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mpai {

struct Constraints {
  std::optional<double> max_loce;
  std::optional<double> max_orie;
  std::optional<double> max_energy;
  bool group_homogeneous = true;

  /// Throws ContractError unless every present bound is > 0.
  void validate() const;
  bool satisfied_by(const AccuracyMetrics &acc, double energy_j) const;
};

/// JSON block {"max_loce": m, "max_orie": deg, "max_energy": J,
/// "group_homogeneous": bool}; every field optional.
Constraints load_constraints(std::string_view document);

struct DecisionUnit {
  std::vector<std::string> layers;
  bool pre = false;
  /// Tensor handed over from the previous unit; empty when none is needed.
  std::string incoming;
};

/// Throws ContractError when the graph cannot be cut into units (PRE not a
/// prefix, or in group mode a group that is not a contiguous single-tensor
/// segment in PRE, BACKBONE, HEAD order).
std::vector<DecisionUnit> decision_units(const NetworkGraph &graph, bool group_homogeneous);

struct PartitionResult {
  Assignment assignment;
  /// Device index per decision unit.
  std::vector<std::size_t> unit_devices;
  double latency_s = 0.0;
  AccuracyMetrics accuracy;
  double energy_j = 0.0;
  int switches = 0;
};

struct InfeasibilityReport {
  /// Constraints that cannot be met: those infeasible on their own, or all
  /// violated ones when only their combination fails.
  std::vector<std::string> binding;
  /// Latency-optimal assignment ignoring constraints.
  PartitionResult best_violating;
  /// Smallest value each metric can take over all assignments.
  double min_loce = 0.0;
  double min_orie = 0.0;
  double min_energy = 0.0;
  Constraints constraints;
};

class InfeasibleError : public Error {
public:
  explicit InfeasibleError(InfeasibilityReport report);
  const InfeasibilityReport &report() const { return report_; }

private:
  InfeasibilityReport report_;
};

/// Search space too large for enumeration.
class SearchSpaceError : public Error {
public:
  using Error::Error;
};

inline constexpr double kMaxEnumeration = 1e6;

/// Chain DP over decision units with Pareto labels on the constrained
/// metrics. Ties: fewer device switches, then lexicographic device names.
PartitionResult optimize_chain_dp(const NetworkGraph &graph, const Platform &platform,
                                  const AccuracyModel &acc_model,
                                  const Constraints &constraints);

/// Full enumeration through simulate(); same contract and tie-break.
PartitionResult exhaustive_search(const NetworkGraph &graph, const Platform &platform,
                                  const AccuracyModel &acc_model,
                                  const Constraints &constraints);

struct ParetoPoint {
  PartitionResult result;
  GroupAssignment groups;
};

/// Group-level points not dominated in (latency, ORIE, energy), sorted by
/// latency, then switches, then device names.
std::vector<ParetoPoint> pareto_frontier(const NetworkGraph &graph, const Platform &platform,
                                         const AccuracyModel &acc_model);

/// Builds the full per-layer assignment from one device index per unit.
Assignment assignment_from_units(const std::vector<DecisionUnit> &units,
                                 const std::vector<std::size_t> &unit_devices,
                                 const Platform &platform);

std::string serialize_assignment(const NetworkGraph &graph, const Assignment &assignment);
/// Accepts {"assignment": {layer: device}} or a bare group map
/// {"PRE": dev, "BACKBONE": dev, "HEAD": dev}.
Assignment load_assignment(const NetworkGraph &graph, std::string_view document);
std::string serialize_infeasibility(const NetworkGraph &graph, const InfeasibilityReport &r);
std::string pareto_csv(const NetworkGraph &graph, const std::vector<ParetoPoint> &points);

} // namespace mpai

#endif // MPAI_PARTITIONER_HPP
