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
#ifndef MPAI_ACCMODEL_HPP
#define MPAI_ACCMODEL_HPP

#include "mpai/netgraph.hpp"

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mpai {

/// End-task pose error: localization (meters) and orientation (degrees).
struct AccuracyMetrics {
  double loce_m = 0.0;
  double orie_deg = 0.0;

  AccuracyMetrics &operator+=(const AccuracyMetrics &o) {
    loce_m += o.loce_m;
    orie_deg += o.orie_deg;
    return *this;
  }
  bool operator==(const AccuracyMetrics &) const = default;
};

inline AccuracyMetrics operator+(AccuracyMetrics a, const AccuracyMetrics &b) {
  return a += b;
}

/// Device per layer group.
using GroupAssignment = std::map<LayerGroup, std::string>;
/// Device per layer id.
using Assignment = std::map<std::string, std::string>;

/// Thrown when a prediction needs a (device, group) delta that was never fitted.
class CoverageError : public CalibrationError {
public:
  using CalibrationError::CalibrationError;
};

/// baseline + model_offset + sum of per-(device, group) degradation deltas.
/// PRE never degrades accuracy and has no entries.
struct AccuracyModel {
  AccuracyMetrics baseline;
  AccuracyMetrics model_offset;
  std::map<std::pair<std::string, LayerGroup>, AccuracyMetrics> deltas;

  /// Throws CoverageError for a missing entry; PRE yields zero.
  const AccuracyMetrics &delta(std::string_view device, LayerGroup group) const;
  AccuracyMetrics start() const { return baseline + model_offset; }
};

/// Group-level prediction. Groups absent from the assignment contribute
/// nothing; BACKBONE and HEAD deltas are added in that order.
AccuracyMetrics predict_accuracy(const GroupAssignment &assignment,
                                 const AccuracyModel &model);

/// Group-homogeneous per-layer assignment mapped back to groups. Throws
/// ContractError if some group spans several devices.
GroupAssignment group_view(const NetworkGraph &graph, const Assignment &assignment);
Assignment expand(const NetworkGraph &graph, const GroupAssignment &groups);

/// Per-layer prediction: every non-PRE layer adds its group delta scaled by
/// the layer's share of the group's op count, in topological order.
AccuracyMetrics predict_accuracy_per_layer(const NetworkGraph &graph,
                                           const Assignment &assignment,
                                           const AccuracyModel &model);

/// Share of a group's op count carried by one layer (equal split when the
/// group has no ops).
double layer_accuracy_share(const NetworkGraph &graph, std::string_view layer_id);

/// One measured configuration.
struct AccuracyRow {
  std::string label;
  GroupAssignment assignment;
  AccuracyMetrics measured;
};

struct AccuracyResidual {
  std::string label;
  AccuracyMetrics predicted;
  AccuracyMetrics measured;
  AccuracyMetrics residual; // predicted - measured
};

struct AccuracyFitOptions {
  /// Share of a device's single-device degradation attributed to BACKBONE
  /// when no mixed row resolves the split; HEAD gets the rest.
  double backbone_share = 0.3;
  /// Weight of the attribution prior relative to measured rows.
  double prior_weight = 1e-3;
};

struct AccuracyFit {
  AccuracyModel model;
  std::vector<AccuracyResidual> residuals;
};

/// Non-negative least-squares fit of the deltas. Throws CalibrationError for
/// empty input or pairs whose device has no single-device row.
AccuracyFit calibrate_accuracy(const std::vector<AccuracyRow> &rows,
                               const AccuracyMetrics &baseline,
                               const AccuracyFitOptions &options = {});

std::string serialize_accuracy_model(const AccuracyModel &model);
AccuracyModel load_accuracy_model(std::string_view document);

/// Weighted NNLS: minimizes ||A x - b||^2 subject to x >= 0 (Lawson-Hanson).
/// `a` is row-major with `cols` columns.
std::vector<double> solve_nnls(const std::vector<double> &a, const std::vector<double> &b,
                               std::size_t cols);

} // namespace mpai

#endif // MPAI_ACCMODEL_HPP
