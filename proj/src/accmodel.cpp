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
#include "mpai/accmodel.hpp"

#include "json_util.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>

namespace mpai {

using detail::json;

namespace {
constexpr LayerGroup kDegradingGroups[] = {LayerGroup::Backbone, LayerGroup::Head};

std::string pair_name(const std::string &device, LayerGroup g) {
  return device + "/" + std::string(to_string(g));
}
} // namespace

const AccuracyMetrics &AccuracyModel::delta(std::string_view device, LayerGroup group) const {
  static const AccuracyMetrics kZero{};
  if (group == LayerGroup::Pre)
    return kZero;
  auto it = deltas.find({std::string(device), group});
  if (it == deltas.end())
    throw CoverageError("accuracy model has no calibrated delta for " +
                        pair_name(std::string(device), group));
  return it->second;
}

AccuracyMetrics predict_accuracy(const GroupAssignment &assignment,
                                 const AccuracyModel &model) {
  AccuracyMetrics m = model.start();
  for (auto g : kDegradingGroups)
    if (auto it = assignment.find(g); it != assignment.end())
      m += model.delta(it->second, g);
  return m;
}

GroupAssignment group_view(const NetworkGraph &graph, const Assignment &assignment) {
  GroupAssignment groups;
  for (const auto &id : graph.topological_order()) {
    auto it = assignment.find(id);
    if (it == assignment.end())
      throw ContractError("assignment does not cover layer '" + id + "'");
    const LayerGroup g = graph.layer(id).group;
    auto [pos, inserted] = groups.emplace(g, it->second);
    if (!inserted && pos->second != it->second)
      throw ContractError("group " + std::string(to_string(g)) +
                          " is split across devices '" + pos->second + "' and '" +
                          it->second + "'");
  }
  return groups;
}

Assignment expand(const NetworkGraph &graph, const GroupAssignment &groups) {
  Assignment out;
  for (const auto &l : graph.layers()) {
    auto it = groups.find(l.group);
    if (it == groups.end())
      throw ContractError("group assignment lacks group " + std::string(to_string(l.group)) +
                          " needed by layer '" + l.id + "'");
    out[l.id] = it->second;
  }
  return out;
}

double layer_accuracy_share(const NetworkGraph &graph, std::string_view layer_id) {
  const Layer &l = graph.layer(layer_id);
  const auto members = graph.group_layers(l.group);
  const std::uint64_t group_ops = total_ops(graph, members);
  if (group_ops == 0)
    return 1.0 / static_cast<double>(members.size());
  return static_cast<double>(op_count(l)) / static_cast<double>(group_ops);
}

AccuracyMetrics predict_accuracy_per_layer(const NetworkGraph &graph,
                                           const Assignment &assignment,
                                           const AccuracyModel &model) {
  AccuracyMetrics m = model.start();
  for (const auto &id : graph.topological_order()) {
    const Layer &l = graph.layer(id);
    if (l.group == LayerGroup::Pre)
      continue;
    auto it = assignment.find(id);
    if (it == assignment.end())
      throw ContractError("assignment does not cover layer '" + id + "'");
    const auto &d = model.delta(it->second, l.group);
    const double share = layer_accuracy_share(graph, id);
    m += AccuracyMetrics{d.loce_m * share, d.orie_deg * share};
  }
  return m;
}

std::vector<double> solve_nnls(const std::vector<double> &a, const std::vector<double> &b,
                               std::size_t cols) {
  const std::size_t rows = b.size();
  if (a.size() != rows * cols)
    throw ContractError("solve_nnls: matrix size mismatch");
  Eigen::MatrixXd A(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      A(r, c) = a[r * cols + c];
  const Eigen::VectorXd B = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
  std::vector<bool> passive(cols, false);
  const double tol = 1e-14 * std::max(1.0, A.cwiseAbs().maxCoeff()) *
                     std::max(1.0, B.cwiseAbs().maxCoeff()) * static_cast<double>(rows + cols);

  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (std::size_t c = 0; c < cols; ++c)
      if (passive[c])
        idx.push_back(static_cast<Eigen::Index>(c));
    Eigen::MatrixXd Ap(rows, idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k)
      Ap.col(k) = A.col(idx[k]);
    Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(B);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(cols);
    for (std::size_t k = 0; k < idx.size(); ++k)
      z(idx[k]) = zp(k);
    return z;
  };

  for (std::size_t outer = 0; outer < 3 * cols + 10; ++outer) {
    const Eigen::VectorXd w = A.transpose() * (B - A * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (std::size_t c = 0; c < cols; ++c)
      if (!passive[c] && w(c) > best_w) {
        best_w = w(c);
        best = static_cast<Eigen::Index>(c);
      }
    if (best < 0)
      break;
    passive[best] = true;
    for (std::size_t inner = 0; inner < 3 * cols + 10; ++inner) {
      Eigen::VectorXd z = solve_passive();
      bool feasible = true;
      for (std::size_t c = 0; c < cols; ++c)
        if (passive[c] && z(c) <= 0.0)
          feasible = false;
      if (feasible) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (std::size_t c = 0; c < cols; ++c)
        if (passive[c] && z(c) <= 0.0)
          alpha = std::min(alpha, x(c) / (x(c) - z(c)));
      x += alpha * (z - x);
      for (std::size_t c = 0; c < cols; ++c)
        if (passive[c] && x(c) <= tol) {
          passive[c] = false;
          x(c) = 0.0;
        }
    }
  }
  return std::vector<double>(x.data(), x.data() + cols);
}

AccuracyFit calibrate_accuracy(const std::vector<AccuracyRow> &rows,
                               const AccuracyMetrics &baseline,
                               const AccuracyFitOptions &options) {
  if (rows.empty())
    throw CalibrationError("calibrate_accuracy: no measurement rows");
  if (!(options.backbone_share >= 0.0 && options.backbone_share <= 1.0))
    throw ContractError("calibrate_accuracy: backbone_share must lie in [0, 1]");

  AccuracyModel model;
  model.baseline = baseline;
  model.model_offset = {rows[0].measured.loce_m - baseline.loce_m,
                        rows[0].measured.orie_deg - baseline.orie_deg};
  for (const auto &r : rows) {
    model.model_offset.loce_m = std::min(model.model_offset.loce_m, r.measured.loce_m - baseline.loce_m);
    model.model_offset.orie_deg =
        std::min(model.model_offset.orie_deg, r.measured.orie_deg - baseline.orie_deg);
  }
  model.model_offset.loce_m = std::max(model.model_offset.loce_m, 0.0);
  model.model_offset.orie_deg = std::max(model.model_offset.orie_deg, 0.0);
  const AccuracyMetrics start = model.start();

  // Unknown (device, group) pairs, and devices measured on their own.
  std::vector<std::pair<std::string, LayerGroup>> unknowns;
  std::map<std::string, std::vector<const AccuracyRow *>> single_rows;
  for (const auto &r : rows) {
    std::set<std::string> devs;
    for (auto g : kDegradingGroups)
      if (auto it = r.assignment.find(g); it != r.assignment.end()) {
        devs.insert(it->second);
        std::pair<std::string, LayerGroup> key{it->second, g};
        if (std::find(unknowns.begin(), unknowns.end(), key) == unknowns.end())
          unknowns.push_back(key);
      }
    if (devs.size() == 1)
      single_rows[*devs.begin()].push_back(&r);
  }
  std::sort(unknowns.begin(), unknowns.end());
  std::vector<std::string> unidentifiable;
  for (const auto &[dev, g] : unknowns)
    if (!single_rows.count(dev))
      unidentifiable.push_back(pair_name(dev, g));
  if (!unidentifiable.empty()) {
    std::string list;
    for (const auto &u : unidentifiable)
      list += (list.empty() ? "" : ", ") + u;
    throw CalibrationError("calibrate_accuracy: unidentifiable (device, group) pairs "
                           "(no single-device row for their device): " + list);
  }

  const std::size_t n = unknowns.size();
  auto column = [&](const std::string &dev, LayerGroup g) {
    return static_cast<std::size_t>(
        std::find(unknowns.begin(), unknowns.end(), std::make_pair(dev, g)) - unknowns.begin());
  };

  for (int metric = 0; metric < 2; ++metric) {
    auto pick = [metric](const AccuracyMetrics &m) { return metric == 0 ? m.loce_m : m.orie_deg; };
    std::vector<double> a, b;
    for (const auto &r : rows) {
      std::vector<double> row(n, 0.0);
      for (auto g : kDegradingGroups)
        if (auto it = r.assignment.find(g); it != r.assignment.end())
          row[column(it->second, g)] = 1.0;
      a.insert(a.end(), row.begin(), row.end());
      b.push_back(pick(r.measured) - pick(start));
    }
    // Attribution prior anchored on each device's own measurement.
    for (const auto &[dev, g] : unknowns) {
      const auto &own = single_rows.at(dev);
      double total = 0.0;
      for (const auto *r : own)
        total += pick(r->measured) - pick(start);
      total = std::max(total / static_cast<double>(own.size()), 0.0);
      const auto &asg = own.front()->assignment;
      const bool both = asg.count(LayerGroup::Backbone) && asg.count(LayerGroup::Head);
      double share = 1.0;
      if (both)
        share = g == LayerGroup::Backbone ? options.backbone_share : 1.0 - options.backbone_share;
      std::vector<double> row(n, 0.0);
      row[column(dev, g)] = options.prior_weight;
      a.insert(a.end(), row.begin(), row.end());
      b.push_back(options.prior_weight * share * total);
    }
    const auto x = solve_nnls(a, b, n);
    for (std::size_t k = 0; k < n; ++k) {
      auto &d = model.deltas[unknowns[k]];
      (metric == 0 ? d.loce_m : d.orie_deg) = x[k];
    }
  }

  AccuracyFit fit{model, {}};
  for (const auto &r : rows) {
    AccuracyResidual res;
    res.label = r.label;
    res.predicted = predict_accuracy(r.assignment, fit.model);
    res.measured = r.measured;
    res.residual = {res.predicted.loce_m - r.measured.loce_m,
                    res.predicted.orie_deg - r.measured.orie_deg};
    fit.residuals.push_back(res);
  }
  return fit;
}

namespace {
json metrics_json(const AccuracyMetrics &m) {
  return {{"loce_m", m.loce_m}, {"orie_deg", m.orie_deg}};
}

AccuracyMetrics parse_metrics(const json &j, const std::string &ctx) {
  detail::check_fields(j, {"loce_m", "orie_deg"}, ctx);
  AccuracyMetrics m{detail::get_number(j, "loce_m", ctx), detail::get_number(j, "orie_deg", ctx)};
  if (m.loce_m < 0.0 || m.orie_deg < 0.0 || m.orie_deg > 180.0)
    throw ValidationError(ctx + ": LOCE must be >= 0 and ORIE within [0, 180]");
  return m;
}
} // namespace

std::string serialize_accuracy_model(const AccuracyModel &model) {
  json doc;
  doc["baseline"] = metrics_json(model.baseline);
  doc["model_offset"] = metrics_json(model.model_offset);
  json deltas = json::array();
  for (const auto &[key, d] : model.deltas)
    deltas.push_back({{"device", key.first},
                      {"group", std::string(to_string(key.second))},
                      {"loce_m", d.loce_m},
                      {"orie_deg", d.orie_deg}});
  doc["deltas"] = std::move(deltas);
  return doc.dump(2);
}

AccuracyModel load_accuracy_model(std::string_view document) {
  json doc = detail::parse_document(document, "accuracy model");
  detail::check_fields(doc, {"baseline", "model_offset", "deltas"}, "accuracy model");
  AccuracyModel m;
  m.baseline = parse_metrics(detail::require(doc, "baseline", "accuracy model"), "baseline");
  m.model_offset =
      parse_metrics(detail::require(doc, "model_offset", "accuracy model"), "model_offset");
  for (const auto &d : detail::require(doc, "deltas", "accuracy model")) {
    detail::check_fields(d, {"device", "group", "loce_m", "orie_deg"}, "delta");
    const auto dev = detail::get_string(d, "device", "delta");
    const auto g = parse_group(detail::get_string(d, "group", "delta"));
    if (g == LayerGroup::Pre)
      throw ValidationError("delta for " + dev + ": PRE carries no accuracy delta");
    m.deltas[{dev, g}] = parse_metrics(json{{"loce_m", d["loce_m"]}, {"orie_deg", d["orie_deg"]}},
                                       "delta " + pair_name(dev, g));
  }
  return m;
}

} // namespace mpai
