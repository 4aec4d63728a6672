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
// Python module. Documents cross the boundary as JSON text; the package
// wrapper turns them into dicts.
#include "mpai/calibrate.hpp"
#include "mpai/cli.hpp"
#include "mpai/partitioner.hpp"
#include "mpai/quantlab.hpp"
#include "mpai/simulator.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

namespace py = pybind11;
using namespace mpai;

namespace {

std::string simulate_json(const std::string &graph, const std::string &platform,
                          const std::string &assignment,
                          const std::optional<std::string> &accuracy_model) {
  const NetworkGraph g = load_graph(graph);
  const Platform p = load_platform(platform);
  const Assignment a = load_assignment(g, assignment);
  std::optional<AccuracyModel> m;
  if (accuracy_model)
    m = load_accuracy_model(*accuracy_model);
  return serialize_report(simulate(g, a, p, m ? &*m : nullptr));
}

std::string simulate_device_json(const std::string &graph, const std::string &platform,
                                 const std::string &device) {
  const NetworkGraph g = load_graph(graph);
  return serialize_report(simulate(g, single_device_assignment(g, device), load_platform(platform)));
}

py::tuple partition_json(const std::string &graph, const std::string &platform,
                         const std::string &accuracy_model, const std::string &constraints) {
  const NetworkGraph g = load_graph(graph);
  const Platform p = load_platform(platform);
  const AccuracyModel m = load_accuracy_model(accuracy_model);
  const Constraints k = load_constraints(constraints);
  try {
    const PartitionResult r = optimize_chain_dp(g, p, m, k);
    return py::make_tuple(true, serialize_assignment(g, r.assignment),
                          serialize_report(simulate(g, r.assignment, p, &m)));
  } catch (const InfeasibleError &e) {
    return py::make_tuple(false, serialize_infeasibility(g, e.report()), std::string());
  }
}

std::string exhaustive_json(const std::string &graph, const std::string &platform,
                            const std::string &accuracy_model, const std::string &constraints) {
  const NetworkGraph g = load_graph(graph);
  const PartitionResult r = exhaustive_search(g, load_platform(platform),
                                              load_accuracy_model(accuracy_model),
                                              load_constraints(constraints));
  return serialize_assignment(g, r.assignment);
}

std::string pareto_json(const std::string &graph, const std::string &platform,
                        const std::string &accuracy_model) {
  const NetworkGraph g = load_graph(graph);
  return pareto_csv(g, pareto_frontier(g, load_platform(platform),
                                       load_accuracy_model(accuracy_model)));
}

py::dict calibrate_json(const std::string &graph, const std::string &skeleton,
                        const std::string &measurements, std::uint64_t seed) {
  const NetworkGraph g = load_graph(graph);
  const MeasurementSet set = load_measurements(measurements);
  FitOptions o;
  o.seed = seed;
  const FitResult fit = fit_profiles(set.rows, g, load_skeleton(skeleton), o);
  py::dict out;
  out["platform"] = serialize_platform(fit.platform);
  out["report"] = serialize_fit_report(fit.report);
  if (set.baseline)
    out["accuracy_model"] = serialize_accuracy_model(calibrate_accuracy(set).model);
  return out;
}

py::tuple fig2_json(const std::string &targets, const std::vector<std::string> &graphs,
                    const std::string &skeleton, std::uint64_t seed, bool ablation) {
  std::map<std::string, NetworkGraph> by_name;
  for (const auto &doc : graphs) {
    NetworkGraph g = load_graph(doc);
    by_name.emplace(g.name(), std::move(g));
  }
  Fig2Options o;
  o.seed = seed;
  o.scalar_rate_ablation = ablation;
  auto achieved = [](const std::vector<Fig2Achieved> &v) {
    py::list l;
    for (const auto &a : v)
      l.append(py::make_tuple(a.target.graph, a.achieved, a.within));
    return l;
  };
  try {
    const Fig2Fit fit = fit_fig2_profiles(load_fig2_targets(targets), by_name,
                                          load_skeleton(skeleton), o);
    return py::make_tuple(true, serialize_platform(fit.platform), achieved(fit.achieved));
  } catch (const Fig2InfeasibleError &e) {
    return py::make_tuple(false, std::string(e.what()), achieved(e.best()));
  }
}

py::tuple cli(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  const int rc = run_cli(args, out, err);
  return py::make_tuple(rc, out.str(), err.str());
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mixed-precision DNN partitioning simulator";

  py::register_exception<Error>(m, "Error");

  m.def("_simulate", &simulate_json, py::arg("graph"), py::arg("platform"),
        py::arg("assignment"), py::arg("accuracy_model") = std::nullopt);
  m.def("_simulate_device", &simulate_device_json, py::arg("graph"), py::arg("platform"),
        py::arg("device"));
  m.def("_partition", &partition_json, py::arg("graph"), py::arg("platform"),
        py::arg("accuracy_model"), py::arg("constraints"));
  m.def("_exhaustive", &exhaustive_json, py::arg("graph"), py::arg("platform"),
        py::arg("accuracy_model"), py::arg("constraints"));
  m.def("_pareto_csv", &pareto_json, py::arg("graph"), py::arg("platform"),
        py::arg("accuracy_model"));
  m.def("_calibrate", &calibrate_json, py::arg("graph"), py::arg("skeleton"),
        py::arg("measurements"), py::arg("seed") = 0);
  m.def("_fit_fig2", &fig2_json, py::arg("targets"), py::arg("graphs"), py::arg("skeleton"),
        py::arg("seed") = 0, py::arg("scalar_rate_ablation") = false);
  m.def("_run_cli", &cli, py::arg("args"));

  m.def("round_to_fp16", &round_to_fp16, py::arg("value"));
  m.def(
      "int8_round_trip",
      [](const std::vector<double> &values) {
        const TensorSample t(values);
        const QuantParams p = fit_quant_params(t);
        return py::make_tuple(quantize_dequantize(t, p).values(), p.scale);
      },
      py::arg("values"));
  m.def(
      "sqnr",
      [](const std::vector<double> &a, const std::vector<double> &b) {
        return sqnr(TensorSample(a), TensorSample(b));
      },
      py::arg("original"), py::arg("degraded"));
}
