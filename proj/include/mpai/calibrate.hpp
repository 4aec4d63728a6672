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
// Fitting device profiles to measured latencies.
//
// A platform skeleton fixes topology and precisions and marks every numeric
// parameter as fixed, free within bounds, or (rates only) tied to the
// device's CONV rate by a ratio. Free parameters are fitted by a projected
// Levenberg-Marquardt solver on relative latency errors.
#ifndef MPAI_CALIBRATE_HPP
#define MPAI_CALIBRATE_HPP

#include "mpai/accmodel.hpp"
#include "mpai/devmodel.hpp"
#include "mpai/netgraph.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mpai {

struct MeasurementRow {
  std::string label;
  GroupAssignment assignment;
  double inference_ms = 0.0;
  double total_ms = 0.0;
  std::optional<AccuracyMetrics> accuracy;
};

struct MeasurementSet {
  /// Graph the rows were measured on, if the document names one.
  std::string graph;
  std::optional<AccuracyMetrics> baseline;
  std::vector<MeasurementRow> rows;
};

/// Accepts a bare list of rows or {graph, baseline, rows}. Each row needs
/// total_ms >= inference_ms > 0.
MeasurementSet load_measurements(std::string_view document);
MeasurementSet load_measurements_file(const std::filesystem::path &path);

enum class ParamKind { Rate, Overhead, Preproc, LinkBandwidth, LinkLatency };

struct ParamRef {
  ParamKind kind = ParamKind::Rate;
  std::string device; ///< device, or link source
  std::string dst;    ///< link destination
  LayerClass cls = LayerClass::Conv;

  std::string name() const;
  auto operator<=>(const ParamRef &) const = default;
};

struct ParamSpec {
  enum class Mode { Fixed, Free, Tied };
  Mode mode = Mode::Fixed;
  double value = 0.0; ///< fixed value, or initial value when free
  bool init_from_rows = false;
  double min = 0.0, max = 0.0;
  double ratio = 1.0; ///< tied rates: rate = ratio x CONV rate
};

struct PlatformSkeleton {
  Platform base; ///< every parameter at its fixed or initial value
  std::map<ParamRef, ParamSpec> params;
};

PlatformSkeleton load_skeleton(std::string_view document);
PlatformSkeleton load_skeleton_file(const std::filesystem::path &path);

struct FitOptions {
  std::uint64_t seed = 0;
  int restarts = 4;
  int max_iterations = 300;
  /// Relative weight of the pull toward each free parameter's initial value.
  double prior_weight = 1e-3;
  /// Rows whose relative error exceeds this are flagged in the report.
  double warn_threshold = 0.10;
};

struct RowResidual {
  std::string label;
  double inference_ms = 0.0, total_ms = 0.0;         ///< simulated
  double meas_inference_ms = 0.0, meas_total_ms = 0.0;
  double rel_err_inference = 0.0, rel_err_total = 0.0;
};

struct FittedParam {
  std::string name;
  std::string mode; ///< "fixed", "free" or "tied"
  double value = 0.0;
  double init = 0.0;
  std::optional<double> min, max, ratio;
};

struct FitReport {
  std::vector<FittedParam> params;
  std::vector<RowResidual> residuals;
  std::vector<std::string> warnings;
  double cost = 0.0;
  int iterations = 0;
  int restart = 0; ///< index of the winning restart
  std::uint64_t seed = 0;
};

struct FitResult {
  Platform platform;
  FitReport report;
};

/// Group assignment expanded to layers and simulated per row.
FitResult fit_profiles(const std::vector<MeasurementRow> &rows, const NetworkGraph &graph,
                       const PlatformSkeleton &skeleton, const FitOptions &options = {});

struct Fig2Target {
  std::string graph;
  enum class Kind { Ratio, Fps } kind = Kind::Ratio;
  std::string numerator, denominator; ///< Ratio: FPS(numerator) / FPS(denominator)
  std::string device;                 ///< Fps
  double value = 1.0;
  double rel_tol = 0.15; ///< Ratio acceptance band
  double min = 0.0, max = 0.0; ///< Fps acceptance band
};

std::vector<Fig2Target> load_fig2_targets(std::string_view document);

struct Fig2Options {
  std::uint64_t seed = 0;
  int restarts = 64;
  int max_iterations = 400;
  /// Ablation: one scalar rate per device (class rates tied 1:1) and no
  /// invocation overhead.
  bool scalar_rate_ablation = false;
};

struct Fig2Achieved {
  Fig2Target target;
  double achieved = 0.0;
  double log_residual = 0.0;
  bool within = false;
};

struct Fig2Fit {
  Platform platform;
  std::vector<Fig2Achieved> achieved;
  FitReport report;
};

/// Error carrying the best residuals when no profile meets every target.
class Fig2InfeasibleError : public CalibrationError {
public:
  Fig2InfeasibleError(const std::string &msg, std::vector<Fig2Achieved> best)
      : CalibrationError(msg), best_(std::move(best)) {}
  const std::vector<Fig2Achieved> &best() const { return best_; }

private:
  std::vector<Fig2Achieved> best_;
};

/// Fits the devices the targets mention on single-device runs. `graphs` maps
/// graph names to graphs.
Fig2Fit fit_fig2_profiles(const std::vector<Fig2Target> &targets,
                          const std::map<std::string, NetworkGraph> &graphs,
                          const PlatformSkeleton &skeleton, const Fig2Options &options = {});

/// Accuracy rows with their baseline. Throws CalibrationError when the set
/// has no baseline or no accuracy columns.
AccuracyFit calibrate_accuracy(const MeasurementSet &set, const AccuracyFitOptions &options = {});

std::string serialize_fit_report(const FitReport &report);

/// Portable uniform [0, 1) draw from a 64-bit Mersenne Twister.
double uniform01(std::uint64_t bits);

} // namespace mpai

#endif // MPAI_CALIBRATE_HPP
