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
#include "mpai/quantlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mpai {

TensorSample::TensorSample(std::vector<double> values, TensorShape shape)
    : values_(std::move(values)), shape_(std::move(shape)) {
  if (shape_.dims.empty())
    throw ValidationError("tensor sample: shape must have at least one dimension");
  for (auto d : shape_.dims)
    if (d < 1)
      throw ValidationError("tensor sample: shape extents must be >= 1");
  if (static_cast<std::int64_t>(values_.size()) != shape_.elements())
    throw ValidationError("tensor sample: " + std::to_string(values_.size()) +
                          " values do not fill shape " + to_string(shape_));
  for (double v : values_)
    if (!std::isfinite(v))
      throw ValidationError("tensor sample: values must be finite");
}

TensorSample::TensorSample(std::vector<double> values)
    : TensorSample(values, TensorShape{{static_cast<std::int64_t>(values.size())}}) {}

QuantParams fit_quant_params(const TensorSample &t, QuantScheme scheme) {
  const auto [lo_it, hi_it] = std::minmax_element(t.values().begin(), t.values().end());
  const double lo = std::min(*lo_it, 0.0);
  const double hi = std::max(*hi_it, 0.0);
  QuantParams p;
  p.scheme = scheme;
  if (lo == 0.0 && hi == 0.0)
    return p;
  if (scheme == QuantScheme::Symmetric) {
    p.scale = std::max(std::fabs(lo), std::fabs(hi)) / kInt8Max;
    p.zero_point = 0;
  } else {
    p.scale = (hi - lo) / (kInt8Max - kInt8Min);
    const double zp = std::nearbyint(kInt8Min - lo / p.scale);
    p.zero_point = static_cast<int>(std::clamp(zp, double(kInt8Min), double(kInt8Max)));
  }
  return p;
}

double quantize_dequantize(double v, const QuantParams &p) {
  const double q = std::clamp(std::nearbyint(v / p.scale) + p.zero_point, double(kInt8Min),
                              double(kInt8Max));
  return (q - p.zero_point) * p.scale;
}

TensorSample quantize_dequantize(const TensorSample &t, const QuantParams &p) {
  if (!(p.scale > 0.0))
    throw ContractError("quantize_dequantize: scale must be > 0");
  if (p.scheme == QuantScheme::Symmetric && p.zero_point != 0)
    throw ContractError("quantize_dequantize: symmetric scheme requires zero_point 0");
  std::vector<double> out(t.size());
  std::transform(t.values().begin(), t.values().end(), out.begin(),
                 [&](double v) { return quantize_dequantize(v, p); });
  return TensorSample(std::move(out), t.shape());
}

double round_to_fp16(double v) {
  if (v == 0.0 || !std::isfinite(v))
    return std::isfinite(v) ? v : std::copysign(kFp16Max, v);
  const double a = std::fabs(v);
  if (a >= kFp16Max)
    return std::copysign(kFp16Max, v);
  int e = 0;
  std::frexp(a, &e);
  // a in [2^(e-1), 2^e); binary16 keeps 10 fraction bits, subnormals below 2^-14.
  const int quantum_exp = std::max(e - 1, -14) - 10;
  double r = std::ldexp(std::nearbyint(std::ldexp(a, -quantum_exp)), quantum_exp);
  r = std::min(r, kFp16Max);
  return std::copysign(r, v);
}

TensorSample round_fp16(const TensorSample &t) {
  std::vector<double> out(t.size());
  std::transform(t.values().begin(), t.values().end(), out.begin(), round_to_fp16);
  return TensorSample(std::move(out), t.shape());
}

double sqnr(const TensorSample &original, const TensorSample &degraded) {
  if (original.shape() != degraded.shape())
    throw ContractError("sqnr: shapes differ (" + to_string(original.shape()) + " vs " +
                        to_string(degraded.shape()) + ")");
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const double o = original.values()[i];
    const double e = o - degraded.values()[i];
    signal += o * o;
    noise += e * e;
  }
  if (signal == 0.0)
    throw ContractError("sqnr: original tensor is all zeros");
  if (noise == 0.0)
    return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

} // namespace mpai
