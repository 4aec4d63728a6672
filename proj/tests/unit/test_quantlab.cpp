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
#include "../oracles.hpp"
#include "mpai/quantlab.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mpai;

namespace {

TensorSample random_tensor(std::mt19937_64 &rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto &x : v)
    x = u(rng);
  return TensorSample(std::move(v));
}

} // namespace

TEST(FitQuantParams, AllZeros) {
  const auto p = fit_quant_params(TensorSample({0.0, 0.0, 0.0}));
  EXPECT_EQ(p.scale, 1.0);
  EXPECT_EQ(p.zero_point, 0);
}

TEST(FitQuantParams, SymmetricUnitRange) {
  const auto p = fit_quant_params(TensorSample({-1.0, 1.0}));
  EXPECT_DOUBLE_EQ(p.scale, 1.0 / 127.0);
  EXPECT_EQ(p.zero_point, 0);
}

TEST(FitQuantParams, AsymmetricPositiveRange) {
  const auto p = fit_quant_params(TensorSample({0.0, 2.54}), QuantScheme::Asymmetric);
  EXPECT_DOUBLE_EQ(p.scale, 2.54 / 255.0);
  EXPECT_NEAR(p.scale, 0.00996, 1e-5);
  EXPECT_EQ(p.zero_point, -128);
  EXPECT_NEAR(quantize_dequantize(0.0, p), 0.0, 1e-12);
  EXPECT_NEAR(quantize_dequantize(2.54, p), 2.54, p.scale / 2);
}

TEST(FitQuantParams, NonFiniteRejected) {
  EXPECT_THROW(TensorSample({1.0, std::nan("")}), ValidationError);
  EXPECT_THROW(TensorSample({std::numeric_limits<double>::infinity()}), ValidationError);
}

TEST(QuantizeDequantize, ZeroAndGridPointsExact) {
  const QuantParams p = fit_quant_params(TensorSample({-3.0, 2.0}));
  EXPECT_EQ(quantize_dequantize(0.0, p), 0.0);
  for (int k = -127; k <= 127; ++k)
    EXPECT_EQ(quantize_dequantize(k * p.scale, p), k * p.scale) << k;
}

TEST(QuantizeDequantize, ErrorBoundedByHalfScaleExhaustively) {
  std::mt19937_64 rng(2024);
  const auto t = random_tensor(rng, 4096, -1.0, 1.0);
  const auto p = fit_quant_params(t);
  const auto q = quantize_dequantize(t, p);
  for (std::size_t i = 0; i < t.size(); ++i)
    ASSERT_LE(std::fabs(q.values()[i] - t.values()[i]), p.scale / 2 * (1 + 1e-12));
}

TEST(QuantizeDequantize, ClampsOutOfRange) {
  QuantParams p;
  p.scale = 0.1;
  EXPECT_DOUBLE_EQ(quantize_dequantize(100.0, p), 12.7);
  EXPECT_DOUBLE_EQ(quantize_dequantize(-100.0, p), -12.8);
}

TEST(QuantizeDequantize, InvalidParams) {
  QuantParams p;
  p.scale = 0.0;
  EXPECT_THROW(quantize_dequantize(TensorSample({1.0}), p), ContractError);
  p.scale = 1.0;
  p.zero_point = 3;
  EXPECT_THROW(quantize_dequantize(TensorSample({1.0}), p), ContractError);
}

TEST(RoundFp16, Examples) {
  EXPECT_EQ(round_to_fp16(1.0), 1.0);
  EXPECT_EQ(round_to_fp16(1.0 + std::ldexp(1.0, -11)), 1.0);
  EXPECT_EQ(oracle::fp16_round(1.0 + std::ldexp(1.0, -11)), 1.0);
  EXPECT_EQ(round_to_fp16(1e6), 65504.0);
  EXPECT_EQ(round_to_fp16(-1e6), -65504.0);
}

TEST(RoundFp16, EveryRepresentableValueIsFixed) {
  for (double v : oracle::fp16_table()) {
    ASSERT_EQ(round_to_fp16(v), v);
    ASSERT_EQ(round_to_fp16(-v), -v);
  }
}

TEST(RoundFp16, MatchesTableOracleIncludingTiesAndSubnormals) {
  const auto &t = oracle::fp16_table();
  // Every midpoint is a tie and must round to the even pattern.
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double mid = 0.5 * (t[i] + t[i + 1]);
    ASSERT_EQ(round_to_fp16(mid), oracle::fp16_round(mid)) << mid;
  }
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> e(-26.0, 17.0);
  for (int i = 0; i < 20000; ++i) {
    const double v = std::exp2(e(rng)) * (rng() & 1 ? 1 : -1);
    ASSERT_EQ(round_to_fp16(v), oracle::fp16_round(v)) << v;
  }
}

TEST(RoundFp16, Monotone) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-70000.0, 70000.0);
  for (int i = 0; i < 20000; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b)
      std::swap(a, b);
    ASSERT_LE(round_to_fp16(a), round_to_fp16(b));
  }
}

TEST(Sqnr, Examples) {
  const TensorSample o({1.0, 0.0, 0.0, 0.0});
  EXPECT_TRUE(std::isinf(sqnr(o, o)));
  EXPECT_NEAR(sqnr(o, TensorSample({0.9, 0.0, 0.0, 0.0})), 20.0, 1e-9);
  EXPECT_THROW(sqnr(TensorSample({0.0, 0.0}), TensorSample({1.0, 0.0})), ContractError);
  EXPECT_THROW(sqnr(o, TensorSample({1.0})), ContractError);
}

TEST(Sqnr, Fp16BeatsInt8OnRandomTensor) {
  std::mt19937_64 rng(17);
  const auto t = random_tensor(rng, 1024, -1.0, 1.0);
  const double s8 = sqnr(t, quantize_dequantize(t, fit_quant_params(t)));
  const double s16 = sqnr(t, round_fp16(t));
  EXPECT_GT(s16, s8);
}
