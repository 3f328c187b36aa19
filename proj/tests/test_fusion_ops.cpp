/* Copyright 2026 The SACC Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "frozen_values.hpp"
#include "sacc/error.hpp"
#include "sacc/fusion_ops.hpp"

namespace sacc {
namespace {

constexpr std::array<double, 4> kAverage{0.25, 0.25, 0.25, 0.25};

FeatureTensor constant(int c, int w, int h, double v, Rational tag = {}) {
  return FeatureTensor(c, w, h, std::vector<double>(static_cast<std::size_t>(c * w * h), v), tag);
}

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(Rational, ReducesAndParses) {
  EXPECT_EQ(Rational(2, 6), Rational(1, 3));
  EXPECT_EQ(Rational::parse("3/12"), Rational(1, 4));
  EXPECT_EQ(Rational(1, 6).str(), "1/6");
  EXPECT_TRUE(Rational(1, 8) < Rational(1, 6));
  EXPECT_THROW(Rational::parse("x/2"), Error);
}

TEST(FeatureTensor, RejectsBadData) {
  EXPECT_THROW(FeatureTensor(2, 2, 2, std::vector<double>(7, 0.0)), Error);
  std::vector<double> d(8, 0.0);
  d[3] = std::nan("");
  EXPECT_THROW(FeatureTensor(2, 2, 2, d), Error);
}

TEST(InterpolationDown, ShapeFollowsPatchGrid) {
  const auto t = FeatureTensor::random(8, 16, 16, 1);
  const auto out = interpolation_down(t, Depthwise2x2::random(8, 2));
  EXPECT_EQ(out.channels(), 8);
  EXPECT_EQ(out.width(), 12);
  EXPECT_EQ(out.height(), 12);
}

TEST(InterpolationDown, TopLeftKernelKeepsConstants) {
  const auto out = interpolation_down(constant(3, 8, 12, 2.5), Depthwise2x2::uniform(3, {1, 0, 0, 0}));
  for (double v : out.data()) EXPECT_DOUBLE_EQ(v, 2.5);
}

TEST(InterpolationDown, SinglePatchWindowMeans) {
  std::vector<double> d(16);
  std::iota(d.begin(), d.end(), 1.0);
  const auto out = interpolation_down(FeatureTensor(1, 4, 4, d), Depthwise2x2::uniform(1, kAverage));
  ASSERT_EQ(out.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(out.data()[i], frozen::kInterpDownPatch[i]);
}

TEST(InterpolationDown, PatchesDoNotLeak) {
  // A spike in one 4x4 patch only reaches that patch's 3x3 output block.
  FeatureTensor t(1, 8, 8);
  t.at(0, 1, 1) = 1.0;
  const auto out = interpolation_down(t, Depthwise2x2::uniform(1, kAverage));
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      if (x >= 3 || y >= 3) EXPECT_EQ(out.at(0, y, x), 0.0);
    }
  }
}

TEST(InterpolationDown, NamesTheConstraint) {
  const auto msg = error_text([] { interpolation_down(FeatureTensor(1, 10, 8), Depthwise2x2::uniform(1, kAverage)); });
  EXPECT_NE(msg.find("divisible by 4"), std::string::npos) << msg;
  EXPECT_THROW(interpolation_down(FeatureTensor(2, 8, 8), Depthwise2x2::uniform(1, kAverage)), Error);
}

TEST(InterpolationUp, ShapeFollowsPatchGrid) {
  const auto out = interpolation_up(FeatureTensor::random(4, 8, 8, 3), Depthwise2x2::random(4, 4));
  EXPECT_EQ(out.channels(), 4);
  EXPECT_EQ(out.width(), 12);
  EXPECT_EQ(out.height(), 12);
}

TEST(InterpolationUp, AveragingKeepsConstants) {
  const auto out = interpolation_up(constant(2, 6, 4, -1.25), Depthwise2x2::uniform(2, kAverage));
  for (double v : out.data()) EXPECT_DOUBLE_EQ(v, -1.25);
}

TEST(InterpolationUp, SinglePatchExpansion) {
  const auto out = interpolation_up(FeatureTensor(1, 2, 2, {1.0, 2.0, 3.0, 5.0}), Depthwise2x2::uniform(1, kAverage));
  ASSERT_EQ(out.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(out.data()[i], frozen::kInterpUpPatch[i]);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 2), 2.0);
  EXPECT_DOUBLE_EQ(out.at(0, 2, 0), 3.0);
  EXPECT_DOUBLE_EQ(out.at(0, 2, 2), 5.0);
  EXPECT_DOUBLE_EQ(out.at(0, 1, 1), 2.75);
}

TEST(InterpolationUp, RejectsOddDims) {
  EXPECT_THROW(interpolation_up(FeatureTensor(1, 5, 4), Depthwise2x2::uniform(1, kAverage)), Error);
}

TEST(ShapeAlgebra, DownThenUpScalesByNineEighths) {
  for (int n : {8, 16, 32, 48}) {
    const auto t = FeatureTensor::random(2, n, 2 * n, static_cast<std::uint64_t>(n));
    const auto d = interpolation_down(t, Depthwise2x2::random(2, 1));
    const auto u = interpolation_up(d, Depthwise2x2::random(2, 2));
    EXPECT_EQ(u.width() * 8, n * 9);
    EXPECT_EQ(u.height() * 8, 2 * n * 9);
  }
}

TEST(ScaleTags, GridRatios) {
  EXPECT_EQ(*grid_ratio(Rational(1, 4)), Rational(1, 4));
  EXPECT_EQ(*grid_ratio(Rational(1, 3)), Rational(3, 8));
  EXPECT_EQ(*grid_ratio(Rational(1, 6)), Rational(3, 16));
  EXPECT_FALSE(grid_ratio(Rational(1, 5)).has_value());
  EXPECT_EQ(*scale_transform(Rational(1, 2), Rational(1, 3)), ScaleTransform::kInterpDown);
  EXPECT_EQ(*scale_transform(Rational(1, 4), Rational(1, 3)), ScaleTransform::kInterpUp);
  EXPECT_EQ(*scale_transform(Rational(1, 6), Rational(1, 6)), ScaleTransform::kIdentity);
  EXPECT_FALSE(scale_transform(Rational(1, 2), Rational(1, 8)).has_value());
}

TEST(SfmFuse, AdjacentInputsMeetOnTheTargetGrid) {
  const FeatureTensor a = FeatureTensor::random(6, 24, 24, 1, Rational(1, 2));
  const FeatureTensor b = FeatureTensor::random(4, 12, 12, 2, Rational(1, 4));
  const std::vector<FeatureTensor> in{a, b};
  const std::vector<int> ch{6, 4};
  const auto w = SfmWeights::random(ch, 8, 5, 3);
  const auto out = sfm_fuse(in, Rational(1, 3), w);
  EXPECT_EQ(out.width(), 18);
  EXPECT_EQ(out.height(), 18);
  EXPECT_EQ(out.channels(), 5);
  EXPECT_EQ(out.scale_tag(), Rational(1, 3));
}

TEST(SfmFuse, SingleInputAtTarget) {
  const std::vector<FeatureTensor> in{FeatureTensor::random(3, 10, 7, 5, Rational(1, 4))};
  const std::vector<int> ch{3};
  const auto w = SfmWeights::random(ch, 4, 6, 9);
  const auto out = sfm_fuse(in, Rational(1, 4), w);
  EXPECT_EQ(out.width(), 10);
  EXPECT_EQ(out.height(), 7);
  EXPECT_EQ(out.channels(), 6);
  const auto ref = conv2d(conv2d(in[0], w.merge), w.refine);
  ASSERT_EQ(ref.size(), out.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_DOUBLE_EQ(out.data()[i], ref.data()[i]);
}

TEST(SfmFuse, OutputChannelsIndependentOfInputCount) {
  const FeatureTensor a = FeatureTensor::random(2, 48, 48, 1, Rational(1, 2));
  const FeatureTensor b = FeatureTensor::random(2, 24, 24, 2, Rational(1, 4));
  const FeatureTensor c = FeatureTensor::random(2, 36, 36, 3, Rational(1, 3));
  const std::vector<int> two{2, 2}, three{2, 2, 2};
  EXPECT_EQ(sfm_fuse(std::vector<FeatureTensor>{a, b}, Rational(1, 3), SfmWeights::random(two, 4, 7, 1)).channels(), 7);
  EXPECT_EQ(sfm_fuse(std::vector<FeatureTensor>{a, b, c}, Rational(1, 3), SfmWeights::random(three, 4, 7, 1)).channels(), 7);
}

TEST(SfmFuse, UnreachableTargetListsLegalOnes) {
  const std::vector<FeatureTensor> in{FeatureTensor::random(2, 16, 16, 1, Rational(1, 2))};
  const std::vector<int> ch{2};
  const auto w = SfmWeights::random(ch, 2, 2, 1);
  const auto msg = error_text([&] { sfm_fuse(in, Rational(1, 8), w); });
  EXPECT_NE(msg.find("unreachable"), std::string::npos) << msg;
  EXPECT_NE(msg.find("1/3"), std::string::npos) << msg;
}

TEST(SfmFuse, MismatchedMergeSizesFail) {
  const FeatureTensor a = FeatureTensor::random(2, 24, 24, 1, Rational(1, 2));
  const FeatureTensor b = FeatureTensor::random(2, 16, 16, 2, Rational(1, 4));
  const std::vector<int> ch{2, 2};
  EXPECT_THROW(sfm_fuse(std::vector<FeatureTensor>{a, b}, Rational(1, 3), SfmWeights::random(ch, 2, 2, 1)), Error);
}

TEST(IfmBlock, IdentityOnOneLayer) {
  const auto t = FeatureTensor::random(5, 7, 3, 8);
  const std::vector<FeatureTensor> in{t};
  const auto out = ifm_block(in, Conv2d::identity(5));
  EXPECT_EQ(out.data(), t.data());
}

TEST(IfmBlock, ThreeBlocksOfSixtyFour) {
  const std::vector<FeatureTensor> in{FeatureTensor::random(64, 6, 5, 1), FeatureTensor::random(64, 6, 5, 2),
                                      FeatureTensor::random(64, 6, 5, 3)};
  const auto fuse = Conv2d::random(192, 128, 1, 4);
  EXPECT_EQ(fuse.param_count(), 192 * 128 + 128);
  const auto out = ifm_block(in, fuse);
  EXPECT_EQ(out.channels(), 128);
  EXPECT_EQ(out.width(), 6);
  EXPECT_EQ(out.height(), 5);
}

TEST(IfmBlock, PermutedInputsWithPermutedWeights) {
  const std::vector<FeatureTensor> in{FeatureTensor::random(2, 4, 4, 1), FeatureTensor::random(3, 4, 4, 2),
                                      FeatureTensor::random(1, 4, 4, 3)};
  const auto fuse = Conv2d::random(6, 4, 1, 7);
  // Block order (2, 0, 1): input channels of the permuted concat map back to original ones.
  const std::vector<FeatureTensor> perm{in[2], in[0], in[1]};
  const std::vector<int> src{5, 0, 1, 2, 3, 4};
  Conv2d pf = fuse;
  for (int o = 0; o < 4; ++o) {
    for (int i = 0; i < 6; ++i) pf.w(o, i, 0, 0) = fuse.w(o, src[static_cast<std::size_t>(i)], 0, 0);
  }
  const auto a = ifm_block(in, fuse);
  const auto b = ifm_block(perm, pf);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-15);
}

TEST(IfmBlock, SpatialMismatch) {
  const std::vector<FeatureTensor> in{FeatureTensor(1, 4, 4), FeatureTensor(1, 4, 5)};
  EXPECT_THROW(ifm_block(in, Conv2d::identity(2)), Error);
}

TEST(ScbSplitBlock, ChannelsAndPathIndependence) {
  const auto t = FeatureTensor::random(64, 6, 6, 1);
  auto w = ScbWeights::random(64, 40, 24, 2);
  EXPECT_EQ(w.heavy1.in_channels, 32);
  EXPECT_EQ(w.light1.in_channels, 32);
  const auto out = scb_split_block(t, w);
  EXPECT_EQ(out.channels(), 64);

  auto zl = w;
  zl.light2 = Conv2d::zeros(zl.light2.in_channels, zl.light2.out_channels, 3);
  const auto o2 = scb_split_block(t, zl);
  const std::size_t plane = 36;
  for (std::size_t i = 0; i < 40 * plane; ++i) EXPECT_EQ(o2.data()[i], out.data()[i]);
  for (std::size_t i = 40 * plane; i < o2.size(); ++i) EXPECT_EQ(o2.data()[i], 0.0);
}

TEST(ScbSplitBlock, OddChannels) {
  EXPECT_THROW(scb_split_block(FeatureTensor(3, 4, 4), ScbWeights::random(4, 2, 2, 1)), Error);
}

TEST(ScbSplitBlock, FewerParametersThanFullWidth) {
  const int C = 64;
  const auto w = ScbWeights::random(C, C / 2, C / 2, 1);
  const long long split =
      w.heavy1.param_count() + w.heavy2.param_count() + w.light1.param_count() + w.light2.param_count();
  const long long full = Conv2d::zeros(C, C, 3).param_count() * 2;
  EXPECT_LT(split, full);
  // 28800 / 73856 for C = 64.
  EXPECT_NEAR(static_cast<double>(split) / static_cast<double>(full), 0.3888, 0.01);
}

TEST(CountParamsMacs, SingleConv) {
  const std::vector<LayerSpec> g{{LayerKind::kConv, 3, 1, 3, 64, 1}};
  const auto c = count_params_macs(g, {3, 224, 224});
  EXPECT_EQ(c.params, 1792);
  EXPECT_EQ(c.macs, 86704128);
  EXPECT_EQ(c.layers[0].out.width, 224);
}

TEST(CountParamsMacs, EmptyGraph) {
  const auto c = count_params_macs({}, {3, 8, 8});
  EXPECT_EQ(c.params, 0);
  EXPECT_EQ(c.macs, 0);
}

TEST(CountParamsMacs, PointwiseConv) {
  const std::vector<LayerSpec> g{{LayerKind::kConv, 1, 1, 192, 128, std::nullopt}};
  EXPECT_EQ(count_params_macs(g, {192, 10, 10}).params, 24704);
}

TEST(CountParamsMacs, ShapeErrorNamesTheLayer) {
  const std::vector<LayerSpec> g{{LayerKind::kConv, 3, 1, 3, 8, 1}, {LayerKind::kPool, 2, 2, 8, 8, std::nullopt},
                                 {LayerKind::kConv, 3, 1, 16, 8, 1}};
  const auto msg = error_text([&] { count_params_macs(g, {3, 32, 32}); });
  EXPECT_NE(msg.find("layer 2"), std::string::npos) << msg;
}

TEST(CountParamsMacs, PoolAndInterpolation) {
  const std::vector<LayerSpec> g{{LayerKind::kPool, 2, 2, 4, 4, std::nullopt},
                                 {LayerKind::kInterpDown, 2, 1, 4, 4, std::nullopt},
                                 {LayerKind::kInterpUp, 2, 1, 4, 4, std::nullopt}};
  const auto c = count_params_macs(g, {4, 32, 32});
  EXPECT_EQ(c.layers[0].params, 0);
  EXPECT_EQ(c.layers[1].out.width, 12);
  EXPECT_EQ(c.layers[2].out.width, 18);
  EXPECT_EQ(c.layers[1].params, 4 * 4 + 4);
  EXPECT_EQ(c.layers[1].macs, 4 * 4 * 12 * 12);
}

TEST(GraphConfig, ParsesAndCounts) {
  std::istringstream in(
      "# toy\n"
      "input 3 224 224\n"
      "conv 3 1 3 64 1\n"
      "pool 2 2 64 64\n"
      "conv 1 1 64 32\n");
  const auto g = parse_graph(in);
  ASSERT_TRUE(g.input.has_value());
  ASSERT_EQ(g.layers.size(), 3u);
  EXPECT_EQ(g.layers[1].kind, LayerKind::kPool);
  const auto c = count_params_macs(g.layers, *g.input);
  EXPECT_EQ(c.params, 1792 + 64 * 32 + 32);
  std::ostringstream csv;
  write_count_csv(csv, c);
  EXPECT_EQ(csv.str().rfind("index,kind,", 0), 0u);
  EXPECT_NE(csv.str().find("total,,,,,,,," + std::to_string(c.params)), std::string::npos);
}

TEST(GraphConfig, BadLines) {
  std::istringstream unknown("warp 3 1 3 3\n");
  EXPECT_THROW(parse_graph(unknown), Error);
  std::istringstream zero("conv 0 1 3 3\n");
  EXPECT_THROW(parse_graph(zero), Error);
}

TEST(SfmScales, AllFusionTargetsReachableFromThePoolingLadder) {
  const auto scales = enumerate_sfm_scales(3, 448);
  for (const Rational r : {Rational(1, 2), Rational(1, 3), Rational(1, 4), Rational(1, 6), Rational(1, 8)}) {
    ASSERT_TRUE(scales.count(r)) << r.str();
  }
  EXPECT_EQ(scales.at(Rational(1, 2)), 224);
  EXPECT_EQ(scales.at(Rational(1, 3)), 168);
  EXPECT_EQ(scales.at(Rational(1, 6)), 84);
}

TEST(Linearity, SuperpositionHoldsForEveryOp) {
  const double a = 0.7, b = -1.9;
  auto check = [&](const FeatureTensor& x, const FeatureTensor& y, const auto& op) {
    FeatureTensor mix = x;
    for (std::size_t i = 0; i < mix.size(); ++i) mix.data()[i] = a * x.data()[i] + b * y.data()[i];
    const auto fx = op(x), fy = op(y), fm = op(mix);
    double scale = 0.0;
    for (std::size_t i = 0; i < fm.size(); ++i) scale = std::max(scale, std::abs(fm.data()[i]));
    for (std::size_t i = 0; i < fm.size(); ++i) {
      EXPECT_NEAR(fm.data()[i], a * fx.data()[i] + b * fy.data()[i], 1e-10 * scale);
    }
  };
  const auto x = FeatureTensor::random(4, 16, 16, 1, Rational(1, 2));
  const auto y = FeatureTensor::random(4, 16, 16, 2, Rational(1, 2));
  const auto dw = Depthwise2x2::random(4, 3);
  check(x, y, [&](const FeatureTensor& t) { return interpolation_down(t, dw); });
  check(x, y, [&](const FeatureTensor& t) { return interpolation_up(t, dw); });
  const std::vector<int> ch{4};
  const auto sw = SfmWeights::random(ch, 6, 3, 4);
  check(x, y, [&](const FeatureTensor& t) { return sfm_fuse(std::vector<FeatureTensor>{t}, Rational(1, 3), sw); });
  const auto fuse = Conv2d::random(8, 5, 1, 5);
  check(x, y, [&](const FeatureTensor& t) { return ifm_block(std::vector<FeatureTensor>{t, t}, fuse); });
  const auto scb = ScbWeights::random(4, 3, 3, 6);
  check(x, y, [&](const FeatureTensor& t) { return scb_split_block(t, scb); });
}

}  // namespace
}  // namespace sacc
